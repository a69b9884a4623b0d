//! Compilation of the configured rule tables into regexes.

use std::collections::BTreeMap;

use regex::Regex;

use crate::config::{Config, RuleSpec, StructuredRules};
use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub(crate) struct CompiledRule {
    pub id: String,
    pub regex: Regex,
    pub tag: Option<String>,
}

#[derive(Debug, Clone)]
pub(crate) struct StructuredPatterns {
    pub victim_age: Vec<CompiledRule>,
    pub perpetrator_age: Vec<CompiledRule>,
    pub victim_count: Vec<CompiledRule>,
    pub victim_gender: Vec<CompiledRule>,
    pub platforms: Vec<CompiledRule>,
    pub evidence_images: Vec<CompiledRule>,
    pub evidence_videos: Vec<CompiledRule>,
    pub evidence_messages: Vec<CompiledRule>,
    pub evidence_storage: Vec<CompiledRule>,
    pub prosecution: Vec<CompiledRule>,
    pub charges: Vec<CompiledRule>,
    pub jail_info: Vec<CompiledRule>,
    pub investigation_type: Vec<CompiledRule>,
    pub agencies: Vec<CompiledRule>,
    pub registered_sex_offender: Vec<CompiledRule>,
}

/// One keyword of a semantic or phrase table. The `kw` group spans the
/// keyword itself, excluding any boundary guard characters.
#[derive(Debug, Clone)]
pub(crate) struct KeywordRule {
    pub rule_id: String,
    pub regex: Regex,
}

pub(crate) type KeywordTable = BTreeMap<String, Vec<KeywordRule>>;

#[derive(Debug, Clone)]
pub(crate) struct CompiledPatterns {
    pub structured: StructuredPatterns,
    pub semantic: BTreeMap<String, KeywordTable>,
    pub phrases: KeywordTable,
}

impl CompiledPatterns {
    pub fn compile(config: &Config) -> Result<Self> {
        let structured = compile_structured(&config.structured)?;
        let semantic = config
            .semantic
            .iter()
            .map(|(category, features)| {
                compile_keyword_table(category, features, false).map(|t| (category.clone(), t))
            })
            .collect::<Result<_>>()?;
        let phrases = compile_keyword_table("severity_phrases", &config.severity_phrases, true)?;
        Ok(Self {
            structured,
            semantic,
            phrases,
        })
    }
}

fn compile_rules(rules: &[RuleSpec]) -> Result<Vec<CompiledRule>> {
    rules
        .iter()
        .map(|spec| {
            let regex = Regex::new(&format!("(?i){}", spec.pattern)).map_err(|source| {
                Error::Pattern {
                    rule_id: spec.id.clone(),
                    source,
                }
            })?;
            Ok(CompiledRule {
                id: spec.id.clone(),
                regex,
                tag: spec.tag.clone(),
            })
        })
        .collect()
}

fn compile_structured(rules: &StructuredRules) -> Result<StructuredPatterns> {
    Ok(StructuredPatterns {
        victim_age: compile_rules(&rules.victim_age)?,
        perpetrator_age: compile_rules(&rules.perpetrator_age)?,
        victim_count: compile_rules(&rules.victim_count)?,
        victim_gender: compile_rules(&rules.victim_gender)?,
        platforms: compile_rules(&rules.platforms)?,
        evidence_images: compile_rules(&rules.evidence_images)?,
        evidence_videos: compile_rules(&rules.evidence_videos)?,
        evidence_messages: compile_rules(&rules.evidence_messages)?,
        evidence_storage: compile_rules(&rules.evidence_storage)?,
        prosecution: compile_rules(&rules.prosecution)?,
        charges: compile_rules(&rules.charges)?,
        jail_info: compile_rules(&rules.jail_info)?,
        investigation_type: compile_rules(&rules.investigation_type)?,
        agencies: compile_rules(&rules.agencies)?,
        registered_sex_offender: compile_rules(&rules.registered_sex_offender)?,
    })
}

fn compile_keyword_table(
    category: &str,
    features: &BTreeMap<String, Vec<String>>,
    whole_word: bool,
) -> Result<KeywordTable> {
    features
        .iter()
        .map(|(feature, keywords)| {
            let rules = keywords
                .iter()
                .filter(|k| !k.trim().is_empty())
                .map(|keyword| {
                    let rule_id = format!("{category}.{feature}:{keyword}");
                    let regex = Regex::new(&keyword_pattern(keyword, whole_word)).map_err(
                        |source| Error::Pattern {
                            rule_id: rule_id.clone(),
                            source,
                        },
                    )?;
                    Ok(KeywordRule { rule_id, regex })
                })
                .collect::<Result<Vec<_>>>()?;
            Ok((feature.clone(), rules))
        })
        .collect()
}

enum Token {
    Literal(char),
    Space,
    Class(String),
}

impl Token {
    fn is_digitish(&self) -> bool {
        match self {
            Token::Literal(c) => c.is_ascii_digit(),
            Token::Class(body) => body.chars().any(|c| c.is_ascii_digit()),
            Token::Space => false,
        }
    }
}

fn tokenize(keyword: &str) -> Vec<Token> {
    let chars: Vec<char> = keyword.trim().chars().collect();
    let mut tokens = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        if c == '[' {
            if let Some(close) = chars[i + 1..].iter().position(|&x| x == ']') {
                let body: String = chars[i + 1..i + 1 + close].iter().collect();
                if !body.is_empty() && body.chars().all(|x| x.is_ascii_alphanumeric() || x == '-') {
                    tokens.push(Token::Class(body));
                    i += close + 2;
                    continue;
                }
            }
        }
        if c.is_whitespace() {
            if !matches!(tokens.last(), Some(Token::Space)) {
                tokens.push(Token::Space);
            }
        } else {
            tokens.push(Token::Literal(c));
        }
        i += 1;
    }
    tokens
}

/// Builds the regex for one keyword.
///
/// Keywords are literal substrings except for bracketed ranges like `[5-9]`,
/// which become character classes. Spaces match any whitespace run. A keyword
/// that starts or ends with a digit may not touch another digit, so
/// "[5-9] years old" does not fire on "15 years old" and "under 5" does not
/// fire on "under 50". `whole_word` adds word boundaries instead.
pub(crate) fn keyword_pattern(keyword: &str, whole_word: bool) -> String {
    let tokens = tokenize(keyword);
    let mut body = String::new();
    for token in &tokens {
        match token {
            Token::Literal(c) => body.push_str(&regex::escape(&c.to_string())),
            Token::Space => body.push_str(r"\s+"),
            Token::Class(class) => {
                body.push('[');
                body.push_str(class);
                body.push(']');
            }
        }
    }
    let (prefix, suffix) = if whole_word {
        (r"\b", r"\b")
    } else {
        let starts = tokens.first().is_some_and(Token::is_digitish);
        let ends = tokens.last().is_some_and(Token::is_digitish);
        (
            if starts { "(?:^|[^0-9])" } else { "" },
            if ends { "(?:[^0-9]|$)" } else { "" },
        )
    };
    format!("(?i){prefix}(?P<kw>{body}){suffix}")
}
