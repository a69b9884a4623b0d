//! Aggregate statistics, keyword frequencies and tag-based filtering.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::cluster::SubGroup;
use crate::config::{Config, InsightsConfig};
use crate::error::{Error, Result};
use crate::extractor::{vocab, CaseRecord, HighlightSpan};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TagStat {
    pub tag: String,
    pub count: usize,
    pub percent: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairCount {
    pub a: String,
    pub b: String,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct YearTagCount {
    pub year: i32,
    pub tag: String,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct KeywordCount {
    pub token: String,
    pub frequency: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PatternSummary {
    pub rso_count: usize,
    pub rso_percent: f64,
    pub stranger_count: usize,
    pub stranger_percent: f64,
    pub family_count: usize,
    pub family_percent: f64,
    /// Most frequent case topic; ties go to the alphabetically first.
    pub dominant_case_type: Option<String>,
    pub investigation_stats: Vec<TagStat>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InsightReport {
    pub total_cases: usize,
    pub platform_stats: Vec<TagStat>,
    pub severity_distribution: Vec<TagStat>,
    pub topic_stats: Vec<TagStat>,
    pub patterns: PatternSummary,
    pub topic_cooccurrence: Vec<PairCount>,
    pub platform_severity: Vec<PairCount>,
    pub platform_trends: Vec<YearTagCount>,
    pub keywords_global: Vec<KeywordCount>,
    pub keywords_per_group: BTreeMap<String, Vec<KeywordCount>>,
}

/// `count / total` as a percentage rounded to one decimal; 0 when `total` is 0.
pub fn percent(count: usize, total: usize) -> f64 {
    if total == 0 {
        return 0.0;
    }
    (count as f64 * 1000.0 / total as f64).round() / 10.0
}

fn tag_stats<'a>(sets: impl Iterator<Item = &'a BTreeSet<String>>, total: usize) -> Vec<TagStat> {
    let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
    for set in sets {
        for tag in set {
            *counts.entry(tag).or_default() += 1;
        }
    }
    let mut stats: Vec<TagStat> = counts
        .into_iter()
        .map(|(tag, count)| TagStat {
            tag: tag.to_string(),
            count,
            percent: percent(count, total),
        })
        .collect();
    stats.sort_by(|a, b| b.count.cmp(&a.count).then_with(|| a.tag.cmp(&b.tag)));
    stats
}

fn pair_counts<'a>(pairs: impl Iterator<Item = (&'a BTreeSet<String>, &'a BTreeSet<String>)>, same: bool) -> Vec<PairCount> {
    let mut counts: BTreeMap<(String, String), usize> = BTreeMap::new();
    for (xs, ys) in pairs {
        for x in xs {
            for y in ys {
                if same && x >= y {
                    continue;
                }
                *counts.entry((x.clone(), y.clone())).or_default() += 1;
            }
        }
    }
    let mut out: Vec<PairCount> = counts
        .into_iter()
        .map(|((a, b), count)| PairCount { a, b, count })
        .collect();
    out.sort_by(|p, q| q.count.cmp(&p.count).then_with(|| (&p.a, &p.b).cmp(&(&q.a, &q.b))));
    out
}

/// Lowercase alphabetic tokens with a minimum length and a stopword list.
#[derive(Debug, Clone)]
pub struct KeywordExtractor {
    min_len: usize,
    stopwords: HashSet<String>,
}

impl KeywordExtractor {
    pub fn new(min_len: usize, stopwords: impl IntoIterator<Item = String>) -> Self {
        Self {
            min_len,
            stopwords: stopwords.into_iter().map(|s| s.to_lowercase()).collect(),
        }
    }

    pub fn from_config(config: &InsightsConfig) -> Self {
        Self::new(config.keyword_min_len, config.stopwords.iter().cloned())
    }

    pub fn tokens<'t>(&'t self, text: &'t str) -> impl Iterator<Item = String> + 't {
        text.split(|c: char| !c.is_alphabetic())
            .filter(|t| !t.is_empty())
            .map(str::to_lowercase)
            .filter(|t| t.chars().count() >= self.min_len && !self.stopwords.contains(t))
    }

    /// The `top_k` most frequent tokens, ties broken alphabetically.
    pub fn extract<S: AsRef<str>>(&self, texts: &[S], top_k: usize) -> Vec<KeywordCount> {
        let mut counts: HashMap<String, usize> = HashMap::new();
        for text in texts {
            for token in self.tokens(text.as_ref()) {
                *counts.entry(token).or_default() += 1;
            }
        }
        let mut ranked: Vec<KeywordCount> = counts
            .into_iter()
            .map(|(token, frequency)| KeywordCount { token, frequency })
            .collect();
        ranked.sort_by(|a, b| b.frequency.cmp(&a.frequency).then_with(|| a.token.cmp(&b.token)));
        ranked.truncate(top_k);
        ranked
    }
}

impl Default for KeywordExtractor {
    fn default() -> Self {
        Self::from_config(&Config::default().insights)
    }
}

/// Keyword ranking with the default token rules.
pub fn extract_keywords<S: AsRef<str>>(texts: &[S], top_k: usize) -> Vec<KeywordCount> {
    KeywordExtractor::default().extract(texts, top_k)
}

pub fn compute_insights(records: &[CaseRecord], groups: &[SubGroup], config: &InsightsConfig) -> InsightReport {
    let n = records.len();
    let features = || records.iter().map(|r| &r.features);

    let topic_stats = tag_stats(features().map(|f| &f.case_topics), n);
    let rso_count = features().filter(|f| f.registered_sex_offender).count();
    let stranger_count = features()
        .filter(|f| f.relationship_to_victim == vocab::DEFAULT_RELATIONSHIP)
        .count();
    let family_count = features().filter(|f| f.case_topics.contains("family")).count();

    let mut trends: BTreeMap<(i32, String), usize> = BTreeMap::new();
    for r in records {
        for p in &r.features.platforms {
            *trends.entry((r.year, p.clone())).or_default() += 1;
        }
    }

    let keywords = KeywordExtractor::from_config(config);
    let texts: Vec<&str> = records.iter().map(|r| r.raw_text.as_str()).collect();
    let by_id: HashMap<&str, &str> = records.iter().map(|r| (r.case_id.as_str(), r.raw_text.as_str())).collect();
    let keywords_per_group = groups
        .iter()
        .map(|g| {
            let member_texts: Vec<&str> = g
                .member_case_ids
                .iter()
                .filter_map(|id| by_id.get(id.as_str()).copied())
                .collect();
            (g.group_id.clone(), keywords.extract(&member_texts, config.top_keywords))
        })
        .collect();

    InsightReport {
        total_cases: n,
        platform_stats: tag_stats(features().map(|f| &f.platforms), n),
        severity_distribution: tag_stats(features().map(|f| &f.severity_indicators), n),
        patterns: PatternSummary {
            rso_count,
            rso_percent: percent(rso_count, n),
            stranger_count,
            stranger_percent: percent(stranger_count, n),
            family_count,
            family_percent: percent(family_count, n),
            dominant_case_type: topic_stats.first().map(|s| s.tag.clone()),
            investigation_stats: tag_stats(features().map(|f| &f.investigation_type), n),
        },
        topic_stats,
        topic_cooccurrence: pair_counts(features().map(|f| (&f.case_topics, &f.case_topics)), true),
        platform_severity: pair_counts(features().map(|f| (&f.platforms, &f.severity_indicators)), false),
        platform_trends: trends
            .into_iter()
            .map(|((year, tag), count)| YearTagCount { year, tag, count })
            .collect(),
        keywords_global: keywords.extract(&texts, config.top_keywords),
        keywords_per_group,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TagCategory {
    CaseTopics,
    SeverityIndicators,
    Platforms,
    InvestigationTypes,
    Relationships,
    Rso,
}

impl TagCategory {
    pub const ALL: [TagCategory; 6] = [
        TagCategory::CaseTopics,
        TagCategory::SeverityIndicators,
        TagCategory::Platforms,
        TagCategory::InvestigationTypes,
        TagCategory::Relationships,
        TagCategory::Rso,
    ];

    pub fn name(self) -> &'static str {
        match self {
            TagCategory::CaseTopics => "case_topics",
            TagCategory::SeverityIndicators => "severity_indicators",
            TagCategory::Platforms => "platforms",
            TagCategory::InvestigationTypes => "investigation_types",
            TagCategory::Relationships => "relationships",
            TagCategory::Rso => "rso",
        }
    }

    pub fn parse(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|c| c.name() == name)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Tag {
    pub category: TagCategory,
    pub tag: String,
}

impl Tag {
    pub fn new(category: TagCategory, tag: impl Into<String>) -> Self {
        Self {
            category,
            tag: tag.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct TagQuery {
    pub selected_tags: BTreeSet<Tag>,
}

impl TagQuery {
    pub fn new(tags: impl IntoIterator<Item = Tag>) -> Self {
        Self {
            selected_tags: tags.into_iter().collect(),
        }
    }
}

/// Closed vocabulary of every filter category.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TagVocabulary {
    pub categories: BTreeMap<TagCategory, Vec<String>>,
}

impl TagVocabulary {
    pub fn from_config(config: &Config) -> Self {
        let strings = |items: &[&str]| items.iter().map(|s| s.to_string()).collect::<Vec<_>>();
        let mut relationships: BTreeSet<String> = config
            .semantic
            .get(vocab::CASE_TOPICS_CATEGORY)
            .and_then(|t| t.get("family"))
            .map(|kws| kws.iter().map(|k| k.to_lowercase()).collect())
            .unwrap_or_default();
        relationships.insert(vocab::DEFAULT_RELATIONSHIP.to_string());
        Self {
            categories: BTreeMap::from([
                (TagCategory::CaseTopics, strings(vocab::CASE_TOPICS)),
                (TagCategory::SeverityIndicators, strings(vocab::SEVERITY_INDICATORS)),
                (TagCategory::Platforms, strings(vocab::PLATFORMS)),
                (TagCategory::InvestigationTypes, strings(vocab::INVESTIGATION_TYPES)),
                (TagCategory::Relationships, relationships.into_iter().collect()),
                (TagCategory::Rso, strings(&["true", "false"])),
            ]),
        }
    }

    pub fn contains(&self, tag: &Tag) -> bool {
        self.categories
            .get(&tag.category)
            .is_some_and(|v| v.contains(&tag.tag))
    }

    pub fn check(&self, query: &TagQuery) -> Result<()> {
        if query.selected_tags.is_empty() {
            return Err(Error::InvalidQuery("select at least one tag".into()));
        }
        match query.selected_tags.iter().find(|t| !self.contains(t)) {
            Some(t) => Err(Error::UnknownTag {
                category: t.category.name().to_string(),
                tag: t.tag.clone(),
            }),
            None => Ok(()),
        }
    }
}

/// Why a returned case satisfies one selected tag.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TagJustification {
    pub tag: Tag,
    pub spans: Vec<HighlightSpan>,
    /// Set for default-valued tags, which hold by absence of evidence.
    pub default_no_span: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FilterHit<'a> {
    pub record: &'a CaseRecord,
    pub justifications: Vec<TagJustification>,
}

/// Whether `record` carries `tag`.
pub fn has_tag(record: &CaseRecord, tag: &Tag) -> bool {
    let f = &record.features;
    match tag.category {
        TagCategory::CaseTopics => f.case_topics.contains(&tag.tag),
        TagCategory::SeverityIndicators => f.severity_indicators.contains(&tag.tag),
        TagCategory::Platforms => f.platforms.contains(&tag.tag),
        TagCategory::InvestigationTypes => f.investigation_type.contains(&tag.tag),
        TagCategory::Relationships => f.relationship_to_victim == tag.tag,
        TagCategory::Rso => match tag.tag.as_str() {
            "true" => f.registered_sex_offender,
            "false" => !f.registered_sex_offender,
            _ => false,
        },
    }
}

fn justify(record: &CaseRecord, tag: &Tag) -> TagJustification {
    let path = match tag.category {
        TagCategory::CaseTopics => Some(format!("case_topics.{}", tag.tag)),
        TagCategory::SeverityIndicators => Some(format!("severity_indicators.{}", tag.tag)),
        TagCategory::Platforms => Some(format!("platforms.{}", tag.tag)),
        TagCategory::InvestigationTypes => Some(format!("investigation_type.{}", tag.tag)),
        TagCategory::Relationships if tag.tag != vocab::DEFAULT_RELATIONSHIP => {
            Some("relationship_to_victim".to_string())
        }
        TagCategory::Rso if tag.tag == "true" => Some("registered_sex_offender".to_string()),
        _ => None,
    };
    match path {
        Some(path) => TagJustification {
            tag: tag.clone(),
            spans: record.spans_for(&path).cloned().collect(),
            default_no_span: false,
        },
        None => TagJustification {
            tag: tag.clone(),
            spans: Vec::new(),
            default_no_span: true,
        },
    }
}

/// Cases carrying every selected tag, with the spans that justify each tag.
pub fn filter_by_tags<'a>(
    records: &'a [CaseRecord],
    query: &TagQuery,
    vocabulary: &TagVocabulary,
) -> Result<Vec<FilterHit<'a>>> {
    vocabulary.check(query)?;
    Ok(records
        .iter()
        .filter(|r| query.selected_tags.iter().all(|t| has_tag(r, t)))
        .map(|record| FilterHit {
            record,
            justifications: query.selected_tags.iter().map(|t| justify(record, t)).collect(),
        })
        .collect())
}
