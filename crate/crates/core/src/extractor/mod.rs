//! Rule-based feature extraction with source-span provenance.
//!
//! Every populated feature (other than the "stranger" relationship default and
//! a false offender flag) is backed by at least one [`HighlightSpan`] whose
//! byte range slices the case text to exactly `matched_text`.

mod patterns;
mod semantic;
mod structured;
mod validate;
pub mod vocab;

use std::collections::BTreeSet;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use crate::batcher::CaseSegment;
use crate::config::Config;
use crate::error::{Error, Result};
use patterns::CompiledPatterns;

pub use validate::{validate, IssueSeverity, ValidationIssue};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum StorageUnit {
    GB,
    TB,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StorageAmount {
    pub magnitude: f64,
    pub unit: StorageUnit,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FeatureSet {
    pub perpetrator_age: Option<u32>,
    pub registered_sex_offender: bool,
    pub relationship_to_victim: String,
    pub victim_count: Option<u32>,
    pub victim_ages: BTreeSet<u32>,
    pub victim_gender: Option<String>,
    pub platforms: BTreeSet<String>,
    /// Empty means no investigation type was stated.
    pub investigation_type: BTreeSet<String>,
    pub agencies: BTreeSet<String>,
    pub prosecution: BTreeSet<String>,
    pub charges: Vec<String>,
    pub jail_info: Option<String>,
    pub evidence_images: Option<u64>,
    pub evidence_videos: Option<u64>,
    pub evidence_storage: Option<StorageAmount>,
    pub evidence_messages: Option<u64>,
    pub severity_indicators: BTreeSet<String>,
    pub case_topics: BTreeSet<String>,
    pub severity_phrases: BTreeSet<String>,
}

impl Default for FeatureSet {
    fn default() -> Self {
        Self {
            perpetrator_age: None,
            registered_sex_offender: false,
            relationship_to_victim: vocab::DEFAULT_RELATIONSHIP.to_string(),
            victim_count: None,
            victim_ages: BTreeSet::new(),
            victim_gender: None,
            platforms: BTreeSet::new(),
            investigation_type: BTreeSet::new(),
            agencies: BTreeSet::new(),
            prosecution: BTreeSet::new(),
            charges: Vec::new(),
            jail_info: None,
            evidence_images: None,
            evidence_videos: None,
            evidence_storage: None,
            evidence_messages: None,
            severity_indicators: BTreeSet::new(),
            case_topics: BTreeSet::new(),
            severity_phrases: BTreeSet::new(),
        }
    }
}

impl FeatureSet {
    /// Feature paths of every populated, non-default feature. Each one must be
    /// backed by a span with the same `feature_path`.
    pub fn populated_paths(&self) -> Vec<String> {
        let mut paths = Vec::new();
        let mut scalar = |present: bool, name: &str| {
            if present {
                paths.push(name.to_string());
            }
        };
        scalar(self.perpetrator_age.is_some(), "perpetrator_age");
        scalar(self.registered_sex_offender, "registered_sex_offender");
        scalar(
            self.relationship_to_victim != vocab::DEFAULT_RELATIONSHIP,
            "relationship_to_victim",
        );
        scalar(self.victim_count.is_some(), "victim_count");
        scalar(self.victim_gender.is_some(), "victim_gender");
        scalar(!self.charges.is_empty(), "charges");
        scalar(self.jail_info.is_some(), "jail_info");
        scalar(self.evidence_images.is_some(), "evidence_images");
        scalar(self.evidence_videos.is_some(), "evidence_videos");
        scalar(self.evidence_storage.is_some(), "evidence_storage");
        scalar(self.evidence_messages.is_some(), "evidence_messages");
        paths.extend(self.victim_ages.iter().map(|a| format!("victim_ages.{a}")));
        for (prefix, set) in [
            ("platforms", &self.platforms),
            ("investigation_type", &self.investigation_type),
            ("agencies", &self.agencies),
            ("prosecution", &self.prosecution),
            ("severity_indicators", &self.severity_indicators),
            ("case_topics", &self.case_topics),
            ("severity_phrases", &self.severity_phrases),
        ] {
            paths.extend(set.iter().map(|t| format!("{prefix}.{t}")));
        }
        paths
    }
}

/// Byte range of a case text that justifies one extracted feature.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct HighlightSpan {
    pub case_id: String,
    /// e.g. `severity_indicators.infant` or `perpetrator_age`.
    pub feature_path: String,
    /// Byte offset into the case text, inclusive.
    pub start: usize,
    /// Byte offset into the case text, exclusive.
    pub end: usize,
    pub matched_text: String,
    pub rule_id: String,
}

impl HighlightSpan {
    pub(crate) fn new(feature_path: impl Into<String>, rule_id: &str, text: &str, start: usize, end: usize) -> Self {
        Self {
            case_id: String::new(),
            feature_path: feature_path.into(),
            start,
            end,
            matched_text: text[start..end].to_string(),
            rule_id: rule_id.to_string(),
        }
    }

    /// True when the span's range slices `text` to exactly `matched_text`.
    pub fn is_verbatim_in(&self, text: &str) -> bool {
        self.start < self.end && text.get(self.start..self.end) == Some(self.matched_text.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaseRecord {
    pub case_id: String,
    pub source_org: String,
    pub year: i32,
    pub month: String,
    pub raw_text: String,
    pub features: FeatureSet,
    pub spans: Vec<HighlightSpan>,
    pub created_at: DateTime<Utc>,
}

impl CaseRecord {
    pub fn spans_for<'a>(&'a self, feature_path: &'a str) -> impl Iterator<Item = &'a HighlightSpan> + 'a {
        self.spans.iter().filter(move |s| s.feature_path == feature_path)
    }
}

/// Result of one extraction pass: features, their spans, and warnings raised
/// while matching (e.g. conflicting numeric values).
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Extraction<T> {
    pub value: T,
    pub spans: Vec<HighlightSpan>,
    pub warnings: Vec<ValidationIssue>,
}

/// A built record together with its non-blocking validation issues.
#[derive(Debug, Clone, PartialEq)]
pub struct BuiltCase {
    pub record: CaseRecord,
    pub issues: Vec<ValidationIssue>,
}

/// Pattern tables compiled once and shared read-only across cases.
#[derive(Debug, Clone)]
pub struct Extractor {
    patterns: CompiledPatterns,
}

impl Extractor {
    pub fn new(config: &Config) -> Result<Self> {
        Ok(Self {
            patterns: CompiledPatterns::compile(config)?,
        })
    }

    pub fn extract_structured(&self, text: &str) -> Extraction<FeatureSet> {
        structured::extract(&self.patterns.structured, text)
    }

    pub fn extract_semantic(&self, text: &str, category: &str) -> Result<Extraction<BTreeSet<String>>> {
        let table = self
            .patterns
            .semantic
            .get(category)
            .ok_or_else(|| Error::UnknownCategory(category.to_string()))?;
        Ok(semantic::extract_keywords(table, category, text))
    }

    pub fn extract_severity_phrases(&self, text: &str) -> Extraction<BTreeSet<String>> {
        semantic::extract_keywords(&self.patterns.phrases, "severity_phrases", text)
    }

    /// Runs every extractor over the segment text and validates the result.
    /// Error-level issues are returned as [`Error::Validation`].
    pub fn build_case_record(&self, segment: &CaseSegment) -> Result<BuiltCase> {
        let text = segment.text.as_str();
        if text.is_empty() {
            return Err(Error::InvalidArgument(format!(
                "segment {} has empty text",
                segment.case_id
            )));
        }
        let structured = self.extract_structured(text);
        let mut features = structured.value;
        let mut spans = structured.spans;
        let mut issues = structured.warnings;

        let severity = self.extract_semantic(text, vocab::SEVERITY_INDICATORS_CATEGORY)?;
        features.severity_indicators = severity.value;
        spans.extend(severity.spans);

        let topics = self.extract_semantic(text, vocab::CASE_TOPICS_CATEGORY)?;
        features.case_topics = topics.value;
        let family_hit = topics
            .spans
            .iter()
            .find(|s| s.feature_path == "case_topics.family")
            .cloned();
        spans.extend(topics.spans);

        let phrases = self.extract_severity_phrases(text);
        features.severity_phrases = phrases.value;
        spans.extend(phrases.spans);

        match family_hit {
            Some(hit) => {
                features.relationship_to_victim = relationship_from_keyword(&hit.rule_id);
                spans.push(HighlightSpan {
                    feature_path: "relationship_to_victim".into(),
                    ..hit
                });
            }
            None => features.relationship_to_victim = vocab::DEFAULT_RELATIONSHIP.into(),
        }

        for span in &mut spans {
            span.case_id = segment.case_id.clone();
        }
        spans.sort_by(|a, b| {
            (a.start, a.end, &a.feature_path, &a.rule_id).cmp(&(b.start, b.end, &b.feature_path, &b.rule_id))
        });
        spans.dedup();

        let year = match segment.year.parse::<i32>() {
            Ok(y) => y,
            Err(_) => {
                issues.push(ValidationIssue::error("year", format!("`{}` is not a year", segment.year)));
                0
            }
        };
        issues.extend(validate(&features));
        if issues.iter().any(|i| i.severity == IssueSeverity::Error) {
            return Err(Error::Validation {
                case_id: segment.case_id.clone(),
                issues,
            });
        }
        Ok(BuiltCase {
            record: CaseRecord {
                case_id: segment.case_id.clone(),
                source_org: segment.source_org.clone(),
                year,
                month: segment.month.clone(),
                raw_text: segment.text.clone(),
                features,
                spans,
                created_at: Utc::now(),
            },
            issues,
        })
    }
}

/// The family keyword that fired, taken from a `case_topics.family:<kw>` rule id.
fn relationship_from_keyword(rule_id: &str) -> String {
    rule_id
        .rsplit_once(':')
        .map(|(_, kw)| kw.to_lowercase())
        .unwrap_or_else(|| "family member".to_string())
}
