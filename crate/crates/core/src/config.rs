//! Global pipeline configuration.
//!
//! One TOML file holds every pattern table, weight, threshold and factor table.
//! The built-in defaults live in `config/default.toml`; a user file is merged
//! over them table-by-table.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::cluster::SimilarityWeights;
use crate::error::{Error, Result};
use crate::extractor::vocab;
use crate::ingest::OrgPattern;
use crate::triage::{FactorTables, TriageWeights};

pub const DEFAULT_CONFIG_TOML: &str = include_str!("../config/default.toml");

/// Environment variable consulted by the CLI when `--config` is absent.
pub const CONFIG_ENV_VAR: &str = "CASETRIAGE_CONFIG";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub ingest: IngestConfig,
    pub structured: StructuredRules,
    /// category -> feature -> keywords
    pub semantic: BTreeMap<String, BTreeMap<String, Vec<String>>>,
    /// phrase tag -> whole-word phrasings
    pub severity_phrases: BTreeMap<String, Vec<String>>,
    pub cluster: ClusterConfig,
    pub triage: TriageConfig,
    pub insights: InsightsConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IngestConfig {
    pub org_patterns: Vec<OrgPattern>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RuleSpec {
    pub id: String,
    pub pattern: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tag: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StructuredRules {
    pub victim_age: Vec<RuleSpec>,
    pub perpetrator_age: Vec<RuleSpec>,
    pub victim_count: Vec<RuleSpec>,
    pub victim_gender: Vec<RuleSpec>,
    pub platforms: Vec<RuleSpec>,
    pub evidence_images: Vec<RuleSpec>,
    pub evidence_videos: Vec<RuleSpec>,
    pub evidence_messages: Vec<RuleSpec>,
    pub evidence_storage: Vec<RuleSpec>,
    pub prosecution: Vec<RuleSpec>,
    pub charges: Vec<RuleSpec>,
    pub jail_info: Vec<RuleSpec>,
    pub investigation_type: Vec<RuleSpec>,
    pub agencies: Vec<RuleSpec>,
    pub registered_sex_offender: Vec<RuleSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClusterConfig {
    pub threshold: f64,
    pub severe_markers: Vec<String>,
    pub weights: SimilarityWeights,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TriageConfig {
    pub weights: TriageWeights,
    pub factors: FactorTables,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InsightsConfig {
    pub keyword_min_len: usize,
    pub top_keywords: usize,
    pub stopwords: Vec<String>,
}

impl Default for Config {
    fn default() -> Self {
        Self::from_toml_str("").expect("built-in default config is valid")
    }
}

impl Config {
    /// Parses `overrides` and merges it over the built-in defaults.
    pub fn from_toml_str(overrides: &str) -> Result<Self> {
        let mut base: toml::Table = DEFAULT_CONFIG_TOML
            .parse()
            .map_err(|e: toml::de::Error| Error::Config(format!("default config: {e}")))?;
        let user: toml::Table = overrides
            .parse()
            .map_err(|e: toml::de::Error| Error::Config(e.to_string()))?;
        merge_tables(&mut base, user);
        let config: Config = toml::Value::Table(base)
            .try_into()
            .map_err(|e: toml::de::Error| Error::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self> {
        if !path.exists() {
            return Err(Error::FileNotFound(path.to_path_buf()));
        }
        let text = std::fs::read_to_string(path)?;
        Self::from_toml_str(&text)
    }

    /// Loads `path` if given, otherwise the file named by `CASETRIAGE_CONFIG`,
    /// otherwise the defaults.
    pub fn resolve(path: Option<&Path>) -> Result<Self> {
        match path {
            Some(p) => Self::load(p),
            None => match std::env::var_os(CONFIG_ENV_VAR) {
                Some(p) if !p.is_empty() => Self::load(Path::new(&p)),
                _ => Ok(Self::default()),
            },
        }
    }

    fn validate(&self) -> Result<()> {
        if self.ingest.org_patterns.is_empty() {
            return Err(Error::Config("ingest.org_patterns must not be empty".into()));
        }
        for (category, features) in &self.semantic {
            let vocabulary = vocab::for_semantic_category(category)
                .ok_or_else(|| Error::Config(format!("unknown semantic category `{category}`")))?;
            for feature in features.keys() {
                if !vocabulary.contains(&feature.as_str()) {
                    return Err(Error::Config(format!(
                        "semantic.{category}.{feature} is not in the {category} vocabulary"
                    )));
                }
            }
        }
        for phrase in self.severity_phrases.keys() {
            if !vocab::SEVERITY_PHRASES.contains(&phrase.as_str()) {
                return Err(Error::Config(format!("unknown severity phrase `{phrase}`")));
            }
        }
        self.validate_tags("platforms", &self.structured.platforms, vocab::PLATFORMS)?;
        self.validate_tags("prosecution", &self.structured.prosecution, vocab::PROSECUTION)?;
        self.validate_tags(
            "investigation_type",
            &self.structured.investigation_type,
            vocab::INVESTIGATION_TYPES,
        )?;
        self.validate_tags("victim_gender", &self.structured.victim_gender, &["female", "male"])?;
        for rule in &self.structured.agencies {
            if rule.tag.as_deref().is_none_or(str::is_empty) {
                return Err(Error::Config(format!("agency rule `{}` needs a tag", rule.id)));
            }
        }
        for marker in &self.cluster.severe_markers {
            if !vocab::SEVERITY_INDICATORS.contains(&marker.as_str()) {
                return Err(Error::Config(format!("unknown severe marker `{marker}`")));
            }
        }
        self.cluster.weights.check()?;
        let total = self.cluster.weights.total();
        if !(self.cluster.threshold > 0.0 && self.cluster.threshold <= total) {
            return Err(Error::Config(format!(
                "cluster.threshold must lie in (0, {total}], got {}",
                self.cluster.threshold
            )));
        }
        self.triage.weights.check()?;
        self.triage.factors.check()?;
        if self.insights.top_keywords == 0 {
            return Err(Error::Config("insights.top_keywords must be >= 1".into()));
        }
        Ok(())
    }

    fn validate_tags(&self, family: &str, rules: &[RuleSpec], allowed: &[&str]) -> Result<()> {
        for rule in rules {
            match rule.tag.as_deref() {
                Some(tag) if allowed.contains(&tag) => {}
                other => {
                    return Err(Error::Config(format!(
                        "structured.{family} rule `{}` has tag {:?}, expected one of {allowed:?}",
                        rule.id, other
                    )))
                }
            }
        }
        Ok(())
    }
}

fn merge_tables(base: &mut toml::Table, overlay: toml::Table) {
    for (key, value) in overlay {
        match (base.get_mut(&key), value) {
            (Some(toml::Value::Table(b)), toml::Value::Table(o)) => merge_tables(b, o),
            (_, v) => {
                base.insert(key, v);
            }
        }
    }
}
