//! Weighted factor scoring and affine normalization onto a 5 to 10 scale.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::extractor::{CaseRecord, FeatureSet, StorageUnit};

pub const SCALE_MIN: f64 = 5.0;
pub const SCALE_MAX: f64 = 10.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Factor {
    SeverityIndicators,
    VictimCount,
    CaseType,
    SeverityPhrases,
    EvidenceVolume,
    RegisteredOffender,
}

impl Factor {
    pub const ALL: [Factor; 6] = [
        Factor::SeverityIndicators,
        Factor::VictimCount,
        Factor::CaseType,
        Factor::SeverityPhrases,
        Factor::EvidenceVolume,
        Factor::RegisteredOffender,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Factor::SeverityIndicators => "severity_indicators",
            Factor::VictimCount => "victim_count",
            Factor::CaseType => "case_type",
            Factor::SeverityPhrases => "severity_phrases",
            Factor::EvidenceVolume => "evidence_volume",
            Factor::RegisteredOffender => "registered_offender",
        }
    }
}

/// Factor weights. The defaults sum to 1.25; scores are only compared after
/// joint normalization, so the sum is not constrained.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TriageWeights {
    pub severity_indicators: f64,
    pub victim_count: f64,
    pub case_type: f64,
    pub severity_phrases: f64,
    pub evidence_volume: f64,
    pub registered_offender: f64,
}

impl Default for TriageWeights {
    fn default() -> Self {
        Self {
            severity_indicators: 0.35,
            victim_count: 0.30,
            case_type: 0.25,
            severity_phrases: 0.15,
            evidence_volume: 0.10,
            registered_offender: 0.10,
        }
    }
}

impl TriageWeights {
    pub fn get(&self, factor: Factor) -> f64 {
        match factor {
            Factor::SeverityIndicators => self.severity_indicators,
            Factor::VictimCount => self.victim_count,
            Factor::CaseType => self.case_type,
            Factor::SeverityPhrases => self.severity_phrases,
            Factor::EvidenceVolume => self.evidence_volume,
            Factor::RegisteredOffender => self.registered_offender,
        }
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self {
            severity_indicators: self.severity_indicators * c,
            victim_count: self.victim_count * c,
            case_type: self.case_type * c,
            severity_phrases: self.severity_phrases * c,
            evidence_volume: self.evidence_volume * c,
            registered_offender: self.registered_offender * c,
        }
    }

    pub(crate) fn check(&self) -> Result<()> {
        for f in Factor::ALL {
            let w = self.get(f);
            if !(w >= 0.0 && w.is_finite()) {
                return Err(Error::Config(format!("triage weight {} must be >= 0, got {w}", f.name())));
            }
        }
        if Factor::ALL.iter().all(|&f| self.get(f) == 0.0) {
            return Err(Error::Config("at least one triage weight must be positive".into()));
        }
        Ok(())
    }
}

/// Lookup tables and caps used to turn features into factor values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FactorTables {
    pub victim_count_cap: u32,
    pub severity_phrase_count: u32,
    pub large_image_count: u64,
    pub large_storage_unit: StorageUnit,
    pub severity_indicators: BTreeMap<String, f64>,
    pub case_type: BTreeMap<String, f64>,
}

impl Default for FactorTables {
    fn default() -> Self {
        let table = |items: &[(&str, f64)]| items.iter().map(|&(k, v)| (k.to_string(), v)).collect();
        Self {
            victim_count_cap: 5,
            severity_phrase_count: 6,
            large_image_count: 1000,
            large_storage_unit: StorageUnit::TB,
            severity_indicators: table(&[
                ("infant", 1.0),
                ("sexual_assault", 0.8),
                ("very_young", 0.7),
                ("under_10", 0.6),
                ("production", 0.5),
            ]),
            case_type: table(&[
                ("production", 1.0),
                ("hands_on", 0.9),
                ("online_digital", 0.5),
                ("possession", 0.4),
            ]),
        }
    }
}

impl FactorTables {
    pub(crate) fn check(&self) -> Result<()> {
        if self.victim_count_cap == 0 || self.severity_phrase_count == 0 {
            return Err(Error::Config("triage caps must be at least 1".into()));
        }
        for (name, table) in [("severity_indicators", &self.severity_indicators), ("case_type", &self.case_type)] {
            if let Some((k, v)) = table.iter().find(|(_, v)| !(0.0..=1.0).contains(*v)) {
                return Err(Error::Config(format!("triage.factors.{name}.{k} = {v} is outside [0, 1]")));
            }
        }
        Ok(())
    }
}

pub type FactorScores = BTreeMap<Factor, f64>;

fn table_max<'a>(table: &BTreeMap<String, f64>, tags: impl Iterator<Item = &'a String>) -> f64 {
    tags.filter_map(|t| table.get(t)).copied().fold(0.0, f64::max)
}

/// The six factor values, each in [0, 1].
pub fn factor_scores(f: &FeatureSet, tables: &FactorTables) -> FactorScores {
    let victim_count = f
        .victim_count
        .map_or(0.0, |c| f64::from(c.min(tables.victim_count_cap)) / f64::from(tables.victim_count_cap));
    let phrases = (f.severity_phrases.len() as f64 / f64::from(tables.severity_phrase_count)).min(1.0);

    let large = f.evidence_storage.is_some_and(|s| s.unit >= tables.large_storage_unit)
        || f.evidence_images.is_some_and(|n| n >= tables.large_image_count);
    let any_evidence = f.evidence_images.is_some()
        || f.evidence_videos.is_some()
        || f.evidence_storage.is_some()
        || f.evidence_messages.is_some();
    let evidence = if large {
        1.0
    } else if any_evidence {
        0.5
    } else {
        0.0
    };

    BTreeMap::from([
        (
            Factor::SeverityIndicators,
            table_max(&tables.severity_indicators, f.severity_indicators.iter()),
        ),
        (Factor::VictimCount, victim_count),
        (Factor::CaseType, table_max(&tables.case_type, f.case_topics.iter())),
        (Factor::SeverityPhrases, phrases),
        (Factor::EvidenceVolume, evidence),
        (Factor::RegisteredOffender, if f.registered_sex_offender { 1.0 } else { 0.0 }),
    ])
}

pub fn raw_score(scores: &FactorScores, w: &TriageWeights) -> f64 {
    Factor::ALL.iter().map(|&f| w.get(f) * scores.get(&f).copied().unwrap_or(0.0)).sum()
}

/// Maps raw scores affinely onto [5, 10]. When every score is equal the whole
/// batch maps to 5.0.
pub fn normalize(raw: &[f64]) -> Result<Vec<f64>> {
    if raw.is_empty() {
        return Err(Error::EmptyInput);
    }
    let min = raw.iter().copied().fold(f64::INFINITY, f64::min);
    let max = raw.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == min {
        return Ok(vec![SCALE_MIN; raw.len()]);
    }
    let span = SCALE_MAX - SCALE_MIN;
    Ok(raw
        .iter()
        .map(|&s| (SCALE_MIN + span * (s - min) / (max - min)).clamp(SCALE_MIN, SCALE_MAX))
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Band {
    High,
    Medium,
    Low,
}

impl Band {
    pub const ALL: [Band; 3] = [Band::High, Band::Medium, Band::Low];

    /// High [8, 10], Medium [6, 8), Low [5, 6).
    pub fn of(score: f64) -> Band {
        if score >= 8.0 {
            Band::High
        } else if score >= 6.0 {
            Band::Medium
        } else {
            Band::Low
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Band::High => "High",
            Band::Medium => "Medium",
            Band::Low => "Low",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FactorExplanation {
    pub factor: Factor,
    pub weight: f64,
    pub value: f64,
    pub contribution: f64,
    /// Indices into the case record's `spans`.
    pub span_refs: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PriorityResult {
    pub case_id: String,
    pub factor_scores: FactorScores,
    pub raw_score: f64,
    pub normalized_score: f64,
    pub rank: usize,
    pub band: Band,
    pub explanation: Vec<FactorExplanation>,
}

fn triggering_spans(record: &CaseRecord, factor: Factor, tables: &FactorTables) -> Vec<usize> {
    let tagged = |prefix: &str, table: &BTreeMap<String, f64>, path: &str| {
        path.strip_prefix(prefix)
            .and_then(|tag| table.get(tag))
            .is_some_and(|&v| v > 0.0)
    };
    record
        .spans
        .iter()
        .enumerate()
        .filter(|(_, s)| {
            let p = s.feature_path.as_str();
            match factor {
                Factor::SeverityIndicators => tagged("severity_indicators.", &tables.severity_indicators, p),
                Factor::VictimCount => p == "victim_count",
                Factor::CaseType => tagged("case_topics.", &tables.case_type, p),
                Factor::SeverityPhrases => p.starts_with("severity_phrases."),
                Factor::EvidenceVolume => p.starts_with("evidence_"),
                Factor::RegisteredOffender => p == "registered_sex_offender",
            }
        })
        .map(|(i, _)| i)
        .collect()
}

/// Scores, jointly normalizes and ranks `records`. Ties are broken by case id.
pub fn rank_cases(records: &[CaseRecord], w: &TriageWeights, tables: &FactorTables) -> Result<Vec<PriorityResult>> {
    let scored: Vec<(FactorScores, f64)> = records
        .iter()
        .map(|r| {
            let s = factor_scores(&r.features, tables);
            let raw = raw_score(&s, w);
            (s, raw)
        })
        .collect();
    let raws: Vec<f64> = scored.iter().map(|(_, r)| *r).collect();
    let normalized = normalize(&raws)?;

    let mut results: Vec<PriorityResult> = records
        .iter()
        .zip(scored)
        .zip(normalized)
        .map(|((record, (scores, raw)), norm)| {
            let explanation = Factor::ALL
                .iter()
                .map(|&factor| {
                    let value = scores[&factor];
                    FactorExplanation {
                        factor,
                        weight: w.get(factor),
                        value,
                        contribution: w.get(factor) * value,
                        span_refs: if value > 0.0 {
                            triggering_spans(record, factor, tables)
                        } else {
                            Vec::new()
                        },
                    }
                })
                .collect();
            PriorityResult {
                case_id: record.case_id.clone(),
                factor_scores: scores,
                raw_score: raw,
                normalized_score: norm,
                rank: 0,
                band: Band::of(norm),
                explanation,
            }
        })
        .collect();

    // Scores equal in exact arithmetic can differ in the last ulp depending
    // on summation order, so rank on a quantized score and let the id break ties.
    let key = |r: &PriorityResult| (r.normalized_score * 1e9).round() as i64;
    results.sort_by(|a, b| key(b).cmp(&key(a)).then_with(|| a.case_id.cmp(&b.case_id)));
    for (i, r) in results.iter_mut().enumerate() {
        r.rank = i + 1;
    }
    Ok(results)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BandCount {
    pub band: Band,
    pub count: usize,
    pub percent: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TriageSummary {
    pub cases: usize,
    pub min: f64,
    pub max: f64,
    pub mean: f64,
    /// Population standard deviation of the normalized scores.
    pub std_dev: f64,
    pub bands: Vec<BandCount>,
}

pub fn summarize(results: &[PriorityResult]) -> Option<TriageSummary> {
    if results.is_empty() {
        return None;
    }
    let n = results.len() as f64;
    let scores: Vec<f64> = results.iter().map(|r| r.normalized_score).collect();
    let mean = scores.iter().sum::<f64>() / n;
    let var = scores.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / n;
    let bands = Band::ALL
        .iter()
        .map(|&band| {
            let count = results.iter().filter(|r| r.band == band).count();
            BandCount {
                band,
                count,
                percent: count as f64 * 100.0 / n,
            }
        })
        .collect();
    Some(TriageSummary {
        cases: results.len(),
        min: scores.iter().copied().fold(f64::INFINITY, f64::min),
        max: scores.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        mean,
        std_dev: var.sqrt(),
        bands,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::extractor::StorageAmount;

    #[test]
    fn normalization_hand_case() {
        assert_eq!(normalize(&[0.2, 0.5, 0.8]).unwrap(), [5.0, 7.5, 10.0]);
    }

    #[test]
    fn degenerate_batch_maps_to_five() {
        assert_eq!(normalize(&[0.3, 0.3]).unwrap(), [5.0, 5.0]);
        assert_eq!(normalize(&[0.9]).unwrap(), [5.0]);
    }

    #[test]
    fn empty_batch_is_an_error() {
        assert!(matches!(normalize(&[]), Err(Error::EmptyInput)));
    }

    #[test]
    fn bands() {
        assert_eq!(Band::of(10.0), Band::High);
        assert_eq!(Band::of(8.0), Band::High);
        assert_eq!(Band::of(7.999), Band::Medium);
        assert_eq!(Band::of(6.0), Band::Medium);
        assert_eq!(Band::of(5.0), Band::Low);
    }

    #[test]
    fn factor_values() {
        let mut f = FeatureSet {
            victim_count: Some(8),
            evidence_videos: Some(3),
            registered_sex_offender: true,
            ..FeatureSet::default()
        };
        f.severity_indicators.extend(["under_10".to_string(), "sexual_assault".to_string()]);
        f.case_topics.extend(["possession".to_string(), "family".to_string()]);
        f.severity_phrases.extend(["dangerous".to_string(), "stated".to_string(), "continue".to_string()]);
        let s = factor_scores(&f, &FactorTables::default());
        assert_eq!(s[&Factor::SeverityIndicators], 0.8);
        assert_eq!(s[&Factor::VictimCount], 1.0);
        assert_eq!(s[&Factor::CaseType], 0.4);
        assert_eq!(s[&Factor::SeverityPhrases], 0.5);
        assert_eq!(s[&Factor::EvidenceVolume], 0.5);
        assert_eq!(s[&Factor::RegisteredOffender], 1.0);
    }

    #[test]
    fn large_evidence() {
        let tables = FactorTables::default();
        let tb = FeatureSet {
            evidence_storage: Some(StorageAmount { magnitude: 1.0, unit: StorageUnit::TB }),
            ..FeatureSet::default()
        };
        assert_eq!(factor_scores(&tb, &tables)[&Factor::EvidenceVolume], 1.0);
        let gb = FeatureSet {
            evidence_storage: Some(StorageAmount { magnitude: 900.0, unit: StorageUnit::GB }),
            ..FeatureSet::default()
        };
        assert_eq!(factor_scores(&gb, &tables)[&Factor::EvidenceVolume], 0.5);
        let images = FeatureSet {
            evidence_images: Some(1000),
            ..FeatureSet::default()
        };
        assert_eq!(factor_scores(&images, &tables)[&Factor::EvidenceVolume], 1.0);
        assert_eq!(factor_scores(&FeatureSet::default(), &tables)[&Factor::EvidenceVolume], 0.0);
    }

    #[test]
    fn default_weights_sum() {
        let w = TriageWeights::default();
        let sum: f64 = Factor::ALL.iter().map(|&f| w.get(f)).sum();
        assert!((sum - 1.25).abs() < 1e-12);
    }
}
