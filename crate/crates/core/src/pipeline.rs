//! End-to-end orchestration shared by the CLI, the API and the FFI layer.

use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::batcher::{self, CaseSegment};
use crate::cluster::{self, ClusterReport};
use crate::config::Config;
use crate::error::{Error, Result};
use crate::extractor::{CaseRecord, Extractor, IssueSeverity};
use crate::ingest::{self, is_valid_year};
use crate::insights::{self, InsightReport};
use crate::store::Store;
use crate::triage::{self, PriorityResult, TriageSummary};

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct IngestOptions {
    /// Overrides the organization detected from the file name.
    pub org: Option<String>,
    /// Overrides the year inferred from the file name.
    pub year: Option<i32>,
    /// Treat a document without temporal markers as a single case.
    pub whole_doc_fallback: bool,
}

/// Cases built from one document, plus what went wrong on the way.
#[derive(Debug, Clone, PartialEq)]
pub struct DocumentOutcome {
    pub source: String,
    pub source_org: String,
    pub year: i32,
    pub used_fallback: bool,
    pub records: Vec<CaseRecord>,
    /// Non-blocking problems (year divergence, conflicting values).
    pub warnings: Vec<String>,
    /// Cases dropped because of error-level validation issues.
    pub rejected: Vec<String>,
}

impl DocumentOutcome {
    pub fn has_errors(&self) -> bool {
        !self.rejected.is_empty()
    }
}

/// Layers two and three over already cleaned text.
pub fn process_text(
    text: &str,
    source: &str,
    org: &str,
    year: i32,
    extractor: &Extractor,
    whole_doc_fallback: bool,
) -> Result<DocumentOutcome> {
    if !is_valid_year(year) {
        return Err(Error::InvalidArgument(format!("year {year} is out of range")));
    }
    let year_str = year.to_string();
    let (segments, used_fallback) = match batcher::batch_cases(text, org, &year_str) {
        Ok(s) => (s, false),
        Err(Error::NoMarkersFound) if whole_doc_fallback => {
            (vec![batcher::whole_document_segment(text, org, &year_str)?], true)
        }
        Err(e) => return Err(e),
    };

    let mut warnings: Vec<String> = batcher::year_mismatches(&segments, &year_str)
        .into_iter()
        .map(|s| format!("{}: marker year {} differs from batch year {year}", s.case_id, s.year))
        .collect();
    if used_fallback {
        warnings.push("no temporal markers; stored the whole document as one case".into());
    }

    let built: Vec<Result<_>> = segments.par_iter().map(|s| extractor.build_case_record(s)).collect();
    let mut records = Vec::new();
    let mut rejected = Vec::new();
    for result in built {
        match result {
            Ok(b) => {
                warnings.extend(
                    b.issues
                        .iter()
                        .filter(|i| i.severity == IssueSeverity::Warning)
                        .map(|i| format!("{}: {}: {}", b.record.case_id, i.field, i.message)),
                );
                records.push(b.record);
            }
            Err(e) => rejected.push(e.to_string()),
        }
    }
    Ok(DocumentOutcome {
        source: source.to_string(),
        source_org: org.to_string(),
        year,
        used_fallback,
        records,
        warnings,
        rejected,
    })
}

/// Layers one to three for a single file.
pub fn process_document(path: &Path, config: &Config, extractor: &Extractor, opts: &IngestOptions) -> Result<DocumentOutcome> {
    let doc = ingest::ingest_document(path, &config.ingest.org_patterns)?;
    let org = opts.org.clone().unwrap_or(doc.source_org);
    let year = opts.year.or(doc.report_year).ok_or_else(|| {
        Error::InvalidArgument(format!(
            "cannot infer a year from {}; pass --year",
            path.display()
        ))
    })?;
    process_text(&doc.cleaned_text, &doc.source_path, &org, year, extractor, opts.whole_doc_fallback)
}

/// Processes documents in parallel; results keep the input order.
pub fn process_documents(
    paths: &[PathBuf],
    config: &Config,
    extractor: &Extractor,
    opts: &IngestOptions,
) -> Vec<(PathBuf, Result<DocumentOutcome>)> {
    paths
        .par_iter()
        .map(|p| (p.clone(), process_document(p, config, extractor, opts)))
        .collect()
}

/// Share of cases with each feature family populated.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverageRow {
    pub feature: String,
    pub cases: usize,
    pub percent: f64,
}

pub fn coverage(records: &[CaseRecord]) -> Vec<CoverageRow> {
    let n = records.len();
    let row = |feature: &str, pred: &dyn Fn(&CaseRecord) -> bool| {
        let cases = records.iter().filter(|r| pred(r)).count();
        CoverageRow {
            feature: feature.to_string(),
            cases,
            percent: insights::percent(cases, n),
        }
    };
    vec![
        row("Relationship to victim", &|r| !r.features.relationship_to_victim.is_empty()),
        row("Prosecution outcome", &|r| !r.features.prosecution.is_empty()),
        row("Case topics", &|r| !r.features.case_topics.is_empty()),
        row("Severity indicators", &|r| !r.features.severity_indicators.is_empty()),
        row("Investigation type", &|r| !r.features.investigation_type.is_empty()),
        row("Perpetrator demographics", &|r| r.features.perpetrator_age.is_some()),
        row("Platforms used", &|r| !r.features.platforms.is_empty()),
        row("Victim count", &|r| r.features.victim_count.is_some()),
        row("Evidence volume", &|r| {
            let f = &r.features;
            f.evidence_images.is_some()
                || f.evidence_videos.is_some()
                || f.evidence_storage.is_some()
                || f.evidence_messages.is_some()
        }),
    ]
}

/// Everything the read side serves, computed once.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Analysis {
    pub clusters: ClusterReport,
    pub triage: Vec<PriorityResult>,
    pub triage_summary: Option<TriageSummary>,
    pub insights: InsightReport,
}

pub fn analyze(records: &[CaseRecord], config: &Config) -> Result<Analysis> {
    let clusters = cluster::cluster_all(records, &config.cluster);
    let triage = if records.is_empty() {
        Vec::new()
    } else {
        triage::rank_cases(records, &config.triage.weights, &config.triage.factors)?
    };
    let groups: Vec<_> = clusters.all_subgroups().cloned().collect();
    let insights = insights::compute_insights(records, &groups, &config.insights);
    Ok(Analysis {
        triage_summary: triage::summarize(&triage),
        clusters,
        triage,
        insights,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageTiming {
    pub stage: String,
    pub millis: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub cases: usize,
    pub stages: Vec<StageTiming>,
    pub total_millis: f64,
    pub cases_per_second: f64,
}

impl BenchReport {
    pub fn stage(&self, name: &str) -> Option<f64> {
        self.stages.iter().find(|s| s.stage == name).map(|s| s.millis)
    }
}

/// Re-runs extraction, storage and analysis over stored cases and times
/// each stage. Storage writes go to a scratch database file.
pub fn bench(records: &[CaseRecord], config: &Config) -> Result<BenchReport> {
    let mut stages = Vec::new();
    let mut time = |stage: &str, started: Instant| {
        stages.push(StageTiming {
            stage: stage.to_string(),
            millis: started.elapsed().as_secs_f64() * 1000.0,
        });
    };

    let started = Instant::now();
    let extractor = Extractor::new(config)?;
    let rebuilt: Vec<CaseRecord> = records
        .par_iter()
        .filter_map(|r| {
            let segment = CaseSegment {
                case_id: r.case_id.clone(),
                text: r.raw_text.clone(),
                month: r.month.clone(),
                year: r.year.to_string(),
                source_org: r.source_org.clone(),
                sequence_number: 1,
                start_offset: 0,
                end_offset: r.raw_text.len(),
            };
            extractor.build_case_record(&segment).ok().map(|b| b.record)
        })
        .collect();
    time("extraction", started);

    let scratch = std::env::temp_dir().join(format!(
        "casetriage-bench-{}-{}.db",
        std::process::id(),
        chrono::Utc::now().timestamp_nanos_opt().unwrap_or_default()
    ));
    let started = Instant::now();
    let stored = (|| -> Result<()> {
        let mut store = Store::init_schema(&scratch)?;
        for r in &rebuilt {
            store.upsert_case(r)?;
        }
        Ok(())
    })();
    time("storage", started);
    let _ = std::fs::remove_file(&scratch);
    stored?;

    let started = Instant::now();
    let clusters = cluster::cluster_all(&rebuilt, &config.cluster);
    time("clustering", started);

    let started = Instant::now();
    if !rebuilt.is_empty() {
        triage::rank_cases(&rebuilt, &config.triage.weights, &config.triage.factors)?;
    }
    time("triage", started);

    let started = Instant::now();
    let groups: Vec<_> = clusters.all_subgroups().cloned().collect();
    insights::compute_insights(&rebuilt, &groups, &config.insights);
    time("insights", started);

    let total_millis: f64 = stages.iter().map(|s| s.millis).sum();
    Ok(BenchReport {
        cases: rebuilt.len(),
        cases_per_second: if total_millis > 0.0 {
            rebuilt.len() as f64 / (total_millis / 1000.0)
        } else {
            0.0
        },
        stages,
        total_millis,
    })
}
