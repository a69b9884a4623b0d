//! Command-line front end.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

use crate::api::{self, ApiConfig};
use crate::config::{Config, CONFIG_ENV_VAR};
use crate::error::{Error, Result};
use crate::extractor::{vocab, CaseRecord, Extractor};
use crate::pipeline::{self, Analysis, IngestOptions};
use crate::store::Store;
use crate::triage::Band;

#[derive(Debug, Parser)]
#[command(name = "casetriage", version, about = "Case report ingestion, clustering and triage")]
pub struct Cli {
    /// Configuration file merged over the built-in defaults.
    #[arg(long, global = true, env = CONFIG_ENV_VAR, value_name = "FILE")]
    pub config: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Extract, batch and store the cases of one or more reports.
    Ingest {
        #[arg(required = true, value_name = "PATH")]
        paths: Vec<PathBuf>,
        #[arg(long, value_name = "FILE")]
        db: PathBuf,
        /// Organization name, overriding file-name detection.
        #[arg(long)]
        org: Option<String>,
        /// Report year, overriding file-name inference.
        #[arg(long)]
        year: Option<i32>,
        /// Store a document without temporal markers as a single case.
        #[arg(long)]
        whole_doc_fallback: bool,
    },
    /// Cluster, rank and summarize the stored cases.
    Analyze {
        #[arg(long, value_name = "FILE")]
        db: PathBuf,
        /// Sub-group similarity threshold.
        #[arg(long)]
        threshold: Option<f64>,
        /// Where to write the JSON report (default: next to the database).
        #[arg(long, value_name = "FILE")]
        report: Option<PathBuf>,
    },
    /// Serve the read-only JSON API.
    Serve {
        #[arg(long, value_name = "FILE")]
        db: PathBuf,
        #[arg(long, default_value = "127.0.0.1:8080", value_name = "ADDR")]
        bind: String,
        /// Built dashboard assets to serve alongside the API.
        #[arg(long, value_name = "DIR")]
        static_dir: Option<PathBuf>,
    },
    /// Copy the cases of one database into another.
    Merge {
        #[arg(long, value_name = "FILE")]
        dest: PathBuf,
        #[arg(long, value_name = "FILE")]
        src: PathBuf,
    },
    /// Print a case's text and the spans behind every extracted feature.
    Audit {
        #[arg(long, value_name = "FILE")]
        db: PathBuf,
        #[arg(long = "case", value_name = "ID")]
        case_id: String,
    },
    /// Time each pipeline stage over the stored cases.
    Bench {
        #[arg(long, value_name = "FILE")]
        db: PathBuf,
    },
}

/// Parses `args` and runs the command, returning the process exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            if e.use_stderr() {
                let _ = write!(err, "{e}");
                return 2;
            }
            let _ = write!(out, "{e}");
            return 0;
        }
    };
    match execute(cli, out, err) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            1
        }
    }
}

fn execute(cli: Cli, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32> {
    let mut config = match &cli.config {
        Some(path) => Config::load(path)?,
        None => Config::default(),
    };
    match cli.command {
        Command::Ingest {
            paths,
            db,
            org,
            year,
            whole_doc_fallback,
        } => {
            let opts = IngestOptions {
                org,
                year,
                whole_doc_fallback,
            };
            ingest(&paths, &db, &config, &opts, out, err)
        }
        Command::Analyze { db, threshold, report } => {
            if let Some(t) = threshold {
                if !(0.0..=1.0).contains(&t) {
                    return Err(Error::InvalidArgument(format!("threshold {t} is outside [0, 1]")));
                }
                config.cluster.threshold = t;
            }
            let report = report.unwrap_or_else(|| db.with_extension("report.json"));
            analyze(&db, &report, &config, out)
        }
        Command::Serve { db, bind, static_dir } => {
            let api = ApiConfig {
                bind_address: bind,
                db_path: db,
                static_assets_dir: static_dir,
            };
            api.socket_addr()?;
            let runtime = tokio::runtime::Runtime::new()?;
            runtime.block_on(api::serve(api, config))?;
            Ok(0)
        }
        Command::Merge { dest, src } => {
            if !src.is_file() {
                return Err(Error::FileNotFound(src));
            }
            let mut store = Store::init_schema(&dest)?;
            let report = store.merge_from(&src)?;
            writeln!(
                out,
                "copied {} cases, skipped {} collisions",
                report.copied,
                report.skipped_collisions.len()
            )?;
            for id in &report.skipped_collisions {
                writeln!(out, "  kept existing {id}")?;
            }
            Ok(0)
        }
        Command::Audit { db, case_id } => {
            let store = Store::open_read_only(&db)?;
            let record = store
                .get_case(&case_id)?
                .ok_or_else(|| Error::InvalidArgument(format!("no case `{case_id}` in {}", db.display())))?;
            audit(&record, out)?;
            Ok(0)
        }
        Command::Bench { db } => {
            let records = Store::open_read_only(&db)?.all_cases()?;
            let report = pipeline::bench(&records, &config)?;
            writeln!(out, "{:<12} {:>10} {:>12}", "stage", "ms", "ms/case")?;
            let per_case = |ms: f64| if report.cases == 0 { 0.0 } else { ms / report.cases as f64 };
            for s in &report.stages {
                writeln!(out, "{:<12} {:>10.2} {:>12.3}", s.stage, s.millis, per_case(s.millis))?;
            }
            writeln!(out, "{:<12} {:>10.2} {:>12.3}", "total", report.total_millis, per_case(report.total_millis))?;
            writeln!(out, "{} cases, {:.1} cases/second", report.cases, report.cases_per_second)?;
            Ok(0)
        }
    }
}

fn ingest(
    paths: &[PathBuf],
    db: &Path,
    config: &Config,
    opts: &IngestOptions,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> Result<i32> {
    let extractor = Extractor::new(config)?;
    let mut store = Store::init_schema(db)?;
    let mut failed = false;
    let mut stored = Vec::new();
    for (path, outcome) in pipeline::process_documents(paths, config, &extractor, opts) {
        let outcome = match outcome {
            Ok(o) => o,
            Err(e) => {
                writeln!(err, "error: {}: {e}", path.display())?;
                failed = true;
                continue;
            }
        };
        for w in &outcome.warnings {
            writeln!(err, "warning: {}: {w}", path.display())?;
        }
        for r in &outcome.rejected {
            writeln!(err, "error: {}: {r}", path.display())?;
            failed = true;
        }
        if let Err(e) = store.upsert_all(&outcome.records) {
            writeln!(err, "error: {}: {e}", path.display())?;
            failed = true;
            continue;
        }
        writeln!(
            out,
            "{}: {} cases ({} {})",
            path.display(),
            outcome.records.len(),
            outcome.source_org,
            outcome.year
        )?;
        stored.extend(outcome.records);
    }
    writeln!(out, "{} cases stored", stored.len())?;
    print_coverage(&stored, out)?;
    Ok(if failed { 1 } else { 0 })
}

fn print_coverage(records: &[CaseRecord], out: &mut dyn Write) -> Result<()> {
    let rows = pipeline::coverage(records);
    writeln!(out, "{:<26} {:>6} {:>9}", "Feature", "Cases", "Coverage")?;
    for r in &rows {
        writeln!(out, "{:<26} {:>6} {:>8.1}%", r.feature, r.cases, r.percent)?;
    }
    let avg = rows.iter().map(|r| r.percent).sum::<f64>() / rows.len() as f64;
    writeln!(out, "{:<26} {:>6} {:>8.1}%", "Average", "", avg)?;
    Ok(())
}

fn analyze(db: &Path, report_path: &Path, config: &Config, out: &mut dyn Write) -> Result<i32> {
    let records = Store::open_read_only(db)?.all_cases()?;
    let analysis = pipeline::analyze(&records, config)?;
    print_analysis(&analysis, out)?;
    let json = serde_json::to_string_pretty(&analysis)?;
    std::fs::write(report_path, json)?;
    writeln!(out, "report written to {}", report_path.display())?;
    Ok(0)
}

fn print_analysis(a: &Analysis, out: &mut dyn Write) -> Result<()> {
    let c = &a.clusters;
    writeln!(out, "Clusters (n={}, threshold {:.2})", c.total_cases, c.threshold)?;
    writeln!(
        out,
        "{:<16} {:>6} {:>9} {:>8} {:>11}",
        "Cluster", "Cases", "Coverage", "Avg sim", "Sub-groups"
    )?;
    for s in &c.clusters {
        let avg = s.avg_similarity.map_or("-".to_string(), |v| format!("{v:.3}"));
        writeln!(
            out,
            "{:<16} {:>6} {:>8.1}% {:>8} {:>11}",
            s.name,
            s.case_count,
            s.coverage_percent,
            avg,
            s.subgroups.len()
        )?;
    }

    writeln!(out)?;
    writeln!(out, "Priority triage")?;
    match &a.triage_summary {
        None => writeln!(out, "no cases")?,
        Some(t) => {
            writeln!(
                out,
                "scores {:.2}-{:.2}, mean {:.2}, std {:.2}",
                t.min, t.max, t.mean, t.std_dev
            )?;
            writeln!(out, "{:<8} {:<12} {:>6} {:>8}", "Band", "Range", "Cases", "Percent")?;
            for b in &t.bands {
                let range = match b.band {
                    Band::High => "[8.0, 10.0]",
                    Band::Medium => "[6.0, 8.0)",
                    Band::Low => "[5.0, 6.0)",
                };
                writeln!(out, "{:<8} {:<12} {:>6} {:>7.1}%", b.band.name(), range, b.count, b.percent)?;
            }
        }
    }

    let i = &a.insights;
    writeln!(out)?;
    writeln!(out, "Insights")?;
    let top = |stats: &[crate::insights::TagStat]| {
        stats
            .iter()
            .take(5)
            .map(|s| format!("{} {} ({:.1}%)", s.tag, s.count, s.percent))
            .collect::<Vec<_>>()
            .join(", ")
    };
    writeln!(out, "platforms: {}", top(&i.platform_stats))?;
    writeln!(out, "severity: {}", top(&i.severity_distribution))?;
    writeln!(out, "topics: {}", top(&i.topic_stats))?;
    writeln!(
        out,
        "registered offenders {} ({:.1}%), stranger {} ({:.1}%), family {} ({:.1}%)",
        i.patterns.rso_count,
        i.patterns.rso_percent,
        i.patterns.stranger_count,
        i.patterns.stranger_percent,
        i.patterns.family_count,
        i.patterns.family_percent
    )?;
    let keywords: Vec<String> = i.keywords_global.iter().take(10).map(|k| k.token.clone()).collect();
    writeln!(out, "keywords: {}", keywords.join(", "))?;
    Ok(())
}

fn snippet(text: &str, start: usize, end: usize) -> String {
    let mut from = start.saturating_sub(30);
    while !text.is_char_boundary(from) {
        from -= 1;
    }
    let mut to = (end + 30).min(text.len());
    while !text.is_char_boundary(to) {
        to += 1;
    }
    format!("{}[{}]{}", &text[from..start], &text[start..end], &text[end..to]).replace('\n', " ")
}

fn audit(r: &CaseRecord, out: &mut dyn Write) -> Result<()> {
    writeln!(out, "case {} ({}, {} {})", r.case_id, r.source_org, r.month, r.year)?;
    writeln!(out, "--- text ---")?;
    writeln!(out, "{}", r.raw_text)?;
    writeln!(out, "--- spans ---")?;
    for (i, s) in r.spans.iter().enumerate() {
        let ok = if s.is_verbatim_in(&r.raw_text) { "ok" } else { "MISMATCH" };
        writeln!(
            out,
            "#{i:<3} {:>6}..{:<6} {:<32} {:<40} {ok}",
            s.start, s.end, s.feature_path, s.rule_id
        )?;
        if s.start <= s.end && s.end <= r.raw_text.len() && r.raw_text.is_char_boundary(s.start) && r.raw_text.is_char_boundary(s.end) {
            writeln!(out, "      {}", snippet(&r.raw_text, s.start, s.end))?;
        }
    }
    let f = &r.features;
    if f.relationship_to_victim == vocab::DEFAULT_RELATIONSHIP {
        writeln!(out, "relationship_to_victim = {} (default, no span)", f.relationship_to_victim)?;
    }
    if !f.registered_sex_offender {
        writeln!(out, "registered_sex_offender = false (default, no span)")?;
    }
    let missing: Vec<String> = f
        .populated_paths()
        .into_iter()
        .filter(|p| r.spans_for(p).next().is_none())
        .collect();
    if !missing.is_empty() {
        writeln!(out, "features without spans: {}", missing.join(", "))?;
    }
    Ok(())
}
