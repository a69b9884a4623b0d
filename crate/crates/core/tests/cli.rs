mod common;

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use casetriage::store::Store;

fn casetriage(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_casetriage"))
        .args(args)
        .env_remove("CASETRIAGE_CONFIG")
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn fixture(dir: &Path, name: &str, seed: u64, cases: usize, year: i32) -> PathBuf {
    let (text, _) = common::document(&mut common::rng(seed), cases, year);
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn ingest_reports_count_and_coverage() {
    let dir = tempfile::tempdir().unwrap();
    let report = fixture(dir.path(), "azicac_2012_report.txt", 1, 10, 2012);
    let db = dir.path().join("cases.db");
    let o = casetriage(&["ingest", s(&report), "--db", s(&db)]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = stdout(&o);
    assert!(text.contains("10 cases (AZICAC 2012)"), "{text}");
    assert!(text.contains("10 cases stored"), "{text}");
    assert!(text.contains("Relationship to victim"));
    assert!(text.contains("Average"));
    assert_eq!(Store::open_read_only(&db).unwrap().case_count().unwrap(), 10);
}

#[test]
fn ingest_pdf() {
    let dir = tempfile::tempdir().unwrap();
    let (text, planted) = common::document(&mut common::rng(2), 4, 2013);
    let pdf = dir.path().join("icac_2013.pdf");
    common::write_pdf(&pdf, &[&text]);
    let db = dir.path().join("cases.db");
    let o = casetriage(&["ingest", s(&pdf), "--db", s(&db)]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).contains(&format!("{} cases stored", planted.len())));
}

#[test]
fn ingest_missing_file_fails() {
    let dir = tempfile::tempdir().unwrap();
    let db = dir.path().join("cases.db");
    let o = casetriage(&["ingest", "/nonexistent/azicac_2012.pdf", "--db", s(&db)]);
    assert!(!o.status.success());
    assert!(stderr(&o).contains("file not found"), "{}", stderr(&o));
}

#[test]
fn markerless_document_needs_fallback_flag() {
    let dir = tempfile::tempdir().unwrap();
    let memo = dir.path().join("icac_2014_memo.txt");
    std::fs::write(&memo, "A suspect traded images on Facebook.").unwrap();
    let db = dir.path().join("cases.db");

    let o = casetriage(&["ingest", s(&memo), "--db", s(&db)]);
    assert!(!o.status.success());
    assert!(stderr(&o).contains("no temporal markers"), "{}", stderr(&o));

    let o = casetriage(&["ingest", s(&memo), "--db", s(&db), "--whole-doc-fallback"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).contains("1 cases stored"));
}

#[test]
fn usage_errors_exit_2() {
    let o = casetriage(&["ingest"]);
    assert_eq!(o.status.code(), Some(2));
    let o = casetriage(&["frobnicate"]);
    assert_eq!(o.status.code(), Some(2));
    let o = casetriage(&["--help"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("ingest"));
}

#[test]
fn analyze_empty_database() {
    let dir = tempfile::tempdir().unwrap();
    let db = dir.path().join("empty.db");
    Store::init_schema(&db).unwrap();
    let o = casetriage(&["analyze", "--db", s(&db)]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).contains("no cases"));
}

#[test]
fn analyze_writes_report() {
    let dir = tempfile::tempdir().unwrap();
    let report = fixture(dir.path(), "azicac_2012_report.txt", 4, 12, 2012);
    let db = dir.path().join("cases.db");
    assert!(casetriage(&["ingest", s(&report), "--db", s(&db)]).status.success());
    let json = dir.path().join("out.json");
    let o = casetriage(&["analyze", "--db", s(&db), "--threshold", "0.4", "--report", s(&json)]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = stdout(&o);
    for needle in ["Clusters (n=12, threshold 0.40)", "General", "Priority triage", "High", "Insights"] {
        assert!(text.contains(needle), "missing {needle} in\n{text}");
    }
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&json).unwrap()).unwrap();
    assert_eq!(v["clusters"]["threshold"], 0.4);
    assert_eq!(v["triage"].as_array().unwrap().len(), 12);
}

#[test]
fn analyze_rejects_bad_threshold() {
    let dir = tempfile::tempdir().unwrap();
    let db = dir.path().join("empty.db");
    Store::init_schema(&db).unwrap();
    let o = casetriage(&["analyze", "--db", s(&db), "--threshold", "1.5"]);
    assert!(!o.status.success());
}

#[test]
fn merge_and_audit() {
    let dir = tempfile::tempdir().unwrap();
    let a = fixture(dir.path(), "azicac_2012.txt", 5, 3, 2012);
    let b = fixture(dir.path(), "icac_2013.txt", 6, 4, 2013);
    let (db_a, db_b) = (dir.path().join("a.db"), dir.path().join("b.db"));
    assert!(casetriage(&["ingest", s(&a), "--db", s(&db_a)]).status.success());
    assert!(casetriage(&["ingest", s(&b), "--db", s(&db_b)]).status.success());

    let o = casetriage(&["merge", "--dest", s(&db_a), "--src", s(&db_b)]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).contains("copied 4 cases, skipped 0 collisions"));
    let o = casetriage(&["merge", "--dest", s(&db_a), "--src", s(&db_b)]);
    assert!(stdout(&o).contains("copied 0 cases, skipped 4 collisions"));

    let store = Store::open_read_only(&db_a).unwrap();
    assert_eq!(store.case_count().unwrap(), 7);
    let id = store.all_cases().unwrap()[0].case_id.clone();
    let o = casetriage(&["audit", "--db", s(&db_a), "--case", &id]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = stdout(&o);
    assert!(text.contains(&format!("case {id}")));
    assert!(text.contains("--- spans ---"));
    assert!(!text.contains("MISMATCH"));
    assert!(!text.contains("features without spans"));

    let o = casetriage(&["audit", "--db", s(&db_a), "--case", "nope"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn bench_prints_stages() {
    let dir = tempfile::tempdir().unwrap();
    let report = fixture(dir.path(), "azicac_2012.txt", 8, 8, 2012);
    let db = dir.path().join("cases.db");
    assert!(casetriage(&["ingest", s(&report), "--db", s(&db)]).status.success());
    let o = casetriage(&["bench", "--db", s(&db)]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = stdout(&o);
    for stage in ["extraction", "storage", "clustering", "triage", "insights", "cases/second"] {
        assert!(text.contains(stage), "{stage}");
    }
}

#[test]
fn config_file_overrides_threshold() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("casetriage.toml");
    std::fs::write(&cfg, "[cluster]\nthreshold = 0.6\n").unwrap();
    let db = dir.path().join("empty.db");
    Store::init_schema(&db).unwrap();
    let o = casetriage(&["--config", s(&cfg), "analyze", "--db", s(&db)]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).contains("threshold 0.60"), "{}", stdout(&o));

    let bad = dir.path().join("bad.toml");
    std::fs::write(&bad, "[cluster]\nthreshold = \"high\"\n").unwrap();
    let o = casetriage(&["--config", s(&bad), "analyze", "--db", s(&db)]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn serve_rejects_unusable_bind_address() {
    let dir = tempfile::tempdir().unwrap();
    let db = dir.path().join("empty.db");
    Store::init_schema(&db).unwrap();
    let o = casetriage(&["serve", "--db", s(&db), "--bind", "not-an-address"]);
    assert_eq!(o.status.code(), Some(1));
}
