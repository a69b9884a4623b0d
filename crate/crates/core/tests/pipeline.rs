mod common;

use std::path::PathBuf;

use casetriage::pipeline::{self, IngestOptions};
use casetriage::{Config, Error, Extractor};

fn setup() -> (Config, Extractor) {
    let config = Config::default();
    let extractor = Extractor::new(&config).unwrap();
    (config, extractor)
}

#[test]
fn pdf_report_becomes_cases() {
    let (config, extractor) = setup();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("azicac_2012_annual.pdf");
    let mut rng = common::rng(3);
    let (text, planted) = common::document(&mut rng, 6, 2012);
    let (first, second) = text.split_at(text.len() / 2);
    let cut = first.rfind('\n').unwrap_or(first.len());
    let pages = [&text[..cut], &format!("{}{second}", &first[cut..])[..]];
    common::write_pdf(&path, &[pages[0], pages[1]]);

    let out = pipeline::process_document(&path, &config, &extractor, &IngestOptions::default()).unwrap();
    assert_eq!(out.source_org, "AZICAC");
    assert_eq!(out.year, 2012);
    assert!(!out.used_fallback);
    assert!(out.rejected.is_empty());
    assert_eq!(out.records.len(), planted.len());
    for (r, p) in out.records.iter().zip(&planted) {
        assert_eq!(r.month, p.month);
        assert!(r.case_id.starts_with("AZICAC_2012_"));
        for s in &r.spans {
            assert!(s.is_verbatim_in(&r.raw_text));
        }
    }
}

#[test]
fn overrides_take_precedence_over_file_name() {
    let (config, extractor) = setup();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("fbi_2013.txt");
    std::fs::write(&path, "In May of 2011, a suspect was arrested.").unwrap();
    let opts = IngestOptions {
        org: Some("HSI".into()),
        year: Some(2011),
        whole_doc_fallback: false,
    };
    let out = pipeline::process_document(&path, &config, &extractor, &opts).unwrap();
    assert_eq!(out.source_org, "HSI");
    assert_eq!(out.records[0].case_id, "HSI_2011_may_001");
}

#[test]
fn missing_year_is_an_argument_error() {
    let (config, extractor) = setup();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("report.txt");
    std::fs::write(&path, "In May of 2011, a suspect was arrested.").unwrap();
    let err = pipeline::process_document(&path, &config, &extractor, &IngestOptions::default()).unwrap_err();
    assert!(matches!(err, Error::InvalidArgument(_)), "{err}");
}

#[test]
fn missing_file_is_reported() {
    let (config, extractor) = setup();
    let err = pipeline::process_document(
        &PathBuf::from("/nonexistent/azicac_2012.pdf"),
        &config,
        &extractor,
        &IngestOptions::default(),
    )
    .unwrap_err();
    assert!(matches!(err, Error::FileNotFound(_)));
}

#[test]
fn corrupt_pdf_is_unreadable() {
    let (config, extractor) = setup();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("azicac_2012.pdf");
    std::fs::write(&path, b"%PDF-1.5\nthis is not really a pdf").unwrap();
    let err = pipeline::process_document(&path, &config, &extractor, &IngestOptions::default()).unwrap_err();
    assert!(matches!(err, Error::UnreadablePdf { .. }), "{err}");
}

#[test]
fn markerless_text_needs_the_fallback() {
    let (_, extractor) = setup();
    let text = "A suspect traded images on Facebook.";
    let err = pipeline::process_text(text, "memo", "ICAC", 2014, &extractor, false).unwrap_err();
    assert!(matches!(err, Error::NoMarkersFound));

    let out = pipeline::process_text(text, "memo", "ICAC", 2014, &extractor, true).unwrap();
    assert!(out.used_fallback);
    assert_eq!(out.records.len(), 1);
    assert!(out.records[0].features.platforms.contains("facebook"));
    assert!(out.warnings.iter().any(|w| w.contains("no temporal markers")));
}

#[test]
fn out_of_range_values_reject_the_case() {
    let (_, extractor) = setup();
    let text = "In June of 2012, a 250-year-old suspect was arrested. In July of 2012, a 40-year-old suspect was arrested.";
    let out = pipeline::process_text(text, "doc", "ICAC", 2012, &extractor, false).unwrap();
    assert_eq!(out.records.len(), 1);
    assert_eq!(out.rejected.len(), 1);
    assert!(out.has_errors());
    assert_eq!(out.records[0].features.perpetrator_age, Some(40));
}

#[test]
fn divergent_marker_year_is_a_warning() {
    let (_, extractor) = setup();
    let text = "In June of 2009, a suspect was arrested.";
    let out = pipeline::process_text(text, "doc", "ICAC", 2012, &extractor, false).unwrap();
    assert_eq!(out.records.len(), 1);
    assert!(out.warnings.iter().any(|w| w.contains("2009")));
}

#[test]
fn documents_keep_input_order() {
    let (config, extractor) = setup();
    let dir = tempfile::tempdir().unwrap();
    let mut rng = common::rng(9);
    let paths: Vec<PathBuf> = (0..6)
        .map(|i| {
            let year = 2011 + i % 4;
            let (text, _) = common::document(&mut rng, 2 + i as usize, year);
            let p = dir.path().join(format!("icac_{year}_{i}.txt"));
            std::fs::write(&p, text).unwrap();
            p
        })
        .collect();
    let out = pipeline::process_documents(&paths, &config, &extractor, &IngestOptions::default());
    let got: Vec<&PathBuf> = out.iter().map(|(p, _)| p).collect();
    assert_eq!(got, paths.iter().collect::<Vec<_>>());
    for (i, (_, r)) in out.iter().enumerate() {
        assert_eq!(r.as_ref().unwrap().records.len(), 2 + i);
    }
}

#[test]
fn coverage_counts_populated_families() {
    let records = common::corpus(5, 40);
    let rows = pipeline::coverage(&records);
    assert_eq!(rows.len(), 9);
    let topics = rows.iter().find(|r| r.feature == "Case topics").unwrap();
    let expected = records.iter().filter(|r| !r.features.case_topics.is_empty()).count();
    assert_eq!(topics.cases, expected);
    for r in &rows {
        assert!(r.cases <= records.len());
        assert!((0.0..=100.0).contains(&r.percent));
    }
}

#[test]
fn analysis_of_empty_input_has_no_triage() {
    let analysis = pipeline::analyze(&[], &Config::default()).unwrap();
    assert!(analysis.triage.is_empty());
    assert!(analysis.triage_summary.is_none());
    assert_eq!(analysis.clusters.total_cases, 0);
}

#[test]
fn analysis_is_deterministic() {
    let records = common::corpus(13, 80);
    let config = Config::default();
    let a = serde_json::to_string(&pipeline::analyze(&records, &config).unwrap()).unwrap();
    let b = serde_json::to_string(&pipeline::analyze(&records, &config).unwrap()).unwrap();
    assert_eq!(a, b);
}
