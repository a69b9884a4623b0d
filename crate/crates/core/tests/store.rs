mod common;

use casetriage::store::{CaseFilter, Store, DATA_TABLES};
use casetriage::Error;

#[test]
fn schema_has_the_four_tables() {
    let s = Store::in_memory().unwrap();
    let names = s.table_names().unwrap();
    for t in DATA_TABLES {
        assert!(names.iter().any(|n| n == t), "{t}");
    }
}

#[test]
fn reopening_keeps_data() {
    let dir = tempfile::tempdir().unwrap();
    let db = dir.path().join("c.db");
    let records = common::corpus(1, 12);
    Store::init_schema(&db).unwrap().upsert_all(&records).unwrap();
    let again = Store::init_schema(&db).unwrap();
    assert_eq!(again.case_count().unwrap(), records.len());
    assert_eq!(again.get_case(&records[3].case_id).unwrap().as_ref(), Some(&records[3]));
}

#[test]
fn other_schema_versions_are_refused() {
    let dir = tempfile::tempdir().unwrap();
    let db = dir.path().join("old.db");
    drop(Store::init_schema(&db).unwrap());
    let conn = rusqlite::Connection::open(&db).unwrap();
    conn.execute("UPDATE schema_meta SET value = '99' WHERE key = 'version'", []).unwrap();
    drop(conn);
    assert!(matches!(Store::init_schema(&db), Err(Error::SchemaVersionMismatch { .. })));
    assert!(matches!(Store::open_read_only(&db), Err(Error::SchemaVersionMismatch { .. })));
}

#[test]
fn foreign_databases_are_refused() {
    let dir = tempfile::tempdir().unwrap();
    let db = dir.path().join("other.db");
    let conn = rusqlite::Connection::open(&db).unwrap();
    conn.execute_batch("CREATE TABLE invoices (id INTEGER PRIMARY KEY);").unwrap();
    drop(conn);
    assert!(Store::init_schema(&db).is_err());
}

#[test]
fn read_only_store_cannot_write() {
    let dir = tempfile::tempdir().unwrap();
    let db = dir.path().join("c.db");
    drop(Store::init_schema(&db).unwrap());
    let mut ro = Store::open_read_only(&db).unwrap();
    let record = common::corpus(2, 1).remove(0);
    assert!(matches!(ro.upsert_case(&record), Err(Error::Storage(_))));
    assert!(matches!(Store::open_read_only(dir.path().join("missing.db")), Err(Error::FileNotFound(_))));
}

#[test]
fn upsert_replaces_rows_and_keeps_created_at() {
    let mut s = Store::in_memory().unwrap();
    let mut record = common::corpus(3, 1).remove(0);
    s.upsert_case(&record).unwrap();
    let created = s.get_case(&record.case_id).unwrap().unwrap().created_at;

    record.features.victim_ages = [7, 9].into();
    record.features.prosecution = ["charged".to_string()].into();
    record.spans.retain(|sp| !sp.feature_path.starts_with("victim_ages") && !sp.feature_path.starts_with("prosecution"));
    record.created_at = created + chrono::Duration::days(3);
    s.upsert_case(&record).unwrap();

    let back = s.get_case(&record.case_id).unwrap().unwrap();
    assert_eq!(back.created_at, created);
    assert_eq!(back.features.victim_ages, record.features.victim_ages);
    assert_eq!(s.case_count().unwrap(), 1);
    assert_eq!(s.row_count("victim_demographics").unwrap(), 1);
    let rows = s.normalized_rows(&record.case_id).unwrap().unwrap();
    assert_eq!(rows.victim_ages, [7, 9]);
    assert_eq!(rows.booking_status, ["charged"]);
}

#[test]
fn invalid_records_are_not_stored() {
    let mut s = Store::in_memory().unwrap();
    let mut record = common::corpus(4, 1).remove(0);
    record.raw_text.clear();
    assert!(s.upsert_case(&record).is_err());

    let mut record = common::corpus(4, 1).remove(0);
    record.features.perpetrator_age = Some(400);
    assert!(matches!(s.upsert_case(&record), Err(Error::Validation { .. })));
    assert_eq!(s.case_count().unwrap(), 0);
}

#[test]
fn queries_filter_and_sort() {
    let mut s = Store::in_memory().unwrap();
    let records = common::corpus(5, 60);
    s.upsert_all(&records).unwrap();

    let all = s.query_cases(&CaseFilter::default()).unwrap();
    assert_eq!(all.len(), 60);
    let keys: Vec<(i32, u32, String)> = all
        .iter()
        .map(|r| (r.year, casetriage::batcher::month_ordinal(&r.month), r.case_id.clone()))
        .collect();
    assert!(keys.windows(2).all(|w| w[0] <= w[1]));

    let filter = CaseFilter {
        org: Some("AZICAC".into()),
        year_from: Some(2012),
        year_to: Some(2013),
        ..CaseFilter::default()
    };
    let got = s.query_cases(&filter).unwrap();
    let expected = records
        .iter()
        .filter(|r| r.source_org == "AZICAC" && (2012..=2013).contains(&r.year))
        .count();
    assert_eq!(got.len(), expected);

    let ids = vec![records[0].case_id.clone(), records[5].case_id.clone(), "missing".into()];
    let by_id = s
        .query_cases(&CaseFilter {
            case_ids: Some(ids),
            ..CaseFilter::default()
        })
        .unwrap();
    assert_eq!(by_id.len(), 2);
}

#[test]
fn merge_keeps_destination_on_collision() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a.db"), dir.path().join("b.db"));
    let records = common::corpus(6, 5);
    let mut sa = Store::init_schema(&a).unwrap();
    sa.upsert_all(&records[..3]).unwrap();

    let mut changed = records[2].clone();
    changed.features.platforms.insert("whatsapp".into());
    changed.spans.push(casetriage::HighlightSpan {
        case_id: changed.case_id.clone(),
        feature_path: "platforms.whatsapp".into(),
        start: 0,
        end: 2,
        matched_text: changed.raw_text[..2].to_string(),
        rule_id: "test".into(),
    });
    let mut sb = Store::init_schema(&b).unwrap();
    sb.upsert_all([&changed, &records[3]]).unwrap();
    drop(sb);

    let report = casetriage::store::merge_databases(&mut sa, &b).unwrap();
    assert_eq!(report.copied, 1);
    assert_eq!(report.skipped_collisions, vec![records[2].case_id.clone()]);
    assert_eq!(sa.get_case(&records[2].case_id).unwrap().as_ref(), Some(&records[2]));
}
