//! Single-file SQLite case store.
//!
//! `cases` holds the raw text and the canonical feature JSON; three
//! normalized tables mirror the demographic and outcome fields. A
//! `schema_meta` row stamps the schema version, and opening a file with any
//! other version is refused.

use std::path::{Path, PathBuf};

use chrono::{DateTime, SecondsFormat, Utc};
use rusqlite::{params, params_from_iter, Connection, OpenFlags, OptionalExtension, Transaction};
use serde::{Deserialize, Serialize};

use crate::batcher::month_ordinal;
use crate::error::{Error, Result};
use crate::extractor::{validate, CaseRecord, FeatureSet, HighlightSpan, IssueSeverity};

pub const SCHEMA_VERSION: i64 = 1;

/// The four data tables, in creation order.
pub const DATA_TABLES: [&str; 4] = [
    "cases",
    "victim_demographics",
    "perpetrator_demographics",
    "prosecution_outcomes",
];

const SCHEMA: &str = "
CREATE TABLE IF NOT EXISTS schema_meta (
    key   TEXT PRIMARY KEY,
    value TEXT NOT NULL
);
CREATE TABLE IF NOT EXISTS cases (
    case_id            TEXT PRIMARY KEY,
    source_org         TEXT NOT NULL,
    year               INTEGER NOT NULL,
    month              TEXT NOT NULL,
    raw_text           TEXT NOT NULL CHECK (length(raw_text) > 0),
    extracted_features TEXT NOT NULL,
    highlight_spans    TEXT NOT NULL,
    created_at         TEXT NOT NULL
);
CREATE INDEX IF NOT EXISTS idx_cases_org_year ON cases (source_org, year);
CREATE TABLE IF NOT EXISTS victim_demographics (
    case_id       TEXT PRIMARY KEY REFERENCES cases (case_id) ON DELETE CASCADE,
    victim_count  INTEGER,
    victim_ages   TEXT NOT NULL,
    victim_gender TEXT
);
CREATE TABLE IF NOT EXISTS perpetrator_demographics (
    case_id                 TEXT PRIMARY KEY REFERENCES cases (case_id) ON DELETE CASCADE,
    perpetrator_age         INTEGER,
    registered_sex_offender INTEGER NOT NULL,
    relationship_to_victim  TEXT NOT NULL
);
CREATE TABLE IF NOT EXISTS prosecution_outcomes (
    case_id        TEXT PRIMARY KEY REFERENCES cases (case_id) ON DELETE CASCADE,
    charges        TEXT NOT NULL,
    booking_status TEXT NOT NULL,
    jail_info      TEXT
);
";

/// Selection over stored cases. Empty fields match everything.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CaseFilter {
    pub org: Option<String>,
    pub year_from: Option<i32>,
    pub year_to: Option<i32>,
    pub month: Option<String>,
    pub case_ids: Option<Vec<String>>,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct MergeReport {
    pub copied: usize,
    pub skipped_collisions: Vec<String>,
}

/// Normalized-table view of one case, as stored.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NormalizedRows {
    pub victim_count: Option<u32>,
    pub victim_ages: Vec<u32>,
    pub victim_gender: Option<String>,
    pub perpetrator_age: Option<u32>,
    pub registered_sex_offender: bool,
    pub relationship_to_victim: String,
    pub charges: Vec<String>,
    pub booking_status: Vec<String>,
    pub jail_info: Option<String>,
}

impl NormalizedRows {
    pub fn from_features(f: &FeatureSet) -> Self {
        Self {
            victim_count: f.victim_count,
            victim_ages: f.victim_ages.iter().copied().collect(),
            victim_gender: f.victim_gender.clone(),
            perpetrator_age: f.perpetrator_age,
            registered_sex_offender: f.registered_sex_offender,
            relationship_to_victim: f.relationship_to_victim.clone(),
            charges: f.charges.clone(),
            booking_status: f.prosecution.iter().cloned().collect(),
            jail_info: f.jail_info.clone(),
        }
    }
}

#[derive(Debug)]
pub struct Store {
    conn: Connection,
    path: PathBuf,
}

fn timestamp(t: &DateTime<Utc>) -> String {
    t.to_rfc3339_opts(SecondsFormat::Nanos, true)
}

fn stored_version(conn: &Connection) -> Result<Option<String>> {
    let has_meta: bool = conn.query_row(
        "SELECT EXISTS (SELECT 1 FROM sqlite_master WHERE type = 'table' AND name = 'schema_meta')",
        [],
        |r| r.get(0),
    )?;
    if !has_meta {
        return Ok(None);
    }
    Ok(conn
        .query_row("SELECT value FROM schema_meta WHERE key = 'version'", [], |r| r.get(0))
        .optional()?)
}

fn user_table_count(conn: &Connection) -> Result<i64> {
    Ok(conn.query_row(
        "SELECT count(*) FROM sqlite_master WHERE type = 'table' AND name NOT LIKE 'sqlite_%'",
        [],
        |r| r.get(0),
    )?)
}

fn check_version(conn: &Connection) -> Result<()> {
    match stored_version(conn)? {
        Some(v) if v == SCHEMA_VERSION.to_string() => Ok(()),
        Some(v) => Err(Error::SchemaVersionMismatch {
            expected: SCHEMA_VERSION,
            found: v,
        }),
        None => Err(Error::SchemaVersionMismatch {
            expected: SCHEMA_VERSION,
            found: "none".into(),
        }),
    }
}

impl Store {
    /// Opens or creates a store at `path`. Creating the schema is idempotent;
    /// a file stamped with another version, or holding unrelated tables, is
    /// refused.
    pub fn init_schema(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref().to_path_buf();
        let conn = Connection::open(&path)?;
        Self::prepare(conn, path)
    }

    /// An in-memory store, used for benchmarking and tests.
    pub fn in_memory() -> Result<Self> {
        Self::prepare(Connection::open_in_memory()?, PathBuf::from(":memory:"))
    }

    fn prepare(conn: Connection, path: PathBuf) -> Result<Self> {
        conn.pragma_update(None, "foreign_keys", true)?;
        match stored_version(&conn)? {
            None if user_table_count(&conn)? == 0 => {
                conn.execute_batch(SCHEMA)?;
                conn.execute(
                    "INSERT INTO schema_meta (key, value) VALUES ('version', ?1)",
                    [SCHEMA_VERSION.to_string()],
                )?;
            }
            _ => check_version(&conn)?,
        }
        Ok(Self { conn, path })
    }

    /// Opens an existing store without write access.
    pub fn open_read_only(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref().to_path_buf();
        if !path.is_file() {
            return Err(Error::FileNotFound(path));
        }
        let conn = Connection::open_with_flags(
            &path,
            OpenFlags::SQLITE_OPEN_READ_ONLY | OpenFlags::SQLITE_OPEN_NO_MUTEX | OpenFlags::SQLITE_OPEN_URI,
        )?;
        check_version(&conn)?;
        Ok(Self { conn, path })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    /// Writes the case row and its three normalized rows in one transaction.
    /// An existing row with the same id is replaced, keeping its original
    /// `created_at` so repeated ingestion leaves identical content.
    pub fn upsert_case(&mut self, record: &CaseRecord) -> Result<()> {
        if record.raw_text.is_empty() {
            return Err(Error::InvalidArgument(format!("case {} has empty raw_text", record.case_id)));
        }
        let issues: Vec<_> = validate(&record.features)
            .into_iter()
            .filter(|i| i.severity == IssueSeverity::Error)
            .collect();
        if !issues.is_empty() {
            return Err(Error::Validation {
                case_id: record.case_id.clone(),
                issues,
            });
        }
        let tx = self.conn.transaction()?;
        write_case(&tx, record)?;
        tx.commit()?;
        Ok(())
    }

    /// Upserts many records in a single transaction.
    pub fn upsert_all<'a>(&mut self, records: impl IntoIterator<Item = &'a CaseRecord>) -> Result<usize> {
        let tx = self.conn.transaction()?;
        let mut n = 0;
        for record in records {
            let issues: Vec<_> = validate(&record.features)
                .into_iter()
                .filter(|i| i.severity == IssueSeverity::Error)
                .collect();
            if !issues.is_empty() {
                return Err(Error::Validation {
                    case_id: record.case_id.clone(),
                    issues,
                });
            }
            write_case(&tx, record)?;
            n += 1;
        }
        tx.commit()?;
        Ok(n)
    }

    pub fn get_case(&self, case_id: &str) -> Result<Option<CaseRecord>> {
        let filter = CaseFilter {
            case_ids: Some(vec![case_id.to_string()]),
            ..CaseFilter::default()
        };
        Ok(self.query_cases(&filter)?.into_iter().next())
    }

    /// Matching records ordered by (year, month ordinal, case_id).
    pub fn query_cases(&self, filter: &CaseFilter) -> Result<Vec<CaseRecord>> {
        let mut sql = String::from(
            "SELECT case_id, source_org, year, month, raw_text, extracted_features, highlight_spans, created_at \
             FROM cases WHERE 1 = 1",
        );
        let mut args: Vec<rusqlite::types::Value> = Vec::new();
        if let Some(org) = &filter.org {
            sql.push_str(" AND source_org = ?");
            args.push(org.clone().into());
        }
        if let Some(from) = filter.year_from {
            sql.push_str(" AND year >= ?");
            args.push(i64::from(from).into());
        }
        if let Some(to) = filter.year_to {
            sql.push_str(" AND year <= ?");
            args.push(i64::from(to).into());
        }
        if let Some(month) = &filter.month {
            sql.push_str(" AND lower(month) = lower(?)");
            args.push(month.clone().into());
        }
        if let Some(ids) = &filter.case_ids {
            if ids.is_empty() {
                return Ok(Vec::new());
            }
            sql.push_str(" AND case_id IN (");
            sql.push_str(&vec!["?"; ids.len()].join(", "));
            sql.push(')');
            args.extend(ids.iter().map(|id| id.clone().into()));
        }

        let mut stmt = self.conn.prepare(&sql)?;
        let rows = stmt.query_map(params_from_iter(args), |row| {
            Ok((
                row.get::<_, String>(0)?,
                row.get::<_, String>(1)?,
                row.get::<_, i32>(2)?,
                row.get::<_, String>(3)?,
                row.get::<_, String>(4)?,
                row.get::<_, String>(5)?,
                row.get::<_, String>(6)?,
                row.get::<_, String>(7)?,
            ))
        })?;
        let mut records = Vec::new();
        for row in rows {
            let (case_id, source_org, year, month, raw_text, features, spans, created_at) = row?;
            let created_at = DateTime::parse_from_rfc3339(&created_at)
                .map_err(|e| Error::Config(format!("case {case_id}: bad created_at `{created_at}`: {e}")))?
                .with_timezone(&Utc);
            records.push(CaseRecord {
                features: serde_json::from_str::<FeatureSet>(&features)?,
                spans: serde_json::from_str::<Vec<HighlightSpan>>(&spans)?,
                case_id,
                source_org,
                year,
                month,
                raw_text,
                created_at,
            });
        }
        records.sort_by(|a, b| {
            (a.year, month_ordinal(&a.month), &a.case_id).cmp(&(b.year, month_ordinal(&b.month), &b.case_id))
        });
        Ok(records)
    }

    pub fn all_cases(&self) -> Result<Vec<CaseRecord>> {
        self.query_cases(&CaseFilter::default())
    }

    pub fn case_count(&self) -> Result<usize> {
        let n: i64 = self.conn.query_row("SELECT count(*) FROM cases", [], |r| r.get(0))?;
        Ok(n as usize)
    }

    pub fn row_count(&self, table: &str) -> Result<usize> {
        if !DATA_TABLES.contains(&table) {
            return Err(Error::InvalidArgument(format!("unknown table `{table}`")));
        }
        let n: i64 = self
            .conn
            .query_row(&format!("SELECT count(*) FROM {table}"), [], |r| r.get(0))?;
        Ok(n as usize)
    }

    pub fn table_names(&self) -> Result<Vec<String>> {
        let mut stmt = self
            .conn
            .prepare("SELECT name FROM sqlite_master WHERE type = 'table' AND name NOT LIKE 'sqlite_%' ORDER BY name")?;
        let names = stmt.query_map([], |r| r.get(0))?.collect::<rusqlite::Result<Vec<String>>>()?;
        Ok(names)
    }

    /// The normalized rows stored for `case_id`, if the case exists.
    pub fn normalized_rows(&self, case_id: &str) -> Result<Option<NormalizedRows>> {
        let row = self
            .conn
            .query_row(
                "SELECT v.victim_count, v.victim_ages, v.victim_gender,
                        p.perpetrator_age, p.registered_sex_offender, p.relationship_to_victim,
                        o.charges, o.booking_status, o.jail_info
                 FROM cases c
                 JOIN victim_demographics v ON v.case_id = c.case_id
                 JOIN perpetrator_demographics p ON p.case_id = c.case_id
                 JOIN prosecution_outcomes o ON o.case_id = c.case_id
                 WHERE c.case_id = ?1",
                [case_id],
                |r| {
                    Ok((
                        r.get::<_, Option<u32>>(0)?,
                        r.get::<_, String>(1)?,
                        r.get::<_, Option<String>>(2)?,
                        r.get::<_, Option<u32>>(3)?,
                        r.get::<_, bool>(4)?,
                        r.get::<_, String>(5)?,
                        r.get::<_, String>(6)?,
                        r.get::<_, String>(7)?,
                        r.get::<_, Option<String>>(8)?,
                    ))
                },
            )
            .optional()?;
        let Some((victim_count, ages, victim_gender, perpetrator_age, rso, relationship, charges, booking, jail_info)) =
            row
        else {
            return Ok(None);
        };
        Ok(Some(NormalizedRows {
            victim_count,
            victim_ages: serde_json::from_str(&ages)?,
            victim_gender,
            perpetrator_age,
            registered_sex_offender: rso,
            relationship_to_victim: relationship,
            charges: serde_json::from_str(&charges)?,
            booking_status: serde_json::from_str(&booking)?,
            jail_info,
        }))
    }

    /// Copies every case of the store at `src_path` into this one. Ids that
    /// already exist here are kept and reported as collisions.
    pub fn merge_from(&mut self, src_path: impl AsRef<Path>) -> Result<MergeReport> {
        let incoming = Store::open_read_only(src_path)?.all_cases()?;
        let tx = self.conn.transaction()?;
        let mut report = MergeReport::default();
        for record in &incoming {
            let exists: bool = tx.query_row(
                "SELECT EXISTS (SELECT 1 FROM cases WHERE case_id = ?1)",
                [&record.case_id],
                |r| r.get(0),
            )?;
            if exists {
                report.skipped_collisions.push(record.case_id.clone());
            } else {
                write_case(&tx, record)?;
                report.copied += 1;
            }
        }
        tx.commit()?;
        Ok(report)
    }
}

/// Merges the store at `src_path` into `dest`.
pub fn merge_databases(dest: &mut Store, src_path: impl AsRef<Path>) -> Result<MergeReport> {
    dest.merge_from(src_path)
}

fn write_case(tx: &Transaction<'_>, record: &CaseRecord) -> Result<()> {
    let features = serde_json::to_string(&record.features)?;
    let spans = serde_json::to_string(&record.spans)?;
    tx.execute(
        "INSERT INTO cases (case_id, source_org, year, month, raw_text, extracted_features, highlight_spans, created_at)
         VALUES (?1, ?2, ?3, ?4, ?5, ?6, ?7, ?8)
         ON CONFLICT (case_id) DO UPDATE SET
             source_org = excluded.source_org,
             year = excluded.year,
             month = excluded.month,
             raw_text = excluded.raw_text,
             extracted_features = excluded.extracted_features,
             highlight_spans = excluded.highlight_spans",
        params![
            record.case_id,
            record.source_org,
            record.year,
            record.month,
            record.raw_text,
            features,
            spans,
            timestamp(&record.created_at),
        ],
    )?;
    let rows = NormalizedRows::from_features(&record.features);
    tx.execute(
        "INSERT OR REPLACE INTO victim_demographics (case_id, victim_count, victim_ages, victim_gender)
         VALUES (?1, ?2, ?3, ?4)",
        params![
            record.case_id,
            rows.victim_count,
            serde_json::to_string(&rows.victim_ages)?,
            rows.victim_gender,
        ],
    )?;
    tx.execute(
        "INSERT OR REPLACE INTO perpetrator_demographics
             (case_id, perpetrator_age, registered_sex_offender, relationship_to_victim)
         VALUES (?1, ?2, ?3, ?4)",
        params![
            record.case_id,
            rows.perpetrator_age,
            rows.registered_sex_offender,
            rows.relationship_to_victim,
        ],
    )?;
    tx.execute(
        "INSERT OR REPLACE INTO prosecution_outcomes (case_id, charges, booking_status, jail_info)
         VALUES (?1, ?2, ?3, ?4)",
        params![
            record.case_id,
            serde_json::to_string(&rows.charges)?,
            serde_json::to_string(&rows.booking_status)?,
            rows.jail_info,
        ],
    )?;
    Ok(())
}
