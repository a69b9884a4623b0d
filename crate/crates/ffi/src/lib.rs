//! C ABI over the casetriage pipeline.
//!
//! Handles are opaque and owned by the caller: every `*_open`/`*_new` has a
//! matching `*_close`/`*_free`. Functions return a [`CtStatus`]; on failure
//! [`ct_last_error_message`] describes the error on the calling thread.
//! Strings handed out by the library are NUL-terminated UTF-8 and must be
//! released with [`ct_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{self, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use casetriage::api::Snapshot;
use casetriage::insights::{filter_by_tags, TagQuery, TagVocabulary};
use casetriage::pipeline::{self, IngestOptions};
use casetriage::store::Store;
use casetriage::{Config, Error, Extractor};

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CtStatus {
    Ok = 0,
    NullArgument = 1,
    InvalidUtf8 = 2,
    InvalidArgument = 3,
    NotFound = 4,
    Io = 5,
    Storage = 6,
    SchemaMismatch = 7,
    UnreadableDocument = 8,
    NoMarkers = 9,
    Validation = 10,
    InvalidQuery = 11,
    Config = 12,
    EmptyInput = 13,
    Panic = 14,
}

/// An open case database plus the configuration used to extract into it.
pub struct CtStore {
    store: Store,
    config: Config,
    extractor: Extractor,
}

/// Clusters, priorities and insights computed over a store's cases.
pub struct CtAnalysis {
    snapshot: Snapshot,
    vocabulary: TagVocabulary,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

struct Failure(CtStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = match &e {
            Error::FileNotFound(_) => CtStatus::NotFound,
            Error::UnreadablePdf { .. } | Error::EmptyDocument(_) => CtStatus::UnreadableDocument,
            Error::NoMarkersFound => CtStatus::NoMarkers,
            Error::UnknownCategory(_) | Error::UnknownTag { .. } | Error::InvalidQuery(_) => CtStatus::InvalidQuery,
            Error::EmptyInput => CtStatus::EmptyInput,
            Error::Validation { .. } => CtStatus::Validation,
            Error::SchemaVersionMismatch { .. } => CtStatus::SchemaMismatch,
            Error::Storage(_) => CtStatus::Storage,
            Error::Serialization(_) | Error::InvalidArgument(_) => CtStatus::InvalidArgument,
            Error::Config(_) | Error::Pattern { .. } => CtStatus::Config,
            Error::Io(_) => CtStatus::Io,
        };
        Failure(status, e.to_string())
    }
}

fn set_last_error(message: String) {
    let c = CString::new(message.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|slot| *slot.borrow_mut() = Some(c));
}

/// Runs `f`, recording its error and turning panics into `CtStatus::Panic`.
fn guard(f: impl FnOnce() -> Result<(), Failure>) -> CtStatus {
    match panic::catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|slot| *slot.borrow_mut() = None);
            CtStatus::Ok
        }
        Ok(Err(Failure(status, message))) => {
            set_last_error(message);
            status
        }
        Err(payload) => {
            let message = payload
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| payload.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panic".into());
            set_last_error(format!("internal panic: {message}"));
            CtStatus::Panic
        }
    }
}

fn null(what: &str) -> Failure {
    Failure(CtStatus::NullArgument, format!("`{what}` is null"))
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Failure(CtStatus::InvalidUtf8, format!("`{what}` is not valid UTF-8")))
}

unsafe fn opt_str_arg<'a>(p: *const c_char, what: &str) -> Result<Option<&'a str>, Failure> {
    if p.is_null() {
        Ok(None)
    } else {
        str_arg(p, what).map(Some)
    }
}

unsafe fn handle<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn handle_mut<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, Failure> {
    p.as_mut().ok_or_else(|| null(what))
}

unsafe fn write_out<T>(out: *mut T, value: T) -> Result<(), Failure> {
    if out.is_null() {
        return Err(null("out"));
    }
    out.write(value);
    Ok(())
}

/// Like [`guard`] for calls that hand back JSON; `*out` is null unless the
/// call succeeds.
unsafe fn json_call<T: serde::Serialize>(out: *mut *mut c_char, f: impl FnOnce() -> Result<T, Failure>) -> CtStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        out.write(ptr::null_mut());
        let json = serde_json::to_string(&f()?).map_err(|e| Failure::from(Error::from(e)))?;
        let c = CString::new(json).map_err(|e| Failure(CtStatus::InvalidArgument, e.to_string()))?;
        out.write(c.into_raw());
        Ok(())
    })
}

/// Library version, a static string.
#[no_mangle]
pub extern "C" fn ct_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message of the last failed call on this thread, or null. Valid until the
/// next call into the library on the same thread.
#[no_mangle]
pub extern "C" fn ct_last_error_message() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Releases a string returned by the library. Null is ignored.
///
/// # Safety
/// `s` must come from this library and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn ct_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

unsafe fn open(
    path: *const c_char,
    config_path: *const c_char,
    read_only: bool,
    out: *mut *mut CtStore,
) -> CtStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        out.write(ptr::null_mut());
        let path = str_arg(path, "path")?;
        let config = Config::resolve(opt_str_arg(config_path, "config_path")?.map(Path::new))?;
        let extractor = Extractor::new(&config)?;
        let store = if read_only {
            Store::open_read_only(path)?
        } else {
            Store::init_schema(path)?
        };
        out.write(Box::into_raw(Box::new(CtStore {
            store,
            config,
            extractor,
        })));
        Ok(())
    })
}

/// Opens or creates the database at `path`. `config_path` may be null for
/// the built-in configuration.
///
/// # Safety
/// String arguments must be null or NUL-terminated; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ct_store_open(
    path: *const c_char,
    config_path: *const c_char,
    out: *mut *mut CtStore,
) -> CtStatus {
    open(path, config_path, false, out)
}

/// Opens an existing database without write access.
///
/// # Safety
/// As for [`ct_store_open`].
#[no_mangle]
pub unsafe extern "C" fn ct_store_open_read_only(
    path: *const c_char,
    config_path: *const c_char,
    out: *mut *mut CtStore,
) -> CtStatus {
    open(path, config_path, true, out)
}

/// Closes a store. Null is ignored.
///
/// # Safety
/// `store` must come from `ct_store_open*` and not have been closed.
#[no_mangle]
pub unsafe extern "C" fn ct_store_close(store: *mut CtStore) {
    if !store.is_null() {
        drop(Box::from_raw(store));
    }
}

/// # Safety
/// `store` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ct_store_case_count(store: *const CtStore, out: *mut usize) -> CtStatus {
    guard(|| {
        let s = handle(store, "store")?;
        write_out(out, s.store.case_count()?)
    })
}

/// Batches and extracts `text` as a report of `org` for `year`, storing the
/// cases. `out_stored` (nullable) receives the number of cases stored. Cases
/// that fail validation are skipped; if any were, the call still stores the
/// rest and returns `Validation`.
///
/// # Safety
/// `store` must be a live handle; strings must be NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn ct_ingest_text(
    store: *mut CtStore,
    text: *const c_char,
    org: *const c_char,
    year: i32,
    whole_doc_fallback: bool,
    out_stored: *mut usize,
) -> CtStatus {
    guard(|| {
        let s = handle_mut(store, "store")?;
        let text = str_arg(text, "text")?;
        let org = str_arg(org, "org")?;
        let outcome = pipeline::process_text(text, "ffi", org, year, &s.extractor, whole_doc_fallback)?;
        let stored = s.store.upsert_all(&outcome.records)?;
        if !out_stored.is_null() {
            out_stored.write(stored);
        }
        if outcome.has_errors() {
            return Err(Failure(CtStatus::Validation, outcome.rejected.join("; ")));
        }
        Ok(())
    })
}

/// Ingests a PDF or text file, taking organization and year from the file
/// name unless `org` is non-null or `year` is non-zero.
///
/// # Safety
/// As for [`ct_ingest_text`].
#[no_mangle]
pub unsafe extern "C" fn ct_ingest_file(
    store: *mut CtStore,
    path: *const c_char,
    org: *const c_char,
    year: i32,
    whole_doc_fallback: bool,
    out_stored: *mut usize,
) -> CtStatus {
    guard(|| {
        let s = handle_mut(store, "store")?;
        let path = str_arg(path, "path")?;
        let opts = IngestOptions {
            org: opt_str_arg(org, "org")?.map(String::from),
            year: (year != 0).then_some(year),
            whole_doc_fallback,
        };
        let outcome = pipeline::process_document(Path::new(path), &s.config, &s.extractor, &opts)?;
        let stored = s.store.upsert_all(&outcome.records)?;
        if !out_stored.is_null() {
            out_stored.write(stored);
        }
        if outcome.has_errors() {
            return Err(Failure(CtStatus::Validation, outcome.rejected.join("; ")));
        }
        Ok(())
    })
}

/// Writes the stored case as JSON, including its highlight spans. Functions
/// returning JSON set `*out` to null when they fail.
///
/// # Safety
/// `store` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ct_store_case_json(
    store: *const CtStore,
    case_id: *const c_char,
    out: *mut *mut c_char,
) -> CtStatus {
    json_call(out, || {
        let s = handle(store, "store")?;
        let id = str_arg(case_id, "case_id")?;
        s.store
            .get_case(id)?
            .ok_or_else(|| Failure(CtStatus::NotFound, format!("no case `{id}`")))
    })
}

/// Copies the cases of the database at `src_path` into `store`, keeping
/// existing cases on id collisions.
///
/// # Safety
/// `store` must be a live handle; out pointers are nullable.
#[no_mangle]
pub unsafe extern "C" fn ct_store_merge(
    store: *mut CtStore,
    src_path: *const c_char,
    out_copied: *mut usize,
    out_skipped: *mut usize,
) -> CtStatus {
    guard(|| {
        let s = handle_mut(store, "store")?;
        let report = s.store.merge_from(str_arg(src_path, "src_path")?)?;
        if !out_copied.is_null() {
            out_copied.write(report.copied);
        }
        if !out_skipped.is_null() {
            out_skipped.write(report.skipped_collisions.len());
        }
        Ok(())
    })
}

/// Clusters, ranks and summarizes every case in `store`.
///
/// # Safety
/// `store` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ct_analysis_new(store: *const CtStore, out: *mut *mut CtAnalysis) -> CtStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        out.write(ptr::null_mut());
        let s = handle(store, "store")?;
        let snapshot = Snapshot::build(s.store.all_cases()?, &s.config)?;
        out.write(Box::into_raw(Box::new(CtAnalysis {
            snapshot,
            vocabulary: TagVocabulary::from_config(&s.config),
        })));
        Ok(())
    })
}

/// Frees an analysis. Null is ignored.
///
/// # Safety
/// `analysis` must come from [`ct_analysis_new`] and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn ct_analysis_free(analysis: *mut CtAnalysis) {
    if !analysis.is_null() {
        drop(Box::from_raw(analysis));
    }
}

/// # Safety
/// `analysis` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ct_analysis_clusters_json(analysis: *const CtAnalysis, out: *mut *mut c_char) -> CtStatus {
    json_call(out, || Ok(&handle(analysis, "analysis")?.snapshot.analysis().clusters))
}

/// Ranked priority results followed by the band summary, as
/// `{"summary": ..., "results": [...]}`.
///
/// # Safety
/// `analysis` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ct_analysis_triage_json(analysis: *const CtAnalysis, out: *mut *mut c_char) -> CtStatus {
    json_call(out, || {
        let a = handle(analysis, "analysis")?.snapshot.analysis();
        Ok(serde_json::json!({ "summary": a.triage_summary, "results": a.triage }))
    })
}

/// # Safety
/// `analysis` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ct_analysis_insights_json(analysis: *const CtAnalysis, out: *mut *mut c_char) -> CtStatus {
    json_call(out, || Ok(&handle(analysis, "analysis")?.snapshot.analysis().insights))
}

/// Cases carrying every tag of `query_json`
/// (`{"selected_tags": [{"category": ..., "tag": ...}]}`), each with the
/// spans that justify its tags.
///
/// # Safety
/// `analysis` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ct_analysis_filter_json(
    analysis: *const CtAnalysis,
    query_json: *const c_char,
    out: *mut *mut c_char,
) -> CtStatus {
    json_call(out, || {
        let a = handle(analysis, "analysis")?;
        let query: TagQuery = serde_json::from_str(str_arg(query_json, "query_json")?)
            .map_err(|e| Failure(CtStatus::InvalidQuery, format!("malformed query: {e}")))?;
        let hits = filter_by_tags(a.snapshot.records(), &query, &a.vocabulary)?;
        let cases: Vec<_> = hits
            .iter()
            .map(|h| serde_json::json!({ "case_id": h.record.case_id, "justifications": h.justifications }))
            .collect();
        Ok(serde_json::json!({ "count": cases.len(), "cases": cases }))
    })
}
