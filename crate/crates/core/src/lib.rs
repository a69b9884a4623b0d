//! Ingestion, feature extraction, clustering and triage of case reports.
//!
//! Reports are cleaned, split into cases at month/year markers, and run
//! through pattern-based extractors that record a source span for every
//! feature. Cases live in a single SQLite file and are analyzed by
//! weighted-Jaccard clustering, factor-weighted triage and aggregate
//! insights, served read-only over HTTP.

pub mod api;
pub mod batcher;
pub mod cli;
pub mod cluster;
pub mod config;
pub mod error;
pub mod extractor;
pub mod ingest;
pub mod insights;
pub mod pipeline;
pub mod store;
pub mod triage;

pub use config::Config;
pub use error::{Error, Result};
pub use extractor::{CaseRecord, Extractor, FeatureSet, HighlightSpan};
