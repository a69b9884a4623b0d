use std::path::PathBuf;

use crate::extractor::ValidationIssue;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("file not found: {}", .0.display())]
    FileNotFound(PathBuf),

    #[error("unreadable PDF {}: {reason}", .path.display())]
    UnreadablePdf { path: PathBuf, reason: String },

    #[error("no extractable text in {}", .0.display())]
    EmptyDocument(PathBuf),

    #[error("no temporal markers found in document")]
    NoMarkersFound,

    #[error("unknown semantic category `{0}`")]
    UnknownCategory(String),

    #[error("unknown tag `{tag}` in category `{category}`")]
    UnknownTag { category: String, tag: String },

    #[error("invalid query: {0}")]
    InvalidQuery(String),

    #[error("empty input")]
    EmptyInput,

    #[error("case {case_id} failed validation: {}", summarize(.issues))]
    Validation {
        case_id: String,
        issues: Vec<ValidationIssue>,
    },

    #[error("schema version mismatch: expected {expected}, found {found}")]
    SchemaVersionMismatch { expected: i64, found: String },

    #[error("storage error: {0}")]
    Storage(#[from] rusqlite::Error),

    #[error("serialization error: {0}")]
    Serialization(#[from] serde_json::Error),

    #[error("config error: {0}")]
    Config(String),

    #[error("invalid pattern `{rule_id}`: {source}")]
    Pattern {
        rule_id: String,
        #[source]
        source: regex::Error,
    },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

fn summarize(issues: &[ValidationIssue]) -> String {
    issues
        .iter()
        .map(|i| format!("{}: {}", i.field, i.message))
        .collect::<Vec<_>>()
        .join("; ")
}
