//! Document ingestion: text extraction, cleaning, and source metadata.
//!
//! Plain text is the primary format. PDF is an adapter that produces the same
//! raw string; image-only or encrypted PDFs are refused rather than returning
//! an empty text.

use std::path::Path;
use std::sync::LazyLock;

use chrono::{DateTime, Utc};
use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const UNKNOWN_ORG: &str = "UNKNOWN";

const MIN_YEAR: i32 = 1990;
const MAX_YEAR: i32 = 2100;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SourceFormat {
    PlainText,
    Pdf,
}

impl SourceFormat {
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(ext) if ext.eq_ignore_ascii_case("pdf") => SourceFormat::Pdf,
            _ => SourceFormat::PlainText,
        }
    }
}

/// Maps a case-insensitive filename substring to a canonical organization.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OrgPattern {
    pub pattern: String,
    pub name: String,
}

impl OrgPattern {
    pub fn new(pattern: impl Into<String>, name: impl Into<String>) -> Self {
        Self {
            pattern: pattern.into(),
            name: name.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawDocument {
    pub source_path: String,
    pub source_org: String,
    pub report_year: Option<i32>,
    pub cleaned_text: String,
    /// Number of Unicode scalar values in `cleaned_text`.
    pub char_count: usize,
    pub ingested_at: DateTime<Utc>,
}

/// Reads the raw text of a document. Page texts of a PDF are joined with a
/// newline.
pub fn extract_text(source_path: &Path, format: SourceFormat) -> Result<String> {
    if !source_path.is_file() {
        return Err(Error::FileNotFound(source_path.to_path_buf()));
    }
    let text = match format {
        SourceFormat::PlainText => {
            let bytes = std::fs::read(source_path)?;
            String::from_utf8_lossy(&bytes).into_owned()
        }
        SourceFormat::Pdf => extract_pdf(source_path)?,
    };
    if text.is_empty() {
        return Err(Error::EmptyDocument(source_path.to_path_buf()));
    }
    Ok(text)
}

fn extract_pdf(path: &Path) -> Result<String> {
    let unreadable = |reason: String| Error::UnreadablePdf {
        path: path.to_path_buf(),
        reason,
    };
    let doc = lopdf::Document::load(path).map_err(|e| unreadable(e.to_string()))?;
    if doc.is_encrypted() {
        return Err(unreadable("document is encrypted".into()));
    }
    let pages = doc.get_pages();
    if pages.is_empty() {
        return Err(Error::EmptyDocument(path.to_path_buf()));
    }
    let mut page_texts = Vec::with_capacity(pages.len());
    for &number in pages.keys() {
        let text = doc
            .extract_text(&[number])
            .map_err(|e| unreadable(format!("page {number}: {e}")))?;
        page_texts.push(text);
    }
    let text = page_texts.join("\n");
    if text.trim().is_empty() {
        return Err(unreadable(
            "no text layer (image-only documents need OCR, which is not supported)".into(),
        ));
    }
    Ok(text)
}

static PAGE_NUMBER_LINE: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r"(?i)^(?:page\s+)?\d{1,4}(?:\s+of\s+\d{1,4})?$").expect("static regex")
});

/// Removes page-number lines and normalizes whitespace.
///
/// Lines are trimmed and inner runs of spaces/tabs collapse to one space; a
/// line holding only a page number (`12`, `Page 3`, `3 of 9`) is dropped;
/// at most one blank line survives between paragraphs. Idempotent, and never
/// makes the text longer.
pub fn clean_text(raw: &str) -> String {
    let normalized = raw.replace("\r\n", "\n").replace(['\r', '\u{c}'], "\n");
    let mut out = String::with_capacity(normalized.len());
    let mut blank_run = 0usize;
    let mut first = true;
    for line in normalized.split('\n') {
        let collapsed = collapse_spaces(line.trim());
        if PAGE_NUMBER_LINE.is_match(&collapsed) {
            continue;
        }
        if collapsed.is_empty() {
            blank_run += 1;
            if blank_run > 1 {
                continue;
            }
        } else {
            blank_run = 0;
        }
        if !first {
            out.push('\n');
        }
        first = false;
        out.push_str(&collapsed);
    }
    out
}

fn collapse_spaces(line: &str) -> String {
    let mut out = String::with_capacity(line.len());
    let mut pending_space = false;
    for ch in line.chars() {
        if ch == ' ' || ch == '\t' {
            pending_space = !out.is_empty();
        } else {
            if pending_space {
                out.push(' ');
                pending_space = false;
            }
            out.push(ch);
        }
    }
    out
}

/// Canonical organization for a filename; `UNKNOWN` when no pattern matches.
pub fn detect_source_org(filename: &str, known_orgs: &[OrgPattern]) -> String {
    let lower = filename.to_lowercase();
    known_orgs
        .iter()
        .find(|org| !org.pattern.is_empty() && lower.contains(&org.pattern.to_lowercase()))
        .map(|org| org.name.clone())
        .unwrap_or_else(|| UNKNOWN_ORG.to_string())
}

/// First standalone 4-digit token in `[1990, 2100]`.
pub fn infer_year(filename: &str) -> Option<i32> {
    filename
        .split(|c: char| !c.is_ascii_digit())
        .filter(|tok| tok.len() == 4)
        .filter_map(|tok| tok.parse::<i32>().ok())
        .find(|y| (MIN_YEAR..=MAX_YEAR).contains(y))
}

pub fn is_valid_year(year: i32) -> bool {
    (MIN_YEAR..=MAX_YEAR).contains(&year)
}

/// Extracts, cleans and tags one source document.
pub fn ingest_document(path: &Path, known_orgs: &[OrgPattern]) -> Result<RawDocument> {
    let raw = extract_text(path, SourceFormat::from_path(path))?;
    let cleaned_text = clean_text(&raw);
    if cleaned_text.trim().is_empty() {
        return Err(Error::EmptyDocument(path.to_path_buf()));
    }
    let filename = path
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_default();
    Ok(RawDocument {
        source_path: path.display().to_string(),
        source_org: detect_source_org(&filename, known_orgs),
        report_year: infer_year(&filename),
        char_count: cleaned_text.chars().count(),
        cleaned_text,
        ingested_at: Utc::now(),
    })
}
