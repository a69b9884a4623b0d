//! Splits a cleaned multi-case report into case segments at temporal markers
//! such as "In January of 2012", "In March 2013" or "June 2014,".

use std::sync::LazyLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const MONTHS: [&str; 12] = [
    "January",
    "February",
    "March",
    "April",
    "May",
    "June",
    "July",
    "August",
    "September",
    "October",
    "November",
    "December",
];

/// Month name used for documents stored whole because they had no marker.
pub const UNKNOWN_MONTH: &str = "Unknown";

/// Ordered by precedence: at equal offsets the earlier pattern wins.
static TEMPORAL_PATTERNS: LazyLock<[Regex; 3]> = LazyLock::new(|| {
    [
        Regex::new(r"In\s+([A-Z][a-z]+)\s+of\s+([0-9]{4})").expect("static regex"),
        Regex::new(r"In\s+([A-Z][a-z]+)\s+([0-9]{4})").expect("static regex"),
        Regex::new(r"([A-Z][a-z]+)\s+([0-9]{4}),").expect("static regex"),
    ]
});

/// 1-based month number; 13 for anything that is not an English month name.
pub fn month_ordinal(month: &str) -> u32 {
    MONTHS
        .iter()
        .position(|m| m.eq_ignore_ascii_case(month))
        .map_or(13, |i| i as u32 + 1)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TemporalMarker {
    /// Byte offset of the match in the searched text.
    pub start_offset: usize,
    pub end_offset: usize,
    pub month: String,
    pub year: String,
    pub matched_text: String,
    /// Index into the pattern list of the rule that produced this marker.
    pub pattern_index: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CaseSegment {
    pub case_id: String,
    /// Segment text with surrounding whitespace stripped.
    pub text: String,
    pub month: String,
    /// Year captured by the marker, which may differ from the batch year.
    pub year: String,
    pub source_org: String,
    pub sequence_number: u32,
    /// Unstripped byte range of the segment in the source text.
    pub start_offset: usize,
    pub end_offset: usize,
}

/// All temporal markers in `text`, ascending by offset.
///
/// Candidates whose month token is not a month name are dropped. When two
/// patterns match at one offset the earlier-listed pattern wins, and a match
/// that starts inside an accepted marker (e.g. "January 2012," inside
/// "In January 2012,") is discarded.
pub fn find_markers(text: &str) -> Vec<TemporalMarker> {
    let mut candidates: Vec<TemporalMarker> = Vec::new();
    for (pattern_index, pattern) in TEMPORAL_PATTERNS.iter().enumerate() {
        for caps in pattern.captures_iter(text) {
            let whole = caps.get(0).expect("group 0");
            let month = &caps[1];
            if !MONTHS.contains(&month) {
                continue;
            }
            candidates.push(TemporalMarker {
                start_offset: whole.start(),
                end_offset: whole.end(),
                month: month.to_string(),
                year: caps[2].to_string(),
                matched_text: whole.as_str().to_string(),
                pattern_index,
            });
        }
    }
    candidates.sort_by_key(|m| (m.start_offset, m.pattern_index));

    let mut markers: Vec<TemporalMarker> = Vec::with_capacity(candidates.len());
    for candidate in candidates {
        if let Some(last) = markers.last() {
            if candidate.start_offset < last.end_offset {
                continue;
            }
        }
        markers.push(candidate);
    }
    markers
}

/// Splits `text` into one segment per marker.
///
/// Segment `i` spans from marker `i` to marker `i + 1` (the last runs to the
/// end of the text). Text before the first marker is not part of any
/// segment. Case ids use the batch `year`, not the marker's year.
pub fn batch_cases(text: &str, org_name: &str, year: &str) -> Result<Vec<CaseSegment>> {
    check_batch_args(org_name, year)?;
    let markers = find_markers(text);
    if markers.is_empty() {
        return Err(Error::NoMarkersFound);
    }
    let segments = markers
        .iter()
        .enumerate()
        .map(|(i, marker)| {
            let start = marker.start_offset;
            let end = markers.get(i + 1).map_or(text.len(), |next| next.start_offset);
            let sequence_number = i as u32 + 1;
            CaseSegment {
                case_id: case_id(org_name, year, &marker.month, sequence_number),
                text: text[start..end].trim().to_string(),
                month: marker.month.clone(),
                year: marker.year.clone(),
                source_org: org_name.to_string(),
                sequence_number,
                start_offset: start,
                end_offset: end,
            }
        })
        .collect();
    Ok(segments)
}

/// Treats a marker-less document as a single case.
pub fn whole_document_segment(text: &str, org_name: &str, year: &str) -> Result<CaseSegment> {
    check_batch_args(org_name, year)?;
    let stripped = text.trim();
    if stripped.is_empty() {
        return Err(Error::EmptyInput);
    }
    Ok(CaseSegment {
        case_id: case_id(org_name, year, UNKNOWN_MONTH, 1),
        text: stripped.to_string(),
        month: UNKNOWN_MONTH.to_string(),
        year: year.to_string(),
        source_org: org_name.to_string(),
        sequence_number: 1,
        start_offset: 0,
        end_offset: text.len(),
    })
}

/// Segments whose marker year differs from the batch year used in their id.
pub fn year_mismatches<'a>(segments: &'a [CaseSegment], batch_year: &str) -> Vec<&'a CaseSegment> {
    segments.iter().filter(|s| s.year != batch_year).collect()
}

pub fn case_id(org_name: &str, year: &str, month: &str, sequence_number: u32) -> String {
    format!(
        "{org_name}_{year}_{}_{sequence_number:03}",
        month.to_lowercase()
    )
}

fn check_batch_args(org_name: &str, year: &str) -> Result<()> {
    if org_name.is_empty() {
        return Err(Error::InvalidArgument("organization name must not be empty".into()));
    }
    if year.len() != 4 || !year.bytes().all(|b| b.is_ascii_digit()) {
        return Err(Error::InvalidArgument(format!("year must be 4 digits, got `{year}`")));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn listing_pattern_one() {
        let m = find_markers("In January of 2012 a suspect...");
        assert_eq!(m.len(), 1);
        assert_eq!((m[0].month.as_str(), m[0].year.as_str(), m[0].start_offset), ("January", "2012", 0));
        assert_eq!(m[0].matched_text, "In January of 2012");
    }

    #[test]
    fn empty_text_has_no_markers() {
        assert!(find_markers("").is_empty());
    }

    #[test]
    fn mixed_patterns_offsets() {
        // Offsets computed by hand: "March 2013," is 11 bytes, " agents..." 10
        // more, then one space, so "In June 2013" begins at byte 22.
        let m = find_markers("March 2013, agents... In June 2013 police...");
        let got: Vec<_> = m.iter().map(|m| (m.start_offset, m.month.as_str())).collect();
        assert_eq!(got, vec![(0, "March"), (22, "June")]);
        assert_eq!(m[0].pattern_index, 2);
        assert_eq!(m[1].pattern_index, 1);
    }

    #[test]
    fn non_month_tokens_are_rejected() {
        assert!(find_markers("Phoenix 2012, was busy. In Tucson 2013 too.").is_empty());
    }

    #[test]
    fn nested_match_is_suppressed() {
        let m = find_markers("In January 2012, officers arrested a man.");
        assert_eq!(m.len(), 1);
        assert_eq!(m[0].pattern_index, 1);
        assert_eq!(m[0].matched_text, "In January 2012");
    }

    #[test]
    fn batch_ids_follow_listing_format() {
        let text = "Annual report.\nIn January of 2012 a man was arrested.\nIn March 2012 another case.";
        let segs = batch_cases(text, "AZICAC", "2012").unwrap();
        let ids: Vec<_> = segs.iter().map(|s| s.case_id.as_str()).collect();
        assert_eq!(ids, ["AZICAC_2012_january_001", "AZICAC_2012_march_002"]);
        assert_eq!(segs[0].text, "In January of 2012 a man was arrested.");
        assert_eq!(segs[1].sequence_number, 2);
    }

    #[test]
    fn single_marker_spans_to_end() {
        let text = "xx In May 2014 one case\n\n";
        let segs = batch_cases(text, "ORG", "2014").unwrap();
        assert_eq!(segs.len(), 1);
        assert_eq!(segs[0].text, "In May 2014 one case");
        assert_eq!(segs[0].end_offset, text.len());
    }

    #[test]
    fn no_markers_is_an_error() {
        assert!(matches!(batch_cases("nothing here", "ORG", "2014"), Err(Error::NoMarkersFound)));
    }

    #[test]
    fn bad_arguments() {
        assert!(batch_cases("In May 2014 x", "", "2014").is_err());
        assert!(batch_cases("In May 2014 x", "ORG", "14").is_err());
    }

    #[test]
    fn divergent_years_are_reported() {
        let segs = batch_cases("In May 2013 a. In June 2014 b.", "ORG", "2014").unwrap();
        let odd = year_mismatches(&segs, "2014");
        assert_eq!(odd.len(), 1);
        assert_eq!(odd[0].case_id, "ORG_2014_may_001");
        assert_eq!(odd[0].year, "2013");
    }

    #[test]
    fn whole_document_fallback() {
        let seg = whole_document_segment("  one long case  ", "ORG", "2011").unwrap();
        assert_eq!(seg.case_id, "ORG_2011_unknown_001");
        assert_eq!(seg.text, "one long case");
    }

    #[test]
    fn month_ordinals() {
        assert_eq!(month_ordinal("January"), 1);
        assert_eq!(month_ordinal("december"), 12);
        assert_eq!(month_ordinal(UNKNOWN_MONTH), 13);
    }
}
