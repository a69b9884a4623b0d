use std::collections::BTreeSet;

use super::patterns::{CompiledRule, StructuredPatterns};
use super::validate::ValidationIssue;
use super::{Extraction, FeatureSet, HighlightSpan, StorageAmount, StorageUnit};

/// One regex hit in reading order.
struct Hit<'r> {
    rule: &'r CompiledRule,
    start: usize,
    end: usize,
    /// Capture group 1, when the rule has one.
    value: Option<(usize, usize)>,
    /// Capture group 2, when the rule has one.
    second: Option<(usize, usize)>,
}

fn hits<'r>(rules: &'r [CompiledRule], text: &str) -> Vec<Hit<'r>> {
    let mut out = Vec::new();
    for rule in rules {
        for caps in rule.regex.captures_iter(text) {
            let whole = caps.get(0).expect("group 0");
            if whole.start() == whole.end() {
                continue;
            }
            out.push(Hit {
                rule,
                start: whole.start(),
                end: whole.end(),
                value: caps.get(1).map(|m| (m.start(), m.end())),
                second: caps.get(2).map(|m| (m.start(), m.end())),
            });
        }
    }
    out.sort_by_key(|h| (h.start, h.end));
    out
}

fn parse_count(raw: &str) -> Option<u64> {
    raw.replace(',', "").parse().ok()
}

fn overlaps(a: (usize, usize), b: (usize, usize)) -> bool {
    a.0 < b.1 && b.0 < a.1
}

struct Builder<'t> {
    text: &'t str,
    spans: Vec<HighlightSpan>,
    warnings: Vec<ValidationIssue>,
}

impl<'t> Builder<'t> {
    fn span(&mut self, path: impl Into<String>, hit: &Hit<'_>) {
        self.spans
            .push(HighlightSpan::new(path, &hit.rule.id, self.text, hit.start, hit.end));
    }

    fn capture(&self, range: Option<(usize, usize)>) -> Option<&'t str> {
        range.map(|(s, e)| &self.text[s..e])
    }

    /// First parseable value in reading order wins; every hit becomes a span
    /// and disagreeing values raise a warning.
    fn first_number(&mut self, path: &str, found: &[Hit<'_>]) -> Option<u64> {
        let mut chosen = None;
        let mut values = BTreeSet::new();
        for hit in found {
            let Some(value) = self.capture(hit.value).and_then(parse_count) else {
                continue;
            };
            values.insert(value);
            chosen.get_or_insert(value);
            self.span(path, hit);
        }
        if values.len() > 1 {
            self.warnings.push(ValidationIssue::warning(
                path,
                format!("conflicting values {values:?}; keeping the first ({})", chosen.unwrap_or_default()),
            ));
        }
        chosen
    }

    /// Every hit of a tag-valued rule adds its tag and a span.
    fn tags(&mut self, prefix: &str, found: &[Hit<'_>]) -> BTreeSet<String> {
        let mut tags = BTreeSet::new();
        for hit in found {
            if let Some(tag) = hit.rule.tag.clone() {
                self.span(format!("{prefix}.{tag}"), hit);
                tags.insert(tag);
            }
        }
        tags
    }
}

pub(super) fn extract(patterns: &StructuredPatterns, text: &str) -> Extraction<FeatureSet> {
    let mut b = Builder {
        text,
        spans: Vec::new(),
        warnings: Vec::new(),
    };
    let mut f = FeatureSet::default();

    let victim_hits = hits(&patterns.victim_age, text);
    for hit in &victim_hits {
        if let Some(age) = b.capture(hit.value).and_then(|s| s.parse::<u32>().ok()) {
            f.victim_ages.insert(age);
            b.span(format!("victim_ages.{age}"), hit);
        }
    }

    // Ages attached to a victim noun are not perpetrator ages.
    let perp_hits: Vec<_> = hits(&patterns.perpetrator_age, text)
        .into_iter()
        .filter(|h| !victim_hits.iter().any(|v| overlaps((h.start, h.end), (v.start, v.end))))
        .collect();
    f.perpetrator_age = b
        .first_number("perpetrator_age", &perp_hits)
        .map(|v| u32::try_from(v).unwrap_or(u32::MAX));

    f.victim_count = b
        .first_number("victim_count", &hits(&patterns.victim_count, text))
        .map(|v| u32::try_from(v).unwrap_or(u32::MAX));

    let genders = hits(&patterns.victim_gender, text);
    let mut gender_tags = BTreeSet::new();
    for hit in &genders {
        if let Some(tag) = &hit.rule.tag {
            gender_tags.insert(tag.clone());
            b.span("victim_gender", hit);
        }
    }
    f.victim_gender = match gender_tags.len() {
        0 => None,
        1 => gender_tags.into_iter().next(),
        _ => Some("mixed".to_string()),
    };

    f.platforms = b.tags("platforms", &hits(&patterns.platforms, text));

    f.evidence_images = b.first_number("evidence_images", &hits(&patterns.evidence_images, text));
    f.evidence_videos = b.first_number("evidence_videos", &hits(&patterns.evidence_videos, text));
    f.evidence_messages = b.first_number("evidence_messages", &hits(&patterns.evidence_messages, text));

    for hit in hits(&patterns.evidence_storage, text) {
        let magnitude = b.capture(hit.value).and_then(|s| s.parse::<f64>().ok());
        let unit = b.capture(hit.second).and_then(|u| match u.to_ascii_uppercase().as_str() {
            "TB" => Some(StorageUnit::TB),
            "GB" => Some(StorageUnit::GB),
            _ => None,
        });
        let (Some(magnitude), Some(unit)) = (magnitude, unit) else {
            continue;
        };
        if !(magnitude > 0.0 && magnitude.is_finite()) {
            continue;
        }
        b.span("evidence_storage", &hit);
        match f.evidence_storage {
            None => f.evidence_storage = Some(StorageAmount { magnitude, unit }),
            Some(first) if first.magnitude != magnitude || first.unit != unit => {
                b.warnings.push(ValidationIssue::warning(
                    "evidence_storage",
                    format!("conflicting storage amounts; keeping {} {:?}", first.magnitude, first.unit),
                ));
            }
            Some(_) => {}
        }
    }

    f.prosecution = b.tags("prosecution", &hits(&patterns.prosecution, text));

    for hit in hits(&patterns.charges, text) {
        let Some(list) = b.capture(hit.value) else { continue };
        let mut added = false;
        for charge in split_charges(list) {
            if !f.charges.contains(&charge) {
                f.charges.push(charge);
            }
            added = true;
        }
        if added {
            b.span("charges", &hit);
        }
    }

    if let Some(hit) = hits(&patterns.jail_info, text).first() {
        let info = b.capture(hit.value).unwrap_or(&text[hit.start..hit.end]).trim();
        if !info.is_empty() {
            f.jail_info = Some(info.to_string());
            b.span("jail_info", hit);
        }
    }

    f.investigation_type = b.tags("investigation_type", &hits(&patterns.investigation_type, text));
    f.agencies = b.tags("agencies", &hits(&patterns.agencies, text));

    for hit in hits(&patterns.registered_sex_offender, text) {
        f.registered_sex_offender = true;
        b.span("registered_sex_offender", &hit);
    }

    Extraction {
        value: f,
        spans: b.spans,
        warnings: b.warnings,
    }
}

/// "sexual assault, luring and sexual exploitation" -> three charges.
fn split_charges(list: &str) -> Vec<String> {
    list.split(',')
        .flat_map(|part| part.split(" and "))
        .map(|c| c.trim().trim_start_matches("and ").trim().to_lowercase())
        .filter(|c| !c.is_empty())
        .collect()
}
