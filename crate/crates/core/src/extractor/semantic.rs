use std::collections::BTreeSet;

use super::patterns::KeywordTable;
use super::{Extraction, HighlightSpan};

/// Scans `text` for each feature's keywords in list order. The first keyword
/// that occurs adds the feature, with one span at its first occurrence.
pub(super) fn extract_keywords(table: &KeywordTable, category: &str, text: &str) -> Extraction<BTreeSet<String>> {
    let mut features = BTreeSet::new();
    let mut spans = Vec::new();
    for (feature, keywords) in table {
        for keyword in keywords {
            let Some(m) = keyword.regex.captures(text).and_then(|c| c.name("kw")) else {
                continue;
            };
            features.insert(feature.clone());
            spans.push(HighlightSpan::new(
                format!("{category}.{feature}"),
                &keyword.rule_id,
                text,
                m.start(),
                m.end(),
            ));
            break;
        }
    }
    Extraction {
        value: features,
        spans,
        warnings: Vec::new(),
    }
}
