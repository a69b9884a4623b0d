use serde::{Deserialize, Serialize};

use super::{vocab, FeatureSet};

const MAX_AGE: u32 = 120;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IssueSeverity {
    Warning,
    Error,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationIssue {
    pub severity: IssueSeverity,
    pub field: String,
    pub message: String,
}

impl ValidationIssue {
    pub fn warning(field: impl Into<String>, message: impl Into<String>) -> Self {
        Self {
            severity: IssueSeverity::Warning,
            field: field.into(),
            message: message.into(),
        }
    }

    pub fn error(field: impl Into<String>, message: impl Into<String>) -> Self {
        Self {
            severity: IssueSeverity::Error,
            field: field.into(),
            message: message.into(),
        }
    }
}

/// Range, presence and vocabulary checks. Never fails; error-level issues
/// block storage of the record.
pub fn validate(features: &FeatureSet) -> Vec<ValidationIssue> {
    let mut issues = Vec::new();

    if let Some(age) = features.perpetrator_age {
        if age > MAX_AGE {
            issues.push(ValidationIssue::error(
                "perpetrator_age",
                format!("age {age} out of range [0, {MAX_AGE}]"),
            ));
        }
    }
    for &age in &features.victim_ages {
        if age > MAX_AGE {
            issues.push(ValidationIssue::error(
                "victim_ages",
                format!("age {age} out of range [0, {MAX_AGE}]"),
            ));
        }
    }
    if let Some(storage) = features.evidence_storage {
        if !(storage.magnitude > 0.0 && storage.magnitude.is_finite()) {
            issues.push(ValidationIssue::error(
                "evidence_storage",
                format!("storage magnitude must be positive, got {}", storage.magnitude),
            ));
        }
    }
    if features.relationship_to_victim.trim().is_empty() {
        issues.push(ValidationIssue::error(
            "relationship_to_victim",
            "missing relationship_to_victim (it must default to \"stranger\")",
        ));
    }
    if let Some(gender) = &features.victim_gender {
        if !vocab::VICTIM_GENDERS.contains(&gender.as_str()) {
            issues.push(ValidationIssue::error(
                "victim_gender",
                format!("`{gender}` is not a known victim gender"),
            ));
        }
    }

    let closed = [
        ("platforms", &features.platforms, vocab::PLATFORMS),
        ("investigation_type", &features.investigation_type, vocab::INVESTIGATION_TYPES),
        ("prosecution", &features.prosecution, vocab::PROSECUTION),
        ("severity_indicators", &features.severity_indicators, vocab::SEVERITY_INDICATORS),
        ("case_topics", &features.case_topics, vocab::CASE_TOPICS),
        ("severity_phrases", &features.severity_phrases, vocab::SEVERITY_PHRASES),
    ];
    for (field, values, vocabulary) in closed {
        for value in values {
            if !vocabulary.contains(&value.as_str()) {
                issues.push(ValidationIssue::error(
                    field,
                    format!("`{value}` is not in the {field} vocabulary"),
                ));
            }
        }
    }
    if features.agencies.iter().any(|a| a.trim().is_empty()) {
        issues.push(ValidationIssue::error("agencies", "empty agency name"));
    }
    if features.charges.iter().any(|c| c.trim().is_empty()) {
        issues.push(ValidationIssue::warning("charges", "empty charge entry"));
    }
    issues
}
