//! Closed vocabularies for tag-valued features.

pub const SEVERITY_INDICATORS: &[&str] =
    &["infant", "very_young", "under_10", "sexual_assault", "production"];

pub const CASE_TOPICS: &[&str] = &[
    "production",
    "possession",
    "international",
    "multi_state",
    "hands_on",
    "online_digital",
    "family",
    "stranger",
    "pornography",
];

pub const SEVERITY_PHRASES: &[&str] =
    &["dangerous", "stated", "told", "continue", "attacked", "out_of_control"];

pub const PLATFORMS: &[&str] =
    &["facebook", "instagram", "snapchat", "discord", "whatsapp", "online", "chat"];

pub const INVESTIGATION_TYPES: &[&str] = &["proactive", "reactive", "online", "undercover"];

pub const PROSECUTION: &[&str] = &["booked", "arrested", "charged"];

pub const VICTIM_GENDERS: &[&str] = &["female", "male", "mixed"];

pub const DEFAULT_RELATIONSHIP: &str = "stranger";

pub const SEVERITY_INDICATORS_CATEGORY: &str = "severity_indicators";
pub const CASE_TOPICS_CATEGORY: &str = "case_topics";

pub fn for_semantic_category(category: &str) -> Option<&'static [&'static str]> {
    match category {
        SEVERITY_INDICATORS_CATEGORY => Some(SEVERITY_INDICATORS),
        CASE_TOPICS_CATEGORY => Some(CASE_TOPICS),
        _ => None,
    }
}
