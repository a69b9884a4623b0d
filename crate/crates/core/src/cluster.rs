//! Two-stage clustering.
//!
//! Stage one assigns each case to predefined external clusters by topic and
//! severity criteria (overlap allowed, `General` holds everything). Stage two
//! links cases inside a cluster whose weighted Jaccard similarity reaches the
//! threshold and reports the connected components as sub-groups.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::ClusterConfig;
use crate::error::{Error, Result};
use crate::extractor::{vocab, CaseRecord, FeatureSet};

/// Per-dimension weights of the similarity sum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimilarityWeights {
    pub platforms: f64,
    pub demographics: f64,
    pub topics: f64,
    pub investigation: f64,
    pub severity: f64,
    pub relationship: f64,
}

impl Default for SimilarityWeights {
    fn default() -> Self {
        Self {
            platforms: 0.25,
            demographics: 0.20,
            topics: 0.20,
            investigation: 0.15,
            severity: 0.15,
            relationship: 0.05,
        }
    }
}

impl SimilarityWeights {
    pub fn get(&self, dimension: Dimension) -> f64 {
        match dimension {
            Dimension::Platforms => self.platforms,
            Dimension::Demographics => self.demographics,
            Dimension::Topics => self.topics,
            Dimension::Investigation => self.investigation,
            Dimension::Severity => self.severity,
            Dimension::Relationship => self.relationship,
        }
    }

    pub fn total(&self) -> f64 {
        Dimension::ALL.iter().map(|&d| self.get(d)).sum()
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            platforms: self.platforms * factor,
            demographics: self.demographics * factor,
            topics: self.topics * factor,
            investigation: self.investigation * factor,
            severity: self.severity * factor,
            relationship: self.relationship * factor,
        }
    }

    pub(crate) fn check(&self) -> Result<()> {
        for d in Dimension::ALL {
            let w = self.get(d);
            if !(w >= 0.0 && w.is_finite()) {
                return Err(Error::Config(format!("similarity weight {} must be >= 0, got {w}", d.name())));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Dimension {
    Platforms,
    Demographics,
    Topics,
    Investigation,
    Severity,
    Relationship,
}

impl Dimension {
    pub const ALL: [Dimension; 6] = [
        Dimension::Platforms,
        Dimension::Demographics,
        Dimension::Topics,
        Dimension::Investigation,
        Dimension::Severity,
        Dimension::Relationship,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Dimension::Platforms => "platforms",
            Dimension::Demographics => "demographics",
            Dimension::Topics => "topics",
            Dimension::Investigation => "investigation",
            Dimension::Severity => "severity",
            Dimension::Relationship => "relationship",
        }
    }

    fn index(self) -> usize {
        self as usize
    }
}

/// The six comparison sets of one case.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct CaseProfile {
    sets: [BTreeSet<String>; 6],
}

impl CaseProfile {
    /// Builds the dimension sets.
    ///
    /// Demographics are discretized into tokens (victim age bucket, victim
    /// count bucket, perpetrator age decade, `rso:true`). Default values, the
    /// "stranger" relationship and a false offender flag, carry no evidence and
    /// leave their dimension empty.
    pub fn from_features(f: &FeatureSet) -> Self {
        let mut demographics = BTreeSet::new();
        for &age in &f.victim_ages {
            demographics.insert(format!("victim_age:{}", victim_age_bucket(age)));
        }
        if let Some(count) = f.victim_count {
            demographics.insert(format!("victim_count:{}", victim_count_bucket(count)));
        }
        if let Some(age) = f.perpetrator_age {
            demographics.insert(format!("perp_age:{}s", age / 10 * 10));
        }
        if f.registered_sex_offender {
            demographics.insert("rso:true".to_string());
        }

        let investigation = f
            .investigation_type
            .iter()
            .map(|t| format!("type:{t}"))
            .chain(f.agencies.iter().map(|a| format!("agency:{a}")))
            .collect();

        let severity = f
            .severity_indicators
            .iter()
            .map(|s| format!("indicator:{s}"))
            .chain(f.severity_phrases.iter().map(|s| format!("phrase:{s}")))
            .collect();

        let mut relationship = BTreeSet::new();
        if f.relationship_to_victim != vocab::DEFAULT_RELATIONSHIP && !f.relationship_to_victim.is_empty() {
            relationship.insert(f.relationship_to_victim.clone());
        }

        Self {
            sets: [
                f.platforms.clone(),
                demographics,
                f.case_topics.clone(),
                investigation,
                severity,
                relationship,
            ],
        }
    }

    pub fn get(&self, dimension: Dimension) -> &BTreeSet<String> {
        &self.sets[dimension.index()]
    }
}

fn victim_age_bucket(age: u32) -> &'static str {
    match age {
        0..=4 => "0-4",
        5..=9 => "5-9",
        10..=13 => "10-13",
        14..=17 => "14-17",
        _ => "18+",
    }
}

fn victim_count_bucket(count: u32) -> &'static str {
    match count {
        0 => "0",
        1 => "1",
        2..=4 => "2-4",
        _ => "5+",
    }
}

/// |x ∩ y| / |x ∪ y|, with two empty sets giving 0.
pub fn jaccard(x: &BTreeSet<String>, y: &BTreeSet<String>) -> f64 {
    let intersection = x.intersection(y).count();
    let union = x.len() + y.len() - intersection;
    if union == 0 {
        0.0
    } else {
        intersection as f64 / union as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DimensionScore {
    pub dimension: Dimension,
    /// `None` when both cases lack the dimension.
    pub jaccard: Option<f64>,
    pub weight: f64,
    pub contribution: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimilarityBreakdown {
    pub dimensions: Vec<DimensionScore>,
    pub total: f64,
}

pub fn weighted_similarity(a: &FeatureSet, b: &FeatureSet, w: &SimilarityWeights) -> SimilarityBreakdown {
    profile_similarity(&CaseProfile::from_features(a), &CaseProfile::from_features(b), w)
}

pub fn profile_similarity(a: &CaseProfile, b: &CaseProfile, w: &SimilarityWeights) -> SimilarityBreakdown {
    let mut total = 0.0;
    let dimensions = Dimension::ALL
        .iter()
        .map(|&d| {
            let (x, y) = (a.get(d), b.get(d));
            let weight = w.get(d);
            if x.is_empty() && y.is_empty() {
                DimensionScore {
                    dimension: d,
                    jaccard: None,
                    weight,
                    contribution: 0.0,
                }
            } else {
                let j = jaccard(x, y);
                let contribution = weight * j;
                total += contribution;
                DimensionScore {
                    dimension: d,
                    jaccard: Some(j),
                    weight,
                    contribution,
                }
            }
        })
        .collect();
    SimilarityBreakdown { dimensions, total }
}

fn similarity_total(a: &CaseProfile, b: &CaseProfile, w: &SimilarityWeights) -> f64 {
    let mut total = 0.0;
    for d in Dimension::ALL {
        let (x, y) = (a.get(d), b.get(d));
        if !(x.is_empty() && y.is_empty()) {
            total += w.get(d) * jaccard(x, y);
        }
    }
    total
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ExternalCluster {
    #[serde(rename = "Online-Digital")]
    OnlineDigital,
    Possession,
    Investigation,
    Severe,
    General,
}

impl ExternalCluster {
    pub const ALL: [ExternalCluster; 5] = [
        ExternalCluster::OnlineDigital,
        ExternalCluster::Possession,
        ExternalCluster::Investigation,
        ExternalCluster::Severe,
        ExternalCluster::General,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ExternalCluster::OnlineDigital => "Online-Digital",
            ExternalCluster::Possession => "Possession",
            ExternalCluster::Investigation => "Investigation",
            ExternalCluster::Severe => "Severe",
            ExternalCluster::General => "General",
        }
    }

    pub fn slug(self) -> String {
        self.name().to_ascii_lowercase()
    }

    /// Accepts the display name or slug, case-insensitively.
    pub fn parse(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|c| c.name().eq_ignore_ascii_case(name))
    }
}

/// External cluster memberships of one case; always includes `General`.
pub fn external_assign(features: &FeatureSet, severe_markers: &[String]) -> BTreeSet<ExternalCluster> {
    let mut out = BTreeSet::new();
    if features.case_topics.contains("online_digital") {
        out.insert(ExternalCluster::OnlineDigital);
    }
    if features.case_topics.contains("possession") {
        out.insert(ExternalCluster::Possession);
    }
    if !features.investigation_type.is_empty() {
        out.insert(ExternalCluster::Investigation);
    }
    if severe_markers.iter().any(|m| features.severity_indicators.contains(m)) {
        out.insert(ExternalCluster::Severe);
    }
    out.insert(ExternalCluster::General);
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimilarityLink {
    pub a: String,
    pub b: String,
    pub similarity: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubGroup {
    pub group_id: String,
    pub cluster_name: String,
    pub member_case_ids: Vec<String>,
    /// Mean similarity over all member pairs.
    pub mean_pairwise_similarity: f64,
    /// Values common to every member, per dimension (empty dimensions omitted).
    pub shared_characteristics: BTreeMap<String, Vec<String>>,
    pub description: String,
    /// The above-threshold pairs that connect the group.
    pub links: Vec<SimilarityLink>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Subgrouping {
    pub groups: Vec<SubGroup>,
    /// Members with no neighbour at or above the threshold.
    pub ungrouped: Vec<String>,
}

/// Single-linkage sub-groups of `members` at `threshold`.
pub fn form_subgroups(members: &[&CaseRecord], threshold: f64, w: &SimilarityWeights) -> Subgrouping {
    let profiles: Vec<CaseProfile> = members.iter().map(|r| CaseProfile::from_features(&r.features)).collect();
    let ids: Vec<&str> = members.iter().map(|r| r.case_id.as_str()).collect();
    subgroups_of("General", &ids, &profiles, threshold, w)
}

fn subgroups_of(
    cluster_name: &str,
    ids: &[&str],
    profiles: &[CaseProfile],
    threshold: f64,
    w: &SimilarityWeights,
) -> Subgrouping {
    let n = ids.len();
    // Rows are collected in order so the result does not depend on scheduling.
    let edges: Vec<Vec<(usize, f64)>> = (0..n)
        .into_par_iter()
        .map(|i| {
            ((i + 1)..n)
                .filter_map(|j| {
                    let s = similarity_total(&profiles[i], &profiles[j], w);
                    (s >= threshold).then_some((j, s))
                })
                .collect()
        })
        .collect();

    let mut adjacency: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (i, row) in edges.iter().enumerate() {
        for &(j, _) in row {
            adjacency[i].push(j);
            adjacency[j].push(i);
        }
    }

    let mut component = vec![usize::MAX; n];
    let mut components: Vec<Vec<usize>> = Vec::new();
    for start in 0..n {
        if component[start] != usize::MAX {
            continue;
        }
        let label = components.len();
        let mut queue = VecDeque::from([start]);
        component[start] = label;
        let mut nodes = Vec::new();
        while let Some(node) = queue.pop_front() {
            nodes.push(node);
            for &next in &adjacency[node] {
                if component[next] == usize::MAX {
                    component[next] = label;
                    queue.push_back(next);
                }
            }
        }
        nodes.sort_by_key(|&i| ids[i]);
        components.push(nodes);
    }

    let mut ungrouped: Vec<String> = Vec::new();
    let mut grouped: Vec<Vec<usize>> = Vec::new();
    for nodes in components {
        if nodes.len() < 2 {
            ungrouped.extend(nodes.iter().map(|&i| ids[i].to_string()));
        } else {
            grouped.push(nodes);
        }
    }
    grouped.sort_by(|a, b| b.len().cmp(&a.len()).then_with(|| ids[a[0]].cmp(ids[b[0]])));
    ungrouped.sort();

    let slug = cluster_name.to_ascii_lowercase();
    let groups = grouped
        .into_iter()
        .enumerate()
        .map(|(g, nodes)| {
            let mut sum = 0.0;
            let mut pairs = 0usize;
            let mut links = Vec::new();
            for (x, &i) in nodes.iter().enumerate() {
                for &j in &nodes[x + 1..] {
                    let s = similarity_total(&profiles[i], &profiles[j], w);
                    sum += s;
                    pairs += 1;
                    if s >= threshold {
                        links.push(SimilarityLink {
                            a: ids[i].to_string(),
                            b: ids[j].to_string(),
                            similarity: s,
                        });
                    }
                }
            }
            let mean = sum / pairs as f64;
            let shared = shared_characteristics(nodes.iter().map(|&i| &profiles[i]));
            SubGroup {
                group_id: format!("{slug}-{:02}", g + 1),
                cluster_name: cluster_name.to_string(),
                member_case_ids: nodes.iter().map(|&i| ids[i].to_string()).collect(),
                mean_pairwise_similarity: mean,
                description: describe(nodes.len(), mean, &shared),
                shared_characteristics: shared,
                links,
            }
        })
        .collect();
    Subgrouping { groups, ungrouped }
}

fn shared_characteristics<'a>(mut profiles: impl Iterator<Item = &'a CaseProfile>) -> BTreeMap<String, Vec<String>> {
    let Some(first) = profiles.next() else {
        return BTreeMap::new();
    };
    let mut common = first.sets.clone();
    for p in profiles {
        for (acc, set) in common.iter_mut().zip(&p.sets) {
            acc.retain(|v| set.contains(v));
        }
    }
    Dimension::ALL
        .iter()
        .filter(|d| !common[d.index()].is_empty())
        .map(|d| (d.name().to_string(), common[d.index()].iter().cloned().collect()))
        .collect()
}

fn describe(size: usize, mean: f64, shared: &BTreeMap<String, Vec<String>>) -> String {
    let mut text = format!("{size} cases, mean similarity {mean:.3}");
    if shared.is_empty() {
        text.push_str("; no characteristic shared by all members");
    } else {
        let parts: Vec<String> = shared
            .iter()
            .map(|(dim, values)| format!("{dim}: {}", values.join(", ")))
            .collect();
        text.push_str("; shared ");
        text.push_str(&parts.join("; "));
    }
    text
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterSummary {
    pub name: String,
    pub case_count: usize,
    pub coverage_percent: f64,
    /// Mean similarity over all member pairs; `None` below two members.
    pub avg_similarity: Option<f64>,
    pub member_case_ids: Vec<String>,
    pub subgroups: Vec<SubGroup>,
    pub ungrouped_case_ids: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterReport {
    pub total_cases: usize,
    pub threshold: f64,
    pub weights: SimilarityWeights,
    pub clusters: Vec<ClusterSummary>,
}

impl ClusterReport {
    pub fn cluster(&self, name: &str) -> Option<&ClusterSummary> {
        let wanted = ExternalCluster::parse(name)?;
        self.clusters.iter().find(|c| c.name == wanted.name())
    }

    pub fn all_subgroups(&self) -> impl Iterator<Item = &SubGroup> {
        self.clusters.iter().flat_map(|c| c.subgroups.iter())
    }
}

/// Runs both clustering stages over `records`.
pub fn cluster_all(records: &[CaseRecord], config: &ClusterConfig) -> ClusterReport {
    let profiles: Vec<CaseProfile> = records.par_iter().map(|r| CaseProfile::from_features(&r.features)).collect();
    let memberships: Vec<BTreeSet<ExternalCluster>> = records
        .iter()
        .map(|r| external_assign(&r.features, &config.severe_markers))
        .collect();
    let total = records.len();

    let clusters = ExternalCluster::ALL
        .iter()
        .map(|&cluster| {
            let mut idx: Vec<usize> = (0..total).filter(|&i| memberships[i].contains(&cluster)).collect();
            idx.sort_by(|&a, &b| records[a].case_id.cmp(&records[b].case_id));
            let ids: Vec<&str> = idx.iter().map(|&i| records[i].case_id.as_str()).collect();
            let member_profiles: Vec<CaseProfile> = idx.iter().map(|&i| profiles[i].clone()).collect();

            let row_sums: Vec<f64> = (0..idx.len())
                .into_par_iter()
                .map(|i| {
                    ((i + 1)..idx.len())
                        .map(|j| similarity_total(&member_profiles[i], &member_profiles[j], &config.weights))
                        .sum::<f64>()
                })
                .collect();
            let pairs = idx.len() * idx.len().saturating_sub(1) / 2;
            let avg_similarity = (pairs > 0).then(|| row_sums.iter().sum::<f64>() / pairs as f64);

            let sub = subgroups_of(cluster.name(), &ids, &member_profiles, config.threshold, &config.weights);
            ClusterSummary {
                name: cluster.name().to_string(),
                case_count: idx.len(),
                coverage_percent: if total == 0 { 0.0 } else { idx.len() as f64 * 100.0 / total as f64 },
                avg_similarity,
                member_case_ids: ids.iter().map(|s| s.to_string()).collect(),
                subgroups: sub.groups,
                ungrouped_case_ids: sub.ungrouped,
            }
        })
        .collect();

    ClusterReport {
        total_cases: total,
        threshold: config.threshold,
        weights: config.weights,
        clusters,
    }
}
