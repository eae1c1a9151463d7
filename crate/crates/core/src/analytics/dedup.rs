//! Removal of consecutive near-duplicate resubmissions.

use std::collections::{BTreeMap, HashSet};

use serde::{Deserialize, Serialize};

use super::distance::query_similarity;
use super::AnalyticsError;
use crate::model::HelpRequest;

pub const DEFAULT_DEDUP_K: f64 = 0.25;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DedupConfig {
    pub k: f64,
}

impl Default for DedupConfig {
    fn default() -> Self {
        Self { k: DEFAULT_DEDUP_K }
    }
}

impl DedupConfig {
    pub fn new(k: f64) -> Result<Self, AnalyticsError> {
        if !(0.0..=3.0).contains(&k) {
            return Err(AnalyticsError::InvalidParameter(format!(
                "dedup threshold k = {k} outside [0, 3]"
            )));
        }
        Ok(Self { k })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DuplicateOf {
    pub id: String,
    /// The kept query it duplicates.
    pub of: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DedupOutcome {
    /// Kept queries, in input order.
    pub kept: Vec<HelpRequest>,
    pub duplicates: Vec<DuplicateOf>,
}

impl DedupOutcome {
    pub fn duplicate_count(&self) -> usize {
        self.duplicates.len()
    }
}

/// Walk each user's queries in time order and drop every query whose
/// similarity to the previous *kept* query of the same user is below `k`.
pub fn deduplicate(queries: &[HelpRequest], cfg: DedupConfig) -> DedupOutcome {
    let mut by_user: BTreeMap<&str, Vec<&HelpRequest>> = BTreeMap::new();
    for q in queries {
        by_user.entry(q.user_id.as_str()).or_default().push(q);
    }
    let mut duplicates = Vec::new();
    let mut dropped: HashSet<&str> = HashSet::new();
    for stream in by_user.values_mut() {
        // Stable: equal timestamps keep input order.
        stream.sort_by_key(|q| q.timestamp);
        let mut anchor = stream[0];
        for &q in &stream[1..] {
            if query_similarity(anchor, q) < cfg.k {
                duplicates.push(DuplicateOf {
                    id: q.id.clone(),
                    of: anchor.id.clone(),
                });
                dropped.insert(q.id.as_str());
            } else {
                anchor = q;
            }
        }
    }
    let kept = queries
        .iter()
        .filter(|q| !dropped.contains(q.id.as_str()))
        .cloned()
        .collect();
    DedupOutcome { kept, duplicates }
}
