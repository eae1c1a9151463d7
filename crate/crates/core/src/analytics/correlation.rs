//! Association between composite usage and course performance.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::performance::course_performance;
use super::stats::{mean, pearson, sample_sd, CorrelationResult};
use super::usage::{composite_usage, CompositeUsage, UsageRecord};
use super::AnalyticsError;
use crate::store::PerformanceRecord;

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Exclusions {
    /// Users removed by id.
    pub users: BTreeSet<String>,
    /// Also remove users whose raw query total exceeds mean + 3 SD.
    pub outlier_rule: bool,
}

impl Exclusions {
    pub fn users<I: IntoIterator<Item = S>, S: Into<String>>(ids: I) -> Self {
        Self {
            users: ids.into_iter().map(Into::into).collect(),
            outlier_rule: false,
        }
    }

    /// The concrete id set for these records.
    pub fn resolve(&self, usage: &[UsageRecord]) -> BTreeSet<String> {
        let mut out: BTreeSet<String> = usage
            .iter()
            .filter(|r| self.users.contains(&r.user_id))
            .map(|r| r.user_id.clone())
            .collect();
        if self.outlier_rule {
            out.extend(outliers(usage));
        }
        out
    }
}

/// Users whose total query count is above mean + 3·SD (sample SD).
pub fn outliers(usage: &[UsageRecord]) -> Vec<String> {
    if usage.len() < 2 {
        return Vec::new();
    }
    let totals: Vec<f64> = usage.iter().map(|r| r.total_queries as f64).collect();
    let cutoff = mean(&totals) + 3.0 * sample_sd(&totals);
    usage
        .iter()
        .filter(|r| r.total_queries as f64 > cutoff)
        .map(|r| r.user_id.clone())
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScatterPoint {
    pub user_id: String,
    pub usage: f64,
    pub performance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UsagePerformance {
    pub correlation: CorrelationResult,
    pub composite: CompositeUsage,
    pub scatter: Vec<ScatterPoint>,
    /// Users with performance data but no queries; not correlated.
    pub performance_only_users: Vec<String>,
}

/// Composite usage and course performance over the included users, their
/// Pearson correlation, and the points behind it.
pub fn usage_performance_analysis(
    usage: &[UsageRecord],
    performance: &[PerformanceRecord],
    exclusions: &Exclusions,
) -> Result<UsagePerformance, AnalyticsError> {
    let excluded = exclusions.resolve(usage);
    let composite = composite_usage(usage, &excluded)?;
    let included: BTreeSet<&str> = composite.scores.iter().map(|s| s.user_id.as_str()).collect();
    let known: BTreeSet<&str> = usage.iter().map(|r| r.user_id.as_str()).collect();

    let activities: BTreeSet<&str> = performance.iter().map(|r| r.activity_id.as_str()).collect();
    let have: BTreeSet<(&str, &str)> = performance
        .iter()
        .map(|r| (r.user_id.as_str(), r.activity_id.as_str()))
        .collect();
    let gaps: Vec<(String, String)> = included
        .iter()
        .flat_map(|u| activities.iter().map(move |a| (*u, *a)))
        .filter(|k| !have.contains(k))
        .map(|(u, a)| (u.to_owned(), a.to_owned()))
        .collect();
    if activities.is_empty() {
        return Err(AnalyticsError::InvalidParameter("no performance records".into()));
    }
    if !gaps.is_empty() {
        return Err(AnalyticsError::MissingCells { gaps });
    }
    let subset: Vec<PerformanceRecord> = performance
        .iter()
        .filter(|r| included.contains(r.user_id.as_str()))
        .cloned()
        .collect();
    let perf: BTreeMap<String, f64> = course_performance(&subset)?
        .into_iter()
        .map(|s| (s.user_id, s.score))
        .collect();

    let scatter: Vec<ScatterPoint> = composite
        .scores
        .iter()
        .map(|s| ScatterPoint {
            user_id: s.user_id.clone(),
            usage: s.score,
            performance: perf[&s.user_id],
        })
        .collect();
    let x: Vec<f64> = scatter.iter().map(|p| p.usage).collect();
    let y: Vec<f64> = scatter.iter().map(|p| p.performance).collect();
    let mut correlation = pearson(&x, &y)?;
    correlation.excluded_users = excluded.into_iter().collect();
    let performance_only_users = performance
        .iter()
        .map(|r| r.user_id.as_str())
        .filter(|u| !known.contains(u))
        .collect::<BTreeSet<_>>()
        .into_iter()
        .map(str::to_owned)
        .collect();
    Ok(UsagePerformance {
        correlation,
        composite,
        scatter,
        performance_only_users,
    })
}
