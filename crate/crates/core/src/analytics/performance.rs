//! Standardized course performance.

use std::collections::{BTreeMap, BTreeSet};

use super::usage::{standardized_average, SkewTransform, UserScore};
use super::AnalyticsError;
use crate::store::PerformanceRecord;

/// Per-user performance: `ln(1 + points)` per activity, z-scored across
/// users, averaged across activities. Every user present must have a value
/// for every activity. Output is sorted by user id.
pub fn course_performance(records: &[PerformanceRecord]) -> Result<Vec<UserScore>, AnalyticsError> {
    course_performance_with(records, SkewTransform::Log1p)
}

pub fn course_performance_with(
    records: &[PerformanceRecord],
    transform: SkewTransform,
) -> Result<Vec<UserScore>, AnalyticsError> {
    let users: BTreeSet<&str> = records.iter().map(|r| r.user_id.as_str()).collect();
    let activities: BTreeSet<&str> = records.iter().map(|r| r.activity_id.as_str()).collect();
    let cells: BTreeMap<(&str, &str), f64> = records
        .iter()
        .map(|r| ((r.user_id.as_str(), r.activity_id.as_str()), r.points))
        .collect();
    let gaps: Vec<(String, String)> = users
        .iter()
        .flat_map(|u| activities.iter().map(move |a| (*u, *a)))
        .filter(|k| !cells.contains_key(k))
        .map(|(u, a)| (u.to_owned(), a.to_owned()))
        .collect();
    if !gaps.is_empty() {
        return Err(AnalyticsError::MissingCells { gaps });
    }
    if users.len() < 2 {
        return Err(AnalyticsError::TooFewObservations {
            needed: 2,
            got: users.len(),
        });
    }
    let columns: Vec<Vec<f64>> = activities
        .iter()
        .map(|a| users.iter().map(|u| transform.apply(cells[&(*u, *a)])).collect())
        .collect();
    let names: Vec<String> = activities.iter().map(|a| format!("activity {a}")).collect();
    let (_, means) = standardized_average(&columns, &names)?;
    Ok(users
        .iter()
        .zip(means)
        .map(|(u, score)| UserScore {
            user_id: u.to_string(),
            score,
        })
        .collect())
}
