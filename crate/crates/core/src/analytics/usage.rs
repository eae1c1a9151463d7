//! Per-user usage metrics and the composite usage score.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::sessions::Session;
use super::stats::{cronbach_alpha, zscore};
use super::AnalyticsError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UsageRecord {
    pub user_id: String,
    pub total_queries: usize,
    pub total_sessions: usize,
    pub avg_session_length_seconds: f64,
}

/// Aggregate sessions into one record per user, sorted by user id.
pub fn usage_metrics(sessions: &[Session]) -> Vec<UsageRecord> {
    let mut acc: BTreeMap<&str, (usize, usize, i64)> = BTreeMap::new();
    for s in sessions {
        let e = acc.entry(s.user_id.as_str()).or_default();
        e.0 += s.queries.len();
        e.1 += 1;
        e.2 += s.length_seconds;
    }
    acc.into_iter()
        .map(|(user, (q, n, len))| UsageRecord {
            user_id: user.to_owned(),
            total_queries: q,
            total_sessions: n,
            avg_session_length_seconds: len as f64 / n as f64,
        })
        .collect()
}

/// Transform applied to raw metrics before standardization.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SkewTransform {
    #[default]
    Log1p,
    Identity,
}

impl SkewTransform {
    pub fn apply(self, x: f64) -> f64 {
        match self {
            Self::Log1p => x.ln_1p(),
            Self::Identity => x,
        }
    }
}

pub const USAGE_METRICS: [&str; 3] = [
    "total_queries",
    "total_sessions",
    "avg_session_length_seconds",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UserScore {
    pub user_id: String,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompositeUsage {
    pub scores: Vec<UserScore>,
    pub cronbach_alpha: f64,
    pub excluded_users: Vec<String>,
    pub transform: SkewTransform,
}

impl CompositeUsage {
    pub fn score_of(&self, user: &str) -> Option<f64> {
        self.scores.iter().find(|s| s.user_id == user).map(|s| s.score)
    }
}

/// Z-score each column and average across columns per row. Returns the
/// z-scored matrix (rows × columns) and the row means.
pub(crate) fn standardized_average(
    columns: &[Vec<f64>],
    names: &[String],
) -> Result<(Vec<Vec<f64>>, Vec<f64>), AnalyticsError> {
    let rows = columns.first().map_or(0, Vec::len);
    let mut z_cols = Vec::with_capacity(columns.len());
    for (col, name) in columns.iter().zip(names) {
        z_cols.push(zscore(col).ok_or_else(|| AnalyticsError::ZeroVariance { what: name.clone() })?);
    }
    let matrix: Vec<Vec<f64>> = (0..rows)
        .map(|r| z_cols.iter().map(|c| c[r]).collect())
        .collect();
    let means = matrix
        .iter()
        .map(|row| row.iter().sum::<f64>() / row.len() as f64)
        .collect();
    Ok((matrix, means))
}

/// Composite from already-transformed metric columns.
pub fn composite_from_transformed(
    users: &[String],
    columns: &[Vec<f64>; 3],
) -> Result<(Vec<UserScore>, f64), AnalyticsError> {
    if users.len() < 3 {
        return Err(AnalyticsError::TooFewObservations {
            needed: 3,
            got: users.len(),
        });
    }
    let names: Vec<String> = USAGE_METRICS.iter().map(|s| s.to_string()).collect();
    let (matrix, means) = standardized_average(columns, &names)?;
    let alpha = cronbach_alpha(&matrix)?;
    let scores = users
        .iter()
        .zip(means)
        .map(|(u, score)| UserScore {
            user_id: u.clone(),
            score,
        })
        .collect();
    Ok((scores, alpha))
}

pub fn composite_usage(
    records: &[UsageRecord],
    exclusions: &BTreeSet<String>,
) -> Result<CompositeUsage, AnalyticsError> {
    composite_usage_with(records, exclusions, SkewTransform::Log1p)
}

pub fn composite_usage_with(
    records: &[UsageRecord],
    exclusions: &BTreeSet<String>,
    transform: SkewTransform,
) -> Result<CompositeUsage, AnalyticsError> {
    let included: Vec<&UsageRecord> = records
        .iter()
        .filter(|r| !exclusions.contains(&r.user_id))
        .collect();
    let users: Vec<String> = included.iter().map(|r| r.user_id.clone()).collect();
    let col = |f: fn(&UsageRecord) -> f64| -> Vec<f64> {
        included.iter().map(|r| transform.apply(f(r))).collect()
    };
    let columns = [
        col(|r| r.total_queries as f64),
        col(|r| r.total_sessions as f64),
        col(|r| r.avg_session_length_seconds),
    ];
    let (scores, alpha) = composite_from_transformed(&users, &columns)?;
    let excluded_users = records
        .iter()
        .filter(|r| exclusions.contains(&r.user_id))
        .map(|r| r.user_id.clone())
        .collect();
    Ok(CompositeUsage {
        scores,
        cronbach_alpha: alpha,
        excluded_users,
        transform,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analytics::stats::mean;
    use chrono::{TimeZone, Utc};
    use proptest::prelude::*;

    fn rec(user: &str, q: usize, s: usize, len: f64) -> UsageRecord {
        UsageRecord {
            user_id: user.into(),
            total_queries: q,
            total_sessions: s,
            avg_session_length_seconds: len,
        }
    }

    fn session(user: &str, n: usize, len: i64) -> Session {
        let t = Utc.timestamp_opt(0, 0).unwrap();
        Session {
            user_id: user.into(),
            queries: (0..n).map(|i| format!("{user}{i}")).collect(),
            start: t,
            end: t + chrono::Duration::seconds(len),
            length_seconds: len,
        }
    }

    #[test]
    fn single_singleton_session() {
        assert_eq!(usage_metrics(&[session("u", 1, 0)]), [rec("u", 1, 1, 0.0)]);
    }

    #[test]
    fn two_sessions_average_length() {
        let m = usage_metrics(&[session("u", 2, 100), session("u", 3, 300)]);
        assert_eq!(m, [rec("u", 5, 2, 200.0)]);
    }

    // Reference values computed offline by hand-following the procedure.
    #[test]
    fn five_user_table() {
        let recs = [
            rec("a", 5, 2, 300.0),
            rec("b", 12, 4, 620.0),
            rec("c", 40, 9, 1500.0),
            rec("d", 3, 1, 0.0),
            rec("e", 25, 6, 900.0),
        ];
        let c = composite_usage(&recs, &BTreeSet::new()).unwrap();
        let expected = [
            -0.4296598244423842,
            0.1800697383378842,
            1.0303563349418348,
            -1.4137858780116048,
            0.6330196291742699,
        ];
        for (s, e) in c.scores.iter().zip(expected) {
            assert!((s.score - e).abs() < 1e-9, "{} vs {e}", s.score);
        }
        assert!((c.cronbach_alpha - 0.9562515215723648).abs() < 1e-9);
    }

    #[test]
    fn identical_users_zero_variance_names_metric() {
        let recs = vec![rec("a", 4, 2, 10.0), rec("b", 4, 2, 10.0), rec("c", 4, 2, 10.0)];
        let err = composite_usage(&recs, &BTreeSet::new()).unwrap_err();
        assert!(err.to_string().contains("total_queries"), "{err}");
    }

    #[test]
    fn exclusions_applied_and_reported() {
        let recs = [
            rec("a", 5, 2, 300.0),
            rec("b", 12, 4, 620.0),
            rec("c", 40, 9, 1500.0),
            rec("big", 614, 30, 2000.0),
        ];
        let ex: BTreeSet<String> = ["big".to_string()].into();
        let c = composite_usage(&recs, &ex).unwrap();
        assert_eq!(c.scores.len(), 3);
        assert_eq!(c.excluded_users, ["big"]);
        let ex2: BTreeSet<String> = ["big".to_string(), "a".to_string()].into();
        assert!(matches!(
            composite_usage(&recs, &ex2),
            Err(AnalyticsError::TooFewObservations { needed: 3, got: 2 })
        ));
    }

    proptest! {
        #[test]
        fn composite_mean_zero(rows in proptest::collection::vec((1usize..100, 1usize..20, 0f64..5000.0), 3..40)) {
            let recs: Vec<UsageRecord> = rows
                .iter()
                .enumerate()
                .map(|(i, &(q, s, l))| rec(&format!("u{i}"), q.max(s), s, l))
                .collect();
            if let Ok(c) = composite_usage(&recs, &BTreeSet::new()) {
                let scores: Vec<f64> = c.scores.iter().map(|s| s.score).collect();
                prop_assert!(mean(&scores).abs() < 1e-9);
                prop_assert!(c.cronbach_alpha <= 1.0 + 1e-12);
            }
        }

        #[test]
        fn affine_map_on_transformed_metric_is_invisible(
            rows in proptest::collection::vec((0f64..10.0, 0f64..10.0, 0f64..10.0), 3..30),
            a in 0.01f64..100.0,
            b in -100f64..100.0,
            which in 0usize..3,
        ) {
            let users: Vec<String> = (0..rows.len()).map(|i| format!("u{i}")).collect();
            let cols = [
                rows.iter().map(|r| r.0).collect::<Vec<_>>(),
                rows.iter().map(|r| r.1).collect::<Vec<_>>(),
                rows.iter().map(|r| r.2).collect::<Vec<_>>(),
            ];
            let mut mapped = cols.clone();
            for v in &mut mapped[which] {
                *v = a * *v + b;
            }
            if let (Ok((s1, a1)), Ok((s2, a2))) = (
                composite_from_transformed(&users, &cols),
                composite_from_transformed(&users, &mapped),
            ) {
                for (x, y) in s1.iter().zip(&s2) {
                    prop_assert!((x.score - y.score).abs() < 1e-6);
                }
                prop_assert!((a1 - a2).abs() < 1e-6);
            }
        }
    }
}
