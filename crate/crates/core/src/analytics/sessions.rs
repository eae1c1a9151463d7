//! Splitting each user's queries into sessions at long inactivity gaps.

use std::collections::BTreeMap;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use crate::model::{utc_seconds, HelpRequest};

pub const DEFAULT_GAP_SECONDS: i64 = 3600;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Session {
    pub user_id: String,
    pub queries: Vec<String>,
    #[serde(with = "utc_seconds")]
    pub start: DateTime<Utc>,
    #[serde(with = "utc_seconds")]
    pub end: DateTime<Utc>,
    pub length_seconds: i64,
}

/// A new session begins at each user's first query and at every query whose
/// gap from the previous one is at least `gap_seconds`.
///
/// Sessions come back grouped by user id, each user's in time order.
pub fn sessionize(queries: &[HelpRequest], gap_seconds: i64) -> Vec<Session> {
    let mut by_user: BTreeMap<&str, Vec<&HelpRequest>> = BTreeMap::new();
    for q in queries {
        by_user.entry(q.user_id.as_str()).or_default().push(q);
    }
    let mut sessions = Vec::new();
    for (user, mut stream) in by_user {
        stream.sort_by_key(|q| q.timestamp);
        let mut current: Option<Session> = None;
        for q in stream {
            match current.as_mut() {
                Some(s) if (q.timestamp - s.end).num_seconds() < gap_seconds => {
                    s.queries.push(q.id.clone());
                    s.end = q.timestamp;
                }
                _ => {
                    sessions.extend(current.take());
                    current = Some(Session {
                        user_id: user.to_owned(),
                        queries: vec![q.id.clone()],
                        start: q.timestamp,
                        end: q.timestamp,
                        length_seconds: 0,
                    });
                }
            }
        }
        sessions.extend(current);
    }
    for s in &mut sessions {
        s.length_seconds = (s.end - s.start).num_seconds();
    }
    sessions
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::TimeZone;
    use proptest::prelude::*;

    fn at(user: &str, times: &[i64]) -> Vec<HelpRequest> {
        times
            .iter()
            .enumerate()
            .map(|(i, &t)| HelpRequest {
                id: format!("{user}-{i}"),
                user_id: user.into(),
                timestamp: Utc.timestamp_opt(1_700_000_000 + t, 0).unwrap(),
                language: "C".into(),
                code: String::new(),
                error: String::new(),
                issue: String::new(),
            })
            .collect()
    }

    #[test]
    fn gaps_below_threshold_stay_together() {
        let s = sessionize(&at("u", &[0, 1800, 3599]), DEFAULT_GAP_SECONDS);
        assert_eq!(s.len(), 1);
        assert_eq!(s[0].length_seconds, 3599);
        assert_eq!(s[0].queries.len(), 3);
    }

    #[test]
    fn exact_hour_splits() {
        let s = sessionize(&at("u", &[0, 3600]), DEFAULT_GAP_SECONDS);
        assert_eq!(s.len(), 2);
        assert!(s.iter().all(|s| s.length_seconds == 0));
    }

    #[test]
    fn nothing_in_nothing_out() {
        assert!(sessionize(&[], DEFAULT_GAP_SECONDS).is_empty());
    }

    #[test]
    fn gap_measured_from_previous_query_not_session_start() {
        let s = sessionize(&at("u", &[0, 3000, 6000, 9000]), DEFAULT_GAP_SECONDS);
        assert_eq!(s.len(), 1);
        assert_eq!(s[0].length_seconds, 9000);
    }

    #[test]
    fn users_kept_apart() {
        let mut qs = at("a", &[0, 10]);
        qs.extend(at("b", &[5]));
        let s = sessionize(&qs, DEFAULT_GAP_SECONDS);
        assert_eq!(s.len(), 2);
        assert_eq!(s[0].queries, ["a-0", "a-1"]);
        assert_eq!(s[1].queries, ["b-0"]);
    }

    proptest! {
        #[test]
        fn partition_and_gap_invariants(mut times in proptest::collection::vec(0i64..50_000, 0..60)) {
            let qs = at("u", &times);
            let sessions = sessionize(&qs, DEFAULT_GAP_SECONDS);
            let total: usize = sessions.iter().map(|s| s.queries.len()).sum();
            prop_assert_eq!(total, qs.len());
            let mut seen: Vec<&String> = sessions.iter().flat_map(|s| &s.queries).collect();
            seen.sort();
            seen.dedup();
            prop_assert_eq!(seen.len(), qs.len());
            let ts = |id: &String| qs.iter().find(|q| &q.id == id).unwrap().timestamp;
            for s in &sessions {
                prop_assert_eq!(s.length_seconds, (s.end - s.start).num_seconds());
                for w in s.queries.windows(2) {
                    prop_assert!((ts(&w[1]) - ts(&w[0])).num_seconds() < DEFAULT_GAP_SECONDS);
                }
            }
            for w in sessions.windows(2) {
                prop_assert!((w[1].start - w[0].end).num_seconds() >= DEFAULT_GAP_SECONDS);
            }
            times.sort();
            let splits = times.windows(2).filter(|w| w[1] - w[0] >= DEFAULT_GAP_SECONDS).count();
            prop_assert_eq!(sessions.len(), if times.is_empty() { 0 } else { splits + 1 });
        }
    }
}
