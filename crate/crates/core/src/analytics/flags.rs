//! Automatic low-effort flags: very short issues and issues copied from
//! exercise instructions.

use serde::{Deserialize, Serialize};

use super::matching::matched_len;
use crate::store::ExerciseText;

pub const SHORT_ISSUE_CHARS: usize = 10;
pub const COPIED_THRESHOLD: f64 = 80.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AutoFlags {
    pub short_issue: bool,
    pub copied_percentage: f64,
    pub copied: bool,
}

impl AutoFlags {
    pub fn low_effort(&self) -> bool {
        self.short_issue || self.copied
    }
}

pub fn flag_short_issue(issue: &str) -> bool {
    issue.chars().count() < SHORT_ISSUE_CHARS
}

/// Share of the issue's characters covered by matching blocks against the
/// best exercise, in percent. Empty issues score 0.
pub fn copied_percentage(issue: &str, exercises: &[ExerciseText]) -> f64 {
    let issue: Vec<char> = issue.chars().collect();
    if issue.is_empty() {
        return 0.0;
    }
    exercises
        .iter()
        .map(|e| {
            let text: Vec<char> = e.text.chars().collect();
            matched_len(&issue, &text)
        })
        .max()
        .map_or(0.0, |m| m as f64 * 100.0 / issue.len() as f64)
}

pub fn compute_flags(issue: &str, exercises: &[ExerciseText]) -> AutoFlags {
    let copied_percentage = copied_percentage(issue, exercises);
    AutoFlags {
        short_issue: flag_short_issue(issue),
        copied_percentage,
        copied: copied_percentage >= COPIED_THRESHOLD,
    }
}
