//! Query-log analytics: deduplication, sessions, usage composite, low-effort
//! flags, category reporting, rater agreement and the usage/performance
//! correlation. Everything here is a pure function of its inputs.

pub mod categories;
pub mod correlation;
pub mod dedup;
pub mod distance;
pub mod flags;
pub mod kappa;
pub mod labels;
pub mod matching;
pub mod performance;
pub mod report;
pub mod sessions;
pub mod stats;
pub mod usage;

use thiserror::Error;

pub use categories::{category_report, per_user_fractions, render_category_table, CategoryReport, CategoryRow, UserFractions};
pub use correlation::{outliers, usage_performance_analysis, Exclusions, ScatterPoint, UsagePerformance};
pub use dedup::{deduplicate, DedupConfig, DedupOutcome, DuplicateOf, DEFAULT_DEDUP_K};
pub use distance::{levenshtein, normalized_field_distance, query_similarity};
pub use flags::{compute_flags, copied_percentage, flag_short_issue, AutoFlags, COPIED_THRESHOLD, SHORT_ISSUE_CHARS};
pub use kappa::{binary_kappa, cohen_kappa, kappa_from_confusion};
pub use labels::{Category, QueryLabel, TopLevel, UnknownCategory};
pub use performance::course_performance;
pub use report::{analyze, render_text, AnalysisInputs, AnalysisOptions, Report};
pub use sessions::{sessionize, Session, DEFAULT_GAP_SECONDS};
pub use stats::{correlation_p_value, cronbach_alpha, pearson, zscore, CorrelationResult};
pub use usage::{composite_usage, usage_metrics, CompositeUsage, SkewTransform, UsageRecord, UserScore};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AnalyticsError {
    #[error("{0}")]
    InvalidParameter(String),
    #[error("zero variance in {what}; cannot standardize")]
    ZeroVariance { what: String },
    #[error("need at least {needed} observations, got {got}")]
    TooFewObservations { needed: usize, got: usize },
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("correlation undefined: {0}")]
    UndefinedCorrelation(String),
    #[error("kappa undefined: chance agreement is 1 (both raters constant and equal)")]
    KappaUndefined,
    #[error("missing performance for {} (user, activity) cells: {}", gaps.len(), preview(gaps))]
    MissingCells { gaps: Vec<(String, String)> },
}

fn preview(gaps: &[(String, String)]) -> String {
    let mut s: Vec<String> = gaps.iter().take(10).map(|(u, a)| format!("({u}, {a})")).collect();
    if gaps.len() > 10 {
        s.push(format!("and {} more", gaps.len() - 10));
    }
    s.join(", ")
}
