//! The full analysis over a query log and optional side inputs.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::categories::{category_report, per_user_fractions, render_category_table, CategoryReport, UserFractions};
use super::correlation::{usage_performance_analysis, Exclusions, UsagePerformance};
use super::dedup::{deduplicate, DedupConfig};
use super::flags::{compute_flags, AutoFlags};
use super::labels::{Category, QueryLabel};
use super::sessions::{sessionize, DEFAULT_GAP_SECONDS};
use super::stats::{mean, sample_sd};
use super::usage::{composite_usage, usage_metrics, CompositeUsage, UsageRecord};
use super::AnalyticsError;
use crate::model::HelpRequest;
use crate::store::{ExerciseText, PerformanceRecord};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisOptions {
    pub dedup: DedupConfig,
    pub gap_seconds: i64,
    pub exclusions: Exclusions,
}

impl Default for AnalysisOptions {
    fn default() -> Self {
        Self {
            dedup: DedupConfig::default(),
            gap_seconds: DEFAULT_GAP_SECONDS,
            exclusions: Exclusions::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct AnalysisInputs<'a> {
    /// The raw log, duplicates included.
    pub queries: &'a [HelpRequest],
    pub exercises: Option<&'a [ExerciseText]>,
    pub labels: Option<&'a [QueryLabel]>,
    pub performance: Option<&'a [PerformanceRecord]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DedupSummary {
    pub k: f64,
    pub raw_queries: usize,
    pub duplicates: usize,
    pub kept: usize,
    pub users: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionSummary {
    pub gap_seconds: i64,
    pub total_sessions: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricSummary {
    pub metric: String,
    pub mean: f64,
    pub sd: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UsageSection {
    pub per_user: Vec<UsageRecord>,
    pub summary: Vec<MetricSummary>,
    pub composite: CompositeUsage,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlagSummary {
    /// Deduplicated queries checked (consensus off-topic ones excluded).
    pub queries: usize,
    pub short_issue: usize,
    pub copied: usize,
    pub low_effort: usize,
    pub short_issue_percent: f64,
    pub copied_percent: f64,
    pub low_effort_percent: f64,
    pub per_query: BTreeMap<String, AutoFlags>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub options: AnalysisOptions,
    pub dedup: DedupSummary,
    pub sessions: SessionSummary,
    pub usage: UsageSection,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub categories: Option<CategoryReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub flags: Option<FlagSummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub per_user: Option<Vec<UserFractions>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub correlation: Option<UsagePerformance>,
}

/// Usage metrics come from the raw log (every submission is use of the
/// tool); categories and flags from the deduplicated log.
pub fn analyze(inputs: AnalysisInputs<'_>, opts: &AnalysisOptions) -> Result<Report, AnalyticsError> {
    if opts.gap_seconds <= 0 {
        return Err(AnalyticsError::InvalidParameter(format!(
            "session gap must be positive, got {}",
            opts.gap_seconds
        )));
    }
    let dedup = deduplicate(inputs.queries, opts.dedup);
    let sessions = sessionize(inputs.queries, opts.gap_seconds);
    let per_user = usage_metrics(&sessions);
    let excluded = opts.exclusions.resolve(&per_user);
    let composite = composite_usage(&per_user, &excluded)?;
    let summary = metric_summary(&per_user);

    let categories = inputs.labels.map(|l| category_report(&dedup.kept, l));
    let consensus: Option<&BTreeMap<String, Category>> = categories.as_ref().map(|c| &c.consensus);

    let flags = inputs.exercises.map(|ex| {
        let considered: Vec<&HelpRequest> = dedup
            .kept
            .iter()
            .filter(|q| consensus.and_then(|c| c.get(&q.id)) != Some(&Category::OffTopic))
            .collect();
        let per_query: BTreeMap<String, AutoFlags> = considered
            .iter()
            .map(|q| (q.id.clone(), compute_flags(&q.issue, ex)))
            .collect();
        let n = per_query.len();
        let count = |f: fn(&AutoFlags) -> bool| per_query.values().filter(|x| f(x)).count();
        let (short, copied, low) = (
            count(|f| f.short_issue),
            count(|f| f.copied),
            count(AutoFlags::low_effort),
        );
        let pct = |c: usize| if n == 0 { 0.0 } else { c as f64 * 100.0 / n as f64 };
        FlagSummary {
            queries: n,
            short_issue: short,
            copied,
            low_effort: low,
            short_issue_percent: pct(short),
            copied_percent: pct(copied),
            low_effort_percent: pct(low),
            per_query,
        }
    });

    let fractions = (categories.is_some() || flags.is_some())
        .then(|| per_user_fractions(&dedup.kept, consensus, flags.as_ref().map(|f| &f.per_query)));

    let correlation = inputs
        .performance
        .map(|p| usage_performance_analysis(&per_user, p, &opts.exclusions))
        .transpose()?;

    Ok(Report {
        options: opts.clone(),
        dedup: DedupSummary {
            k: opts.dedup.k,
            raw_queries: inputs.queries.len(),
            duplicates: dedup.duplicate_count(),
            kept: dedup.kept.len(),
            users: per_user.len(),
        },
        sessions: SessionSummary {
            gap_seconds: opts.gap_seconds,
            total_sessions: sessions.len(),
        },
        usage: UsageSection {
            per_user,
            summary,
            composite,
        },
        categories,
        flags,
        per_user: fractions,
        correlation,
    })
}

fn metric_summary(records: &[UsageRecord]) -> Vec<MetricSummary> {
    let cols: [(&str, Vec<f64>); 3] = [
        ("total_queries", records.iter().map(|r| r.total_queries as f64).collect()),
        ("total_sessions", records.iter().map(|r| r.total_sessions as f64).collect()),
        (
            "avg_session_length_seconds",
            records.iter().map(|r| r.avg_session_length_seconds).collect(),
        ),
    ];
    cols.into_iter()
        .map(|(metric, xs)| MetricSummary {
            metric: metric.to_owned(),
            mean: mean(&xs),
            sd: sample_sd(&xs),
        })
        .collect()
}

pub fn render_text(r: &Report) -> String {
    let mut out = String::new();
    out.push_str(&format!(
        "Queries: {} raw, {} duplicates removed (k = {}), {} kept, {} users\n",
        r.dedup.raw_queries, r.dedup.duplicates, r.dedup.k, r.dedup.kept, r.dedup.users
    ));
    out.push_str(&format!(
        "Sessions: {} (gap >= {} s splits)\n\n",
        r.sessions.total_sessions, r.sessions.gap_seconds
    ));
    out.push_str("Usage            Mean        SD\n");
    for m in &r.usage.summary {
        let name = match m.metric.as_str() {
            "total_queries" => "Total Queries",
            "total_sessions" => "Total Sessions",
            _ => "Avg Session (s)",
        };
        out.push_str(&format!("{name:<16} {:>8.2} {:>9.2}\n", m.mean, m.sd));
    }
    let c = &r.usage.composite;
    out.push_str(&format!(
        "Composite usage over {} users, Cronbach's alpha = {:.2}",
        c.scores.len(),
        c.cronbach_alpha
    ));
    if !c.excluded_users.is_empty() {
        out.push_str(&format!(" (excluded: {})", c.excluded_users.join(", ")));
    }
    out.push_str("\n\n");
    if let Some(cat) = &r.categories {
        out.push_str(&render_category_table(cat));
        out.push('\n');
    }
    if let Some(f) = &r.flags {
        out.push_str(&format!(
            "Low-effort flags over {} queries: short issue {} ({:.1}%), copied {} ({:.1}%), either {} ({:.1}%)\n\n",
            f.queries,
            f.short_issue,
            f.short_issue_percent,
            f.copied,
            f.copied_percent,
            f.low_effort,
            f.low_effort_percent
        ));
    }
    if let Some(up) = &r.correlation {
        let k = &up.correlation;
        out.push_str(&format!(
            "Usage vs performance: r = {:.2}, p = {:.4}, n = {}",
            k.r, k.p_two_tailed, k.n
        ));
        if !k.excluded_users.is_empty() {
            out.push_str(&format!(" (excluded: {})", k.excluded_users.join(", ")));
        }
        out.push('\n');
    }
    out
}
