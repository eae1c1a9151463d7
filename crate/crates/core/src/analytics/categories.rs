//! Category counts, inter-rater agreement, and per-user fractions.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::flags::AutoFlags;
use super::kappa::{binary_kappa, cohen_kappa};
use super::labels::{Category, QueryLabel, TopLevel};
use crate::model::HelpRequest;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CategoryRow {
    pub name: String,
    pub count: usize,
    pub percent: f64,
    pub kappa: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CategoryReport {
    /// Queries under consideration (normally the deduplicated log).
    pub queries: usize,
    pub labeled: usize,
    pub unlabeled: usize,
    pub off_topic: usize,
    /// Denominator of the top-level percentages: labeled minus off-topic.
    pub reported_total: usize,
    /// Raters in precedence order; the first rater's label wins.
    pub raters: Vec<String>,
    /// Queries labeled by both of the first two raters.
    pub double_coded: usize,
    pub disagreements: usize,
    pub kappa_full: Option<f64>,
    pub kappa_collapsed: Option<f64>,
    pub rows: Vec<CategoryRow>,
    /// Percentages relative to the debugging total.
    pub debugging_rows: Vec<CategoryRow>,
    #[serde(skip)]
    pub consensus: BTreeMap<String, Category>,
}

impl CategoryReport {
    pub fn row(&self, name: &str) -> Option<&CategoryRow> {
        self.rows.iter().chain(&self.debugging_rows).find(|r| r.name == name)
    }
}

fn subcategory_name(c: Category) -> &'static str {
    match c {
        Category::DebuggingErrorOnly => "Including error",
        Category::DebuggingOutcomeOnly => "Including outcome",
        Category::DebuggingErrorAndOutcome => "Including error & outcome",
        _ => c.as_str(),
    }
}

fn percent(count: usize, total: usize) -> f64 {
    if total == 0 {
        0.0
    } else {
        count as f64 * 100.0 / total as f64
    }
}

/// Build the category table over `queries`. Labels for other query ids are
/// ignored. Raters are ordered by id; when raters disagree the first
/// rater's label is the consensus.
pub fn category_report(queries: &[HelpRequest], labels: &[QueryLabel]) -> CategoryReport {
    let ids: BTreeSet<&str> = queries.iter().map(|q| q.id.as_str()).collect();
    let mut by_query: BTreeMap<&str, BTreeMap<&str, Category>> = BTreeMap::new();
    let mut raters: BTreeSet<&str> = BTreeSet::new();
    for l in labels.iter().filter(|l| ids.contains(l.query_id.as_str())) {
        raters.insert(&l.rater_id);
        by_query
            .entry(&l.query_id)
            .or_default()
            .insert(&l.rater_id, l.category);
    }
    let raters: Vec<String> = raters.into_iter().map(str::to_owned).collect();

    let consensus: BTreeMap<String, Category> = by_query
        .iter()
        .map(|(q, by_rater)| (q.to_string(), *by_rater.values().next().expect("non-empty")))
        .collect();

    let (mut a, mut b) = (Vec::new(), Vec::new());
    if let [r1, r2, ..] = raters.as_slice() {
        for by_rater in by_query.values() {
            if let (Some(x), Some(y)) = (by_rater.get(r1.as_str()), by_rater.get(r2.as_str())) {
                a.push(*x);
                b.push(*y);
            }
        }
    }
    let disagreements = a.iter().zip(&b).filter(|(x, y)| x != y).count();
    let kappa_full = cohen_kappa(&a, &b).ok();
    let top = |v: &[Category]| v.iter().map(|c| c.top_level()).collect::<Vec<TopLevel>>();
    let kappa_collapsed = cohen_kappa(&top(&a), &top(&b)).ok();

    let mut top_counts: BTreeMap<TopLevel, usize> = BTreeMap::new();
    let mut sub_counts: BTreeMap<Category, usize> = BTreeMap::new();
    for c in consensus.values() {
        *top_counts.entry(c.top_level()).or_default() += 1;
        *sub_counts.entry(*c).or_default() += 1;
    }
    let labeled = consensus.len();
    let off_topic = top_counts.get(&TopLevel::OffTopic).copied().unwrap_or(0);
    let reported_total = labeled - off_topic;
    let rows = TopLevel::REPORTED
        .iter()
        .map(|&t| {
            let count = top_counts.get(&t).copied().unwrap_or(0);
            CategoryRow {
                name: t.display_name().to_owned(),
                count,
                percent: percent(count, reported_total),
                kappa: binary_kappa(&a, &b, |c| c.top_level() == t).ok(),
            }
        })
        .collect();
    let debugging_total = top_counts.get(&TopLevel::Debugging).copied().unwrap_or(0);
    let debugging_rows = Category::DEBUGGING
        .iter()
        .map(|&s| {
            let count = sub_counts.get(&s).copied().unwrap_or(0);
            CategoryRow {
                name: subcategory_name(s).to_owned(),
                count,
                percent: percent(count, debugging_total),
                kappa: binary_kappa(&a, &b, |c| *c == s).ok(),
            }
        })
        .collect();

    CategoryReport {
        queries: queries.len(),
        labeled,
        unlabeled: queries.len() - labeled,
        off_topic,
        reported_total,
        raters,
        double_coded: a.len(),
        disagreements,
        kappa_full,
        kappa_collapsed,
        rows,
        debugging_rows,
        consensus,
    }
}

/// Per-user fractions of queries in each category and with each flag.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UserFractions {
    pub user_id: String,
    /// Queries counted for this user (off-topic ones removed).
    pub queries: usize,
    /// Of those, how many carry a consensus label.
    pub labeled: usize,
    pub debugging: Option<f64>,
    pub implementation: Option<f64>,
    pub understanding: Option<f64>,
    pub nothing: Option<f64>,
    pub short_issue: Option<f64>,
    pub copied: Option<f64>,
    pub low_effort: Option<f64>,
}

/// Category fractions use the user's labeled queries as denominator; flag
/// fractions use all of the user's queries. Consensus off-topic queries are
/// left out of both.
pub fn per_user_fractions(
    queries: &[HelpRequest],
    consensus: Option<&BTreeMap<String, Category>>,
    flags: Option<&BTreeMap<String, AutoFlags>>,
) -> Vec<UserFractions> {
    let mut by_user: BTreeMap<&str, Vec<&HelpRequest>> = BTreeMap::new();
    for q in queries {
        let off = consensus
            .and_then(|c| c.get(&q.id))
            .is_some_and(|c| *c == Category::OffTopic);
        if !off {
            by_user.entry(&q.user_id).or_default().push(q);
        }
    }
    by_user
        .into_iter()
        .map(|(user, qs)| {
            let cats: Vec<Category> = consensus
                .map(|c| qs.iter().filter_map(|q| c.get(&q.id).copied()).collect())
                .unwrap_or_default();
            let cat_frac = |t: TopLevel| {
                consensus.filter(|_| !cats.is_empty()).map(|_| {
                    cats.iter().filter(|c| c.top_level() == t).count() as f64 / cats.len() as f64
                })
            };
            let flag_frac = |f: fn(&AutoFlags) -> bool| {
                flags.map(|m| {
                    qs.iter().filter(|q| m.get(&q.id).is_some_and(f)).count() as f64 / qs.len() as f64
                })
            };
            UserFractions {
                user_id: user.to_owned(),
                queries: qs.len(),
                labeled: cats.len(),
                debugging: cat_frac(TopLevel::Debugging),
                implementation: cat_frac(TopLevel::Implementation),
                understanding: cat_frac(TopLevel::Understanding),
                nothing: cat_frac(TopLevel::Nothing),
                short_issue: flag_frac(|f| f.short_issue),
                copied: flag_frac(|f| f.copied),
                low_effort: flag_frac(AutoFlags::low_effort),
            }
        })
        .collect()
}

/// Render the table in the familiar Category / Count / Percent / Kappa
/// layout, percentages rounded to whole numbers.
pub fn render_category_table(r: &CategoryReport) -> String {
    let kappa = |k: Option<f64>| match k {
        Some(k) => {
            let s = format!("{k:.2}");
            s.strip_prefix("0").map(str::to_owned).unwrap_or(s)
        }
        None => "n/a".into(),
    };
    let section = |out: &mut String, title: &str, rows: &[CategoryRow]| {
        out.push_str(&format!("{title:<28} {:>6} {:>8} {:>6}\n", "Count", "Percent", "Kappa"));
        for row in rows {
            out.push_str(&format!(
                "{:<28} {:>6} {:>7}% {:>6}\n",
                row.name,
                row.count,
                format!("{:.0}", row.percent),
                kappa(row.kappa)
            ));
        }
    };
    let mut out = String::new();
    section(&mut out, "Query Category", &r.rows);
    out.push('\n');
    section(&mut out, "Debugging Sub-Categories", &r.debugging_rows);
    out.push_str(&format!(
        "\nlabeled {} of {} queries; off-topic {} (excluded from percentages)\n",
        r.labeled, r.queries, r.off_topic
    ));
    out.push_str(&format!(
        "double-coded {}, disagreements {}; kappa all categories {}, collapsed {}\n",
        r.double_coded,
        r.disagreements,
        kappa(r.kappa_full),
        kappa(r.kappa_collapsed)
    ));
    out
}
