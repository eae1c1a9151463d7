//! Deterministic synthetic class corpus with a manifest of every planted
//! quantity, used as ground truth for the analytics.
//!
//! The `table1` profile reproduces the published aggregate shape at its
//! default size (49 students, 2,591 submissions of which 509 are
//! resubmissions, one 614-submission outlier, category counts
//! 833/1,038/161/47 plus 3 off-topic) and scales proportionally otherwise.
//! Timestamps are planned so that session counts and lengths are known
//! exactly; performance points are built so that composite usage and
//! course performance correlate at exactly the target r.

mod text;

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use chrono::{DateTime, Duration, TimeZone, Utc};
use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::analytics::{copied_percentage, query_similarity, Category, QueryLabel, COPIED_THRESHOLD};
use crate::model::HelpRequest;
use crate::store::{write_exercises, write_log, write_performance, ExerciseText, PerformanceRecord, QueryLogRecord};

use text::{draft, small_edit, IssueKind, EXERCISES};

pub const DEFAULT_SEED: u64 = 2023;
pub const DEFAULT_USERS: usize = 49;
pub const DEFAULT_QUERIES: usize = 2591;

const TABLE1_RAW: f64 = 2591.0;
const TABLE1_DUPLICATES: f64 = 509.0;
const TABLE1_OUTLIER: f64 = 614.0;
const TABLE1_CATEGORIES: [(Category, usize); 7] = [
    (Category::DebuggingErrorOnly, 484),
    (Category::DebuggingOutcomeOnly, 90),
    (Category::DebuggingErrorAndOutcome, 259),
    (Category::Implementation, 1038),
    (Category::Understanding, 161),
    (Category::Nothing, 47),
    (Category::OffTopic, 3),
];
const TARGET_R: f64 = 0.38;
const TARGET_KAPPA_FULL: f64 = 0.75;
const TARGET_KAPPA_COLLAPSED: f64 = 0.83;
/// Outlier planted only in classes at least this large.
const OUTLIER_MIN_USERS: usize = 10;
const MIN_QUERIES_PER_USER: usize = 4;
const GAP_SECONDS: i64 = 3600;
const ACTIVITIES: [(&str, f64, f64); 5] = [
    ("hw1", 3.2, 0.35),
    ("hw2", 3.4, 0.30),
    ("hw3", 3.0, 0.40),
    ("midterm", 4.0, 0.25),
    ("final", 4.2, 0.20),
];
pub const RATERS: [&str; 2] = ["r1", "r2"];

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Profile {
    #[default]
    Table1,
}

impl std::str::FromStr for Profile {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "table1" => Ok(Profile::Table1),
            other => Err(format!("unknown profile {other:?}; available: table1")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeedConfig {
    pub users: usize,
    pub queries: usize,
    pub profile: Profile,
    pub seed: u64,
}

impl Default for SeedConfig {
    fn default() -> Self {
        Self {
            users: DEFAULT_USERS,
            queries: DEFAULT_QUERIES,
            profile: Profile::Table1,
            seed: DEFAULT_SEED,
        }
    }
}

#[derive(Debug, Error)]
pub enum SeedError {
    #[error("need at least 3 users, got {0}")]
    TooFewUsers(usize),
    #[error("{queries} queries is too few for {users} users (need at least {min})")]
    TooFewQueries { users: usize, queries: usize, min: usize },
    #[error("could not plan a non-degenerate corpus after {0} attempts")]
    Degenerate(usize),
    #[error("cannot write {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UsageTruth {
    pub user_id: String,
    pub total_queries: usize,
    pub total_sessions: usize,
    pub avg_session_length_seconds: f64,
}

/// Every planted quantity, for checking an analysis against.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub config: SeedConfig,
    pub dedup_k: f64,
    pub gap_seconds: i64,
    pub raw_queries: usize,
    pub duplicates: usize,
    pub kept: usize,
    pub outlier_user: Option<String>,
    pub outlier_queries: Option<usize>,
    pub category_counts: BTreeMap<String, usize>,
    /// Top-level counts without off-topic, and their whole-number percents.
    pub reported_counts: BTreeMap<String, usize>,
    pub reported_percent_rounded: BTreeMap<String, u32>,
    pub off_topic: usize,
    pub short_issues: usize,
    pub copied_issues: usize,
    pub total_sessions: usize,
    pub usage: Vec<UsageTruth>,
    pub usage_mean: BTreeMap<String, f64>,
    /// Users the composite and correlation are planted over.
    pub correlation_users: usize,
    pub planted_alpha: f64,
    pub planted_r: f64,
    pub raters: Vec<String>,
    pub rater_disagreements: usize,
    pub planted_kappa_full: f64,
    pub planted_kappa_collapsed: f64,
    pub exercises: usize,
    pub activities: Vec<String>,
}

#[derive(Debug, Clone)]
pub struct Corpus {
    pub records: Vec<QueryLogRecord>,
    pub exercises: Vec<ExerciseText>,
    pub labels: Vec<QueryLabel>,
    pub performance: Vec<PerformanceRecord>,
    pub manifest: Manifest,
}

impl Corpus {
    pub fn requests(&self) -> Vec<HelpRequest> {
        self.records.iter().map(QueryLogRecord::request).collect()
    }
}

pub const LOG_FILE: &str = "log.jsonl";
pub const LABELS_FILE: &str = "labels.jsonl";
pub const PERFORMANCE_FILE: &str = "performance.csv";
pub const EXERCISES_DIR: &str = "exercises";
pub const MANIFEST_FILE: &str = "manifest.json";

/// Largest-remainder apportionment of `total` by `weights`.
fn apportion(total: usize, weights: &[f64]) -> Vec<usize> {
    let sum: f64 = weights.iter().sum();
    let quotas: Vec<f64> = weights.iter().map(|w| w / sum * total as f64).collect();
    let mut out: Vec<usize> = quotas.iter().map(|q| q.floor() as usize).collect();
    let mut order: Vec<usize> = (0..weights.len()).collect();
    order.sort_by(|&a, &b| {
        let ra = quotas[a] - quotas[a].floor();
        let rb = quotas[b] - quotas[b].floor();
        rb.total_cmp(&ra).then(a.cmp(&b))
    });
    let short = total - out.iter().sum::<usize>();
    for &i in order.iter().take(short) {
        out[i] += 1;
    }
    out
}

fn normal(rng: &mut ChaCha8Rng) -> f64 {
    StandardNormal.sample(rng)
}

struct UserPlan {
    id: String,
    raw: usize,
    duplicates: usize,
    /// Offsets in seconds from the user's first query.
    offsets: Vec<i64>,
    sessions: usize,
    avg_len: f64,
}

/// ln(1 + x), z-scored with the sample SD, averaged across the three
/// metrics; alpha over the standardized items. Kept separate from the
/// analytics code on purpose so the two can check each other.
fn planned_composite(plans: &[&UserPlan]) -> Option<(Vec<f64>, f64)> {
    let n = plans.len() as f64;
    let metrics: [Vec<f64>; 3] = [
        plans.iter().map(|p| (p.raw as f64).ln_1p()).collect(),
        plans.iter().map(|p| (p.sessions as f64).ln_1p()).collect(),
        plans.iter().map(|p| p.avg_len.ln_1p()).collect(),
    ];
    let mut z = Vec::new();
    for m in &metrics {
        let mean = m.iter().sum::<f64>() / n;
        let sd = (m.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
        if sd.is_nan() || sd <= 1e-9 {
            return None;
        }
        z.push(m.iter().map(|x| (x - mean) / sd).collect::<Vec<f64>>());
    }
    let composite: Vec<f64> = (0..plans.len()).map(|i| (z[0][i] + z[1][i] + z[2][i]) / 3.0).collect();
    let totals: Vec<f64> = (0..plans.len()).map(|i| z[0][i] + z[1][i] + z[2][i]).collect();
    let tm = totals.iter().sum::<f64>() / n;
    let tv = totals.iter().map(|x| (x - tm).powi(2)).sum::<f64>() / (n - 1.0);
    // Each standardized item has variance 1.
    let alpha = 1.5 * (1.0 - 3.0 / tv);
    Some((composite, alpha))
}

fn plan_user(rng: &mut ChaCha8Rng, id: String, latent: f64, raw: usize, duplicates: usize) -> UserPlan {
    let qps = (3.5f64.ln() + 0.3 * normal(rng)).exp();
    let sessions = ((raw as f64 / qps).round() as usize).clamp(1, raw);
    // Split points between consecutive queries that start a new session.
    let mut cuts: Vec<usize> = (1..raw).collect();
    cuts.shuffle(rng);
    let mut cuts: Vec<usize> = cuts.into_iter().take(sessions - 1).collect();
    cuts.sort_unstable();
    let mean_gap = (240f64.ln() + 0.6 * latent + 0.3 * normal(rng)).exp().clamp(30.0, 1800.0);
    let mut offsets = vec![0i64];
    let mut t = 0i64;
    let mut lengths = Vec::with_capacity(sessions);
    let mut session_start = 0i64;
    for i in 1..raw {
        if cuts.binary_search(&i).is_ok() {
            lengths.push(t - session_start);
            t += rng.random_range(2 * GAP_SECONDS..6 * 24 * GAP_SECONDS);
            session_start = t;
        } else {
            let lo = (0.3 * mean_gap).max(1.0) as i64;
            let hi = (1.7 * mean_gap).min((GAP_SECONDS - 1) as f64) as i64;
            t += rng.random_range(lo..=hi);
        }
        offsets.push(t);
    }
    lengths.push(t - session_start);
    let avg_len = lengths.iter().sum::<i64>() as f64 / sessions as f64;
    UserPlan {
        id,
        raw,
        duplicates,
        offsets,
        sessions,
        avg_len,
    }
}

/// Per-user raw query counts. Non-outliers get a floor plus a skewed share.
fn allocate_raw(rng: &mut ChaCha8Rng, latents: &[f64], total: usize) -> Vec<usize> {
    let floor = MIN_QUERIES_PER_USER;
    let weights: Vec<f64> = latents
        .iter()
        .map(|z| (0.7 * z + 0.25 * normal(rng)).exp())
        .collect();
    apportion(total - floor * latents.len(), &weights)
        .into_iter()
        .map(|x| x + floor)
        .collect()
}

fn kappa_of(m: &[[u64; 7]; 7], collapse: bool) -> f64 {
    let idx = |i: usize| {
        if collapse {
            Category::ALL[i].top_level() as usize
        } else {
            i
        }
    };
    let mut cm = [[0u64; 7]; 7];
    for (i, row) in m.iter().enumerate() {
        for (j, c) in row.iter().enumerate() {
            cm[idx(i)][idx(j)] += c;
        }
    }
    let n: u64 = cm.iter().flatten().sum();
    let po = (0..7).map(|i| cm[i][i]).sum::<u64>() as f64 / n as f64;
    let pe: f64 = (0..7)
        .map(|i| {
            let r: u64 = cm[i].iter().sum();
            let c: u64 = cm.iter().map(|row| row[i]).sum();
            (r as f64 / n as f64) * (c as f64 / n as f64)
        })
        .sum();
    (po - pe) / (1.0 - pe)
}

/// Second-rater labels that disagree with the first just enough to land on
/// the target agreement levels.
fn second_rater(rng: &mut ChaCha8Rng, first: &[Category]) -> Vec<Category> {
    let pos = |c: Category| Category::ALL.iter().position(|x| *x == c).expect("known");
    let mut second = first.to_vec();
    let mut m = [[0u64; 7]; 7];
    for &c in first {
        m[pos(c)][pos(c)] += 1;
    }
    let mut order: Vec<usize> = (0..first.len()).collect();
    order.shuffle(rng);
    let reported = [
        Category::DebuggingErrorOnly,
        Category::Implementation,
        Category::Understanding,
        Category::Nothing,
    ];
    let mut it = order.iter().copied().filter(|&i| first[i] != Category::OffTopic);
    while kappa_of(&m, true) > TARGET_KAPPA_COLLAPSED {
        let Some(i) = it.next() else { break };
        let mut choices: Vec<Category> = reported
            .iter()
            .copied()
            .filter(|c| c.top_level() != first[i].top_level())
            .collect();
        if choices.iter().any(|c| c.top_level() == crate::analytics::TopLevel::Debugging) {
            choices.extend(&Category::DEBUGGING[1..]);
        }
        let to = *choices.choose(rng).expect("three other categories");
        m[pos(first[i])][pos(first[i])] -= 1;
        m[pos(first[i])][pos(to)] += 1;
        second[i] = to;
    }
    let candidates: Vec<usize> = order
        .iter()
        .copied()
        .filter(|&i| Category::DEBUGGING.contains(&first[i]) && second[i] == first[i])
        .collect();
    let mut it = candidates.into_iter();
    while kappa_of(&m, false) > TARGET_KAPPA_FULL {
        let Some(i) = it.next() else { break };
        let to = *Category::DEBUGGING
            .iter()
            .filter(|c| **c != first[i])
            .collect::<Vec<_>>()
            .choose(rng)
            .expect("two other subcategories");
        m[pos(first[i])][pos(first[i])] -= 1;
        m[pos(first[i])][pos(*to)] += 1;
        second[i] = *to;
    }
    second
}

pub fn generate(cfg: &SeedConfig) -> Result<Corpus, SeedError> {
    if cfg.users < 3 {
        return Err(SeedError::TooFewUsers(cfg.users));
    }
    let with_outlier = cfg.users >= OUTLIER_MIN_USERS;
    let outlier_raw = with_outlier.then(|| (cfg.queries as f64 * TABLE1_OUTLIER / TABLE1_RAW).round() as usize);
    let regular = cfg.users - usize::from(with_outlier);
    let min = MIN_QUERIES_PER_USER * regular + outlier_raw.unwrap_or(0);
    if cfg.queries < min.max(MIN_QUERIES_PER_USER * cfg.users) {
        return Err(SeedError::TooFewQueries {
            users: cfg.users,
            queries: cfg.queries,
            min: min.max(MIN_QUERIES_PER_USER * cfg.users),
        });
    }
    let duplicates = (cfg.queries as f64 * TABLE1_DUPLICATES / TABLE1_RAW).round() as usize;
    let kept = cfg.queries - duplicates;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);

    let width = cfg.users.to_string().len().max(2);
    let ids: Vec<String> = (1..=cfg.users).map(|i| format!("s{i:0width$}")).collect();
    let outlier_idx = with_outlier.then(|| rng.random_range(0..cfg.users));

    // Plan counts and timing until the included users vary on every metric.
    const ATTEMPTS: usize = 200;
    let mut planned = None;
    for _ in 0..ATTEMPTS {
        let latents: Vec<f64> = (0..regular).map(|_| normal(&mut rng)).collect();
        let raws = allocate_raw(&mut rng, &latents, cfg.queries - outlier_raw.unwrap_or(0));
        let mut all_raw = Vec::with_capacity(cfg.users);
        let mut all_latent = Vec::with_capacity(cfg.users);
        let mut r_iter = raws.into_iter().zip(latents);
        for i in 0..cfg.users {
            if Some(i) == outlier_idx {
                all_raw.push(outlier_raw.expect("outlier planned"));
                all_latent.push(2.5);
            } else {
                let (r, z) = r_iter.next().expect("one per regular user");
                all_raw.push(r);
                all_latent.push(z);
            }
        }
        let caps: Vec<f64> = all_raw.iter().map(|r| (r - 1) as f64).collect();
        let dups = apportion(duplicates, &caps);
        let plans: Vec<UserPlan> = (0..cfg.users)
            .map(|i| plan_user(&mut rng, ids[i].clone(), all_latent[i], all_raw[i], dups[i]))
            .collect();
        let included: Vec<&UserPlan> = plans
            .iter()
            .enumerate()
            .filter(|(i, _)| Some(*i) != outlier_idx)
            .map(|(_, p)| p)
            .collect();
        if let Some(c) = planned_composite(&included) {
            planned = Some((plans, c));
            break;
        }
    }
    let (plans, (composite, planted_alpha)) = planned.ok_or(SeedError::Degenerate(ATTEMPTS))?;

    // Categories for kept queries, in user order.
    let cat_weights: Vec<f64> = TABLE1_CATEGORIES.iter().map(|(_, c)| *c as f64).collect();
    let cat_counts = apportion(kept, &cat_weights);
    let mut pool: Vec<Category> = TABLE1_CATEGORIES
        .iter()
        .zip(&cat_counts)
        .flat_map(|((c, _), n)| std::iter::repeat_n(*c, *n))
        .collect();
    pool.shuffle(&mut rng);
    let mut pool = pool.into_iter();

    let exercises: Vec<ExerciseText> = EXERCISES
        .iter()
        .enumerate()
        .map(|(i, t)| ExerciseText {
            exercise_id: format!("ex{:02}", i + 1),
            text: (*t).to_owned(),
        })
        .collect();

    let semester_start = Utc.with_ymd_and_hms(2023, 1, 16, 8, 0, 0).single().expect("valid date");
    let mut requests: Vec<(HelpRequest, Option<Category>)> = Vec::with_capacity(cfg.queries);
    let (mut short_issues, mut copied_issues) = (0usize, 0usize);
    for plan in &plans {
        let start = semester_start + Duration::seconds(rng.random_range(0..5 * 24 * 3600));
        let mut dup_slots: Vec<usize> = (1..plan.raw).collect();
        dup_slots.shuffle(&mut rng);
        dup_slots.truncate(plan.duplicates);
        dup_slots.sort_unstable();
        let mut anchor: Option<HelpRequest> = None;
        for (slot, offset) in plan.offsets.iter().enumerate() {
            let ts: DateTime<Utc> = start + Duration::seconds(*offset);
            let mut req = if dup_slots.binary_search(&slot).is_ok() {
                let a = anchor.as_ref().expect("first slot never a duplicate");
                let mut edited = a.clone();
                for edits in (0..=3).rev() {
                    edited.code = small_edit(&mut rng, &a.code, edits);
                    if query_similarity(a, &edited) < 0.25 {
                        break;
                    }
                }
                requests.push((edited.clone(), None));
                continue;
            } else {
                let category = pool.next().expect("one category per kept query");
                let kind = match category {
                    Category::Nothing if rng.random_bool(0.7) => IssueKind::Short,
                    Category::DebuggingErrorOnly if rng.random_bool(0.15) => IssueKind::Short,
                    Category::Implementation if rng.random_bool(0.08) => {
                        IssueKind::Copied(rng.random_range(0..exercises.len()))
                    }
                    _ => IssueKind::Normal,
                };
                let mut tries = 0;
                loop {
                    tries += 1;
                    let d = draft(&mut rng, category, kind);
                    let candidate = HelpRequest {
                        id: String::new(),
                        user_id: plan.id.clone(),
                        timestamp: ts,
                        language: d.language,
                        code: d.code,
                        error: d.error,
                        issue: d.issue,
                    };
                    let distinct = anchor
                        .as_ref()
                        .is_none_or(|a| query_similarity(a, &candidate) >= 0.25);
                    let copied = copied_percentage(&candidate.issue, &exercises) >= COPIED_THRESHOLD;
                    let consistent = match kind {
                        IssueKind::Normal => !copied,
                        IssueKind::Copied(_) => copied,
                        IssueKind::Short => true,
                    };
                    if distinct && consistent {
                        short_issues += usize::from(candidate.issue.chars().count() < 10);
                        copied_issues += usize::from(copied && category != Category::OffTopic);
                        requests.push((candidate.clone(), Some(category)));
                        break candidate;
                    }
                    assert!(tries < 10_000, "synthetic draft keeps colliding");
                }
            };
            req.timestamp = ts;
            anchor = Some(req);
        }
        // Duplicates were pushed with the anchor's timestamp; fix them up.
        let n = requests.len();
        for (req, offset) in requests[n - plan.raw..].iter_mut().zip(&plan.offsets) {
            req.0.timestamp = start + Duration::seconds(*offset);
        }
    }

    // Off-topic short issues are not counted.
    short_issues -= requests
        .iter()
        .filter(|(r, c)| *c == Some(Category::OffTopic) && r.issue.chars().count() < 10)
        .count();

    // Ids follow global time order.
    let mut order: Vec<usize> = (0..requests.len()).collect();
    order.sort_by(|&a, &b| {
        let (ra, rb) = (&requests[a].0, &requests[b].0);
        ra.timestamp.cmp(&rb.timestamp).then(ra.user_id.cmp(&rb.user_id)).then(a.cmp(&b))
    });
    let id_width = cfg.queries.to_string().len().max(5);
    let mut records = Vec::with_capacity(requests.len());
    let mut first_labels = Vec::new();
    for (seq, &i) in order.iter().enumerate() {
        let (req, cat) = &mut requests[i];
        req.id = format!("q{:0id_width$}", seq + 1);
        let mut rec = QueryLogRecord::request_only(req);
        rec.seq = seq as u64 + 1;
        records.push(rec);
        if let Some(c) = cat {
            first_labels.push((req.id.clone(), *c));
        }
    }

    let firsts: Vec<Category> = first_labels.iter().map(|(_, c)| *c).collect();
    let seconds = second_rater(&mut rng, &firsts);
    let mut m = [[0u64; 7]; 7];
    let pos = |c: Category| Category::ALL.iter().position(|x| *x == c).expect("known");
    for (a, b) in firsts.iter().zip(&seconds) {
        m[pos(*a)][pos(*b)] += 1;
    }
    let mut labels = Vec::with_capacity(2 * first_labels.len());
    for ((qid, a), b) in first_labels.iter().zip(&seconds) {
        for (rater, category) in RATERS.iter().zip([*a, *b]) {
            labels.push(QueryLabel {
                query_id: qid.clone(),
                rater_id: (*rater).to_owned(),
                category,
            });
        }
    }

    // Performance with exact correlation to the planned composite.
    let included_ids: Vec<&str> = plans
        .iter()
        .enumerate()
        .filter(|(i, _)| Some(*i) != outlier_idx)
        .map(|(_, p)| p.id.as_str())
        .collect();
    let n = composite.len();
    let unit = |v: Vec<f64>| {
        let m = v.iter().sum::<f64>() / v.len() as f64;
        let v: Vec<f64> = v.iter().map(|x| x - m).collect();
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        v.into_iter().map(|x| x / norm).collect::<Vec<f64>>()
    };
    let u = unit(composite.clone());
    let mut e: Vec<f64> = (0..n).map(|_| normal(&mut rng)).collect();
    let em = e.iter().sum::<f64>() / n as f64;
    e.iter_mut().for_each(|x| *x -= em);
    let proj: f64 = e.iter().zip(&u).map(|(a, b)| a * b).sum();
    e.iter_mut().zip(&u).for_each(|(x, ui)| *x -= proj * ui);
    let v = unit(e);
    let scale = (n as f64 - 1.0).sqrt();
    let perf_latent: Vec<f64> = u
        .iter()
        .zip(&v)
        .map(|(a, b)| (TARGET_R * a + (1.0 - TARGET_R * TARGET_R).sqrt() * b) * scale)
        .collect();
    let mut latent_by_user: BTreeMap<&str, f64> = included_ids.iter().copied().zip(perf_latent).collect();
    if let Some(i) = outlier_idx {
        latent_by_user.insert(&plans[i].id, normal(&mut rng).clamp(-3.0, 3.0));
    }
    let mut performance = Vec::new();
    for (user, p) in &latent_by_user {
        for (act, a, b) in ACTIVITIES {
            performance.push(PerformanceRecord {
                user_id: (*user).to_owned(),
                activity_id: act.to_owned(),
                points: (a + b * p).exp_m1(),
            });
        }
    }

    let usage: Vec<UsageTruth> = plans
        .iter()
        .map(|p| UsageTruth {
            user_id: p.id.clone(),
            total_queries: p.raw,
            total_sessions: p.sessions,
            avg_session_length_seconds: p.avg_len,
        })
        .collect();
    let nu = usage.len() as f64;
    let usage_mean = BTreeMap::from([
        (
            "total_queries".to_owned(),
            usage.iter().map(|u| u.total_queries as f64).sum::<f64>() / nu,
        ),
        (
            "total_sessions".to_owned(),
            usage.iter().map(|u| u.total_sessions as f64).sum::<f64>() / nu,
        ),
        (
            "avg_session_length_seconds".to_owned(),
            usage.iter().map(|u| u.avg_session_length_seconds).sum::<f64>() / nu,
        ),
    ]);

    let category_counts: BTreeMap<String, usize> = TABLE1_CATEGORIES
        .iter()
        .zip(&cat_counts)
        .map(|((c, _), n)| (c.as_str().to_owned(), *n))
        .collect();
    let mut reported_counts: BTreeMap<String, usize> = BTreeMap::new();
    for ((c, _), n) in TABLE1_CATEGORIES.iter().zip(&cat_counts) {
        if *c != Category::OffTopic {
            *reported_counts.entry(c.top_level().display_name().to_owned()).or_default() += n;
        }
    }
    let off_topic = cat_counts[6];
    let reported_total = kept - off_topic;
    let reported_percent_rounded = reported_counts
        .iter()
        .map(|(k, n)| (k.clone(), (*n as f64 * 100.0 / reported_total as f64).round() as u32))
        .collect();

    let manifest = Manifest {
        config: cfg.clone(),
        dedup_k: 0.25,
        gap_seconds: GAP_SECONDS,
        raw_queries: cfg.queries,
        duplicates,
        kept,
        outlier_user: outlier_idx.map(|i| plans[i].id.clone()),
        outlier_queries: outlier_raw,
        category_counts,
        reported_counts,
        reported_percent_rounded,
        off_topic,
        short_issues,
        copied_issues,
        total_sessions: plans.iter().map(|p| p.sessions).sum(),
        usage,
        usage_mean,
        correlation_users: n,
        planted_alpha,
        planted_r: TARGET_R,
        raters: RATERS.iter().map(|r| (*r).to_owned()).collect(),
        rater_disagreements: firsts.iter().zip(&seconds).filter(|(a, b)| a != b).count(),
        planted_kappa_full: kappa_of(&m, false),
        planted_kappa_collapsed: kappa_of(&m, true),
        exercises: exercises.len(),
        activities: ACTIVITIES.iter().map(|(a, _, _)| (*a).to_owned()).collect(),
    };
    Ok(Corpus {
        records,
        exercises,
        labels,
        performance,
        manifest,
    })
}

/// Write the corpus as `log.jsonl`, `exercises/*.txt`, `labels.jsonl`,
/// `performance.csv` and `manifest.json` under `dir`.
pub fn write_corpus(dir: &Path, corpus: &Corpus) -> Result<(), SeedError> {
    let io = |path: PathBuf| move |source| SeedError::Io { path, source };
    std::fs::create_dir_all(dir).map_err(io(dir.to_owned()))?;

    let log_path = dir.join(LOG_FILE);
    let mut buf = Vec::new();
    write_log(&mut buf, &corpus.records).map_err(io(log_path.clone()))?;
    std::fs::write(&log_path, buf).map_err(io(log_path))?;

    let ex_dir = dir.join(EXERCISES_DIR);
    write_exercises(&ex_dir, &corpus.exercises).map_err(io(ex_dir))?;

    let labels_path = dir.join(LABELS_FILE);
    let mut text = String::new();
    for l in &corpus.labels {
        text.push_str(&serde_json::to_string(l).expect("labels serialize"));
        text.push('\n');
    }
    std::fs::write(&labels_path, text).map_err(io(labels_path))?;

    let perf_path = dir.join(PERFORMANCE_FILE);
    let mut buf = Vec::new();
    write_performance(&mut buf, &corpus.performance).map_err(|e| SeedError::Io {
        path: perf_path.clone(),
        source: std::io::Error::other(e.to_string()),
    })?;
    std::fs::write(&perf_path, buf).map_err(io(perf_path))?;

    let manifest_path = dir.join(MANIFEST_FILE);
    let mut text = serde_json::to_string_pretty(&corpus.manifest).expect("manifest serializes");
    text.push('\n');
    std::fs::write(&manifest_path, text).map_err(io(manifest_path))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analytics::{
        analyze, deduplicate, sessionize, usage_metrics, AnalysisInputs, AnalysisOptions, DedupConfig,
        Exclusions, DEFAULT_GAP_SECONDS,
    };

    #[test]
    fn apportion_sums_and_follows_weights() {
        assert_eq!(apportion(10, &[1.0, 1.0, 2.0]), [3, 2, 5]);
        let a = apportion(2082, &TABLE1_CATEGORIES.map(|(_, c)| c as f64));
        assert_eq!(a, TABLE1_CATEGORIES.map(|(_, c)| c));
    }

    #[test]
    fn exercises_long_enough() {
        assert!(EXERCISES.iter().all(|e| e.chars().count() >= 200));
    }

    #[test]
    fn small_class_has_ground_truth() {
        let cfg = SeedConfig {
            users: 3,
            queries: 40,
            ..Default::default()
        };
        let c = generate(&cfg).unwrap();
        assert_eq!(c.records.len(), 40);
        assert!(c.manifest.outlier_user.is_none());
        let reqs = c.requests();
        let d = deduplicate(&reqs, DedupConfig::default());
        assert_eq!(d.duplicate_count(), c.manifest.duplicates);
        let usage = usage_metrics(&sessionize(&reqs, DEFAULT_GAP_SECONDS));
        for (got, want) in usage.iter().zip(&c.manifest.usage) {
            assert_eq!(got.user_id, want.user_id);
            assert_eq!(got.total_queries, want.total_queries);
            assert_eq!(got.total_sessions, want.total_sessions);
            assert!((got.avg_session_length_seconds - want.avg_session_length_seconds).abs() < 1e-9);
        }
        let report = analyze(
            AnalysisInputs {
                queries: &reqs,
                exercises: Some(&c.exercises),
                labels: Some(&c.labels),
                performance: Some(&c.performance),
            },
            &AnalysisOptions::default(),
        )
        .unwrap();
        let r = report.correlation.unwrap().correlation.r;
        assert!((r - TARGET_R).abs() < 1e-9, "{r}");
    }

    #[test]
    fn deterministic() {
        let cfg = SeedConfig {
            users: 12,
            queries: 400,
            ..Default::default()
        };
        let a = generate(&cfg).unwrap();
        let b = generate(&cfg).unwrap();
        assert_eq!(a.records, b.records);
        assert_eq!(a.labels, b.labels);
        assert_eq!(a.performance, b.performance);
        assert_eq!(a.manifest, b.manifest);
        let other = generate(&SeedConfig { seed: 1, ..cfg }).unwrap();
        assert_ne!(a.records, other.records);
    }

    #[test]
    fn outlier_exclusion_drops_one_user() {
        let cfg = SeedConfig {
            users: 12,
            queries: 400,
            ..Default::default()
        };
        let c = generate(&cfg).unwrap();
        let reqs = c.requests();
        let outlier = c.manifest.outlier_user.clone().unwrap();
        let inputs = AnalysisInputs {
            queries: &reqs,
            performance: Some(&c.performance),
            ..Default::default()
        };
        let all = analyze(inputs, &AnalysisOptions::default()).unwrap();
        let opts = AnalysisOptions {
            exclusions: Exclusions::users([outlier]),
            ..Default::default()
        };
        let ex = analyze(inputs, &opts).unwrap();
        assert_eq!(all.correlation.unwrap().correlation.n, 12);
        let k = ex.correlation.unwrap();
        assert_eq!(k.correlation.n, 11);
        assert!((k.correlation.r - TARGET_R).abs() < 1e-9);
        assert!((ex.usage.composite.cronbach_alpha - c.manifest.planted_alpha).abs() < 1e-9);
    }

    #[test]
    fn rejects_tiny_configs() {
        assert!(matches!(
            generate(&SeedConfig { users: 2, ..Default::default() }),
            Err(SeedError::TooFewUsers(2))
        ));
        assert!(matches!(
            generate(&SeedConfig { users: 5, queries: 10, ..Default::default() }),
            Err(SeedError::TooFewQueries { .. })
        ));
    }
}
