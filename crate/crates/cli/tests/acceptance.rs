//! Acceptance gate. Each criterion prints one PASS/FAIL line; the test
//! fails if any criterion fails.
//!
//! Run with `cargo test -p helpdesk-cli --test acceptance`.

use std::collections::BTreeMap;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::process::Command;
use std::sync::Arc;
use std::time::{Duration, Instant};

use chrono::{DateTime, TimeZone, Utc};
use helpdesk_core::analytics::{
    copied_percentage, cronbach_alpha, deduplicate, kappa_from_confusion, normalized_field_distance, pearson,
    sessionize, zscore, DedupConfig, COPIED_THRESHOLD,
};
use helpdesk_core::backend::{Backends, CompletionParams, FailureKind, ScriptedBackend};
use helpdesk_core::model::{ClassContext, HelpRequest};
use helpdesk_core::pipeline::{parse_sufficiency, respond, SufficiencyOutcome};
use helpdesk_core::synth::{generate, SeedConfig};
use helpdesk_server::{AppState, Role, ServerConfig, TokenFile};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use serde_json::{json, Value};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);
type Crafted<'a> = (&'a str, Vec<HelpRequest>, Vec<(&'a str, Vec<&'a str>)>);

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        #[allow(clippy::neg_cmp_op_on_partial_ord)]
        if !$cond {
            return Err(format!($($msg)+));
        }
    };
}

fn within(elapsed: Duration, limit: Duration) -> Result<(), String> {
    if elapsed < limit {
        Ok(())
    } else {
        Err(format!("took {elapsed:.2?}, limit {limit:?}"))
    }
}

fn main() {
    let criteria: Vec<Criterion> = vec![
        ("no-code guarantee", no_code_guarantee),
        ("dedup oracle", dedup_oracle),
        ("sessionization", sessionization),
        ("statistics oracles", statistics_oracles),
        ("end-to-end synthetic reproduction", end_to_end),
        ("sufficiency parsing", sufficiency_parsing),
        ("copied content", copied_content),
        ("API contract", api_contract),
    ];
    let total = criteria.len();
    let mut failed = Vec::new();
    for (name, f) in criteria {
        let start = Instant::now();
        let result = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
            Err(p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panicked".into()))
        });
        let elapsed = start.elapsed();
        match result {
            Ok(detail) => println!("PASS  {name:<36} {elapsed:>9.2?}  {detail}"),
            Err(why) => {
                println!("FAIL  {name:<36} {elapsed:>9.2?}  {why}");
                failed.push(name);
            }
        }
    }
    if !failed.is_empty() {
        eprintln!("failed criteria: {failed:?}");
        std::process::exit(1);
    }
    println!("all {total} criteria passed");
}

// ---------------------------------------------------------------------------
// No-code guarantee

/// Markdown with `blocks` fenced code blocks in assorted styles.
fn random_markdown(rng: &mut StdRng, blocks: usize) -> String {
    const PROSE: [&str; 5] = [
        "Look at how the loop variable changes on each pass.",
        "The error means a name is used before it is assigned.",
        "Consider what the function returns when the list is empty.",
        "Inline `code` spans are fine in explanations.",
        "Check the indentation of the `return` statement.",
    ];
    const OPENERS: [&str; 7] = ["```", "```python", "~~~", "````java", "   ```", "~~~~ c", "``` js"];
    let mut out = String::new();
    for b in 0..=blocks {
        for _ in 0..rng.random_range(0..3) {
            out.push_str(PROSE[rng.random_range(0..PROSE.len())]);
            out.push('\n');
        }
        if b == blocks {
            break;
        }
        let opener = OPENERS[rng.random_range(0..OPENERS.len())];
        let indent = opener.len() - opener.trim_start().len();
        let fence: String = opener.trim_start().chars().take_while(|c| *c == '`' || *c == '~').collect();
        out.push_str(opener);
        out.push('\n');
        for i in 0..rng.random_range(1..5) {
            out.push_str(&format!("x{i} = compute({i})\n"));
        }
        // The last block is sometimes left unclosed.
        if b + 1 < blocks || rng.random_bool(0.8) {
            out.push_str(&" ".repeat(indent));
            out.push_str(&fence);
            out.push('\n');
        }
    }
    out
}

/// Independent check: no line opens a fence (up to three spaces of indent,
/// then three or more backticks or tildes).
fn has_fence_line(text: &str) -> bool {
    text.lines().any(|l| {
        let stripped = l.trim_start_matches(' ');
        l.len() - stripped.len() <= 3 && (stripped.starts_with("```") || stripped.starts_with("~~~"))
    })
}

fn request(i: usize) -> HelpRequest {
    HelpRequest {
        id: format!("q{i}"),
        user_id: "u".into(),
        timestamp: Utc.timestamp_opt(1_675_000_000, 0).unwrap(),
        language: "Python".into(),
        code: "for i in range(3): print(i)".into(),
        error: String::new(),
        issue: "why does it print three numbers".into(),
    }
}

fn no_code_guarantee() -> Outcome {
    let start = Instant::now();
    let rt = tokio::runtime::Builder::new_current_thread().enable_all().build().unwrap();
    let mut rng = StdRng::seed_from_u64(0x5eed);
    let ctx = ClassContext::new("cs1", "Intro");
    let mut with_code = 0;
    let mut rewrite_failures = 0;
    let mut fallback = 0;
    for i in 0..1000 {
        let blocks = rng.random_range(0..=5);
        if blocks > 0 {
            with_code += 1;
        }
        let main = random_markdown(&mut rng, blocks);
        let chat = ScriptedBackend::new().with_default(main.clone());
        let rewrite = match rng.random_range(0..5) {
            0 => ScriptedBackend::new().with_default("Walk through the loop by hand and note each value."),
            1 => ScriptedBackend::new().with_default(main.clone()),
            2 => {
                let more = rng.random_range(1..=3);
                ScriptedBackend::new().with_default(random_markdown(&mut rng, more))
            }
            3 => {
                rewrite_failures += 1;
                let kind = [FailureKind::Timeout, FailureKind::RateLimited, FailureKind::Rejected][rng.random_range(0..3)];
                ScriptedBackend::new().failing_rule("", kind)
            }
            _ => ScriptedBackend::new().with_default(""),
        };
        let backends = Backends {
            chat: Arc::new(chat),
            rewrite: Arc::new(rewrite),
            rewrite_params: CompletionParams::default(),
        };
        let resp = rt
            .block_on(respond(&request(i), &ctx, &backends))
            .map_err(|e| format!("run {i}: pipeline error {e}"))?;
        ensure!(
            !helpdesk_core::pipeline::has_code_blocks(&resp.main_text) && !has_fence_line(&resp.main_text),
            "run {i}: fenced code survived:\n{}",
            resp.main_text
        );
        ensure!(resp.code_was_removed == (blocks > 0), "run {i}: code_was_removed flag wrong");
        fallback += usize::from(resp.fallback_strip_applied);
    }
    within(start.elapsed(), Duration::from_secs(10))?;
    Ok(format!(
        "1000 runs, {with_code} with code, {rewrite_failures} failing rewrites, {fallback} mechanical strips, 0 leaks"
    ))
}

// ---------------------------------------------------------------------------
// Dedup oracle

/// Full-matrix Wagner-Fischer, no trimming or row reuse.
fn oracle_levenshtein(a: &str, b: &str) -> usize {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    let mut d = vec![vec![0usize; b.len() + 1]; a.len() + 1];
    for (i, row) in d.iter_mut().enumerate() {
        row[0] = i;
    }
    d[0] = (0..=b.len()).collect();
    for i in 1..=a.len() {
        for j in 1..=b.len() {
            let sub = d[i - 1][j - 1] + usize::from(a[i - 1] != b[j - 1]);
            d[i][j] = sub.min(d[i - 1][j] + 1).min(d[i][j - 1] + 1);
        }
    }
    d[a.len()][b.len()]
}

fn random_string(rng: &mut StdRng, alphabet: &[char], max: usize) -> String {
    let len = rng.random_range(0..=max);
    (0..len).map(|_| alphabet[rng.random_range(0..alphabet.len())]).collect()
}

fn dedup_oracle() -> Outcome {
    let start = Instant::now();
    let mut rng = StdRng::seed_from_u64(509);
    let alphabet: Vec<char> = "abcde fgé\n(){}".chars().collect();
    for i in 0..200 {
        let a = random_string(&mut rng, &alphabet, 40);
        let b = if rng.random_bool(0.5) {
            // Related pair: a with a few edits.
            let mut chars: Vec<char> = a.chars().collect();
            for _ in 0..rng.random_range(0..4) {
                let c = alphabet[rng.random_range(0..alphabet.len())];
                match rng.random_range(0..3) {
                    0 if !chars.is_empty() => {
                        let k = rng.random_range(0..chars.len());
                        chars[k] = c;
                    }
                    1 if !chars.is_empty() => {
                        chars.remove(rng.random_range(0..chars.len()));
                    }
                    _ => chars.insert(rng.random_range(0..=chars.len()), c),
                }
            }
            chars.into_iter().collect()
        } else {
            random_string(&mut rng, &alphabet, 40)
        };
        let longest = a.chars().count().max(b.chars().count());
        let expected = if longest == 0 { 0.0 } else { oracle_levenshtein(&a, &b) as f64 / longest as f64 };
        let got = normalized_field_distance(&a, &b);
        ensure!(got == expected, "pair {i} ({a:?}, {b:?}): {got} != oracle {expected}");
    }
    let worked = normalized_field_distance("abcdefghij", "abcdefgxyz");
    ensure!(worked == 0.3, "worked example gave {worked}");

    let corpus = generate(&SeedConfig::default()).map_err(|e| e.to_string())?;
    let reqs = corpus.requests();
    let out = deduplicate(&reqs, DedupConfig::default());
    ensure!(reqs.len() == 2591, "corpus has {} queries", reqs.len());
    ensure!(
        out.duplicate_count() == 509 && out.kept.len() == 2082,
        "removed {}, kept {}",
        out.duplicate_count(),
        out.kept.len()
    );
    within(start.elapsed(), Duration::from_secs(30))?;
    Ok("200/200 pairs exact, 0.3 example, 2591 -> 509 removed / 2082 kept".into())
}

// ---------------------------------------------------------------------------
// Sessionization

fn at(user: &str, id: &str, t: i64) -> HelpRequest {
    HelpRequest {
        id: id.into(),
        user_id: user.into(),
        timestamp: Utc.timestamp_opt(1_675_000_000 + t, 0).unwrap(),
        language: String::new(),
        code: String::new(),
        error: String::new(),
        issue: String::new(),
    }
}

/// Session membership as (user, [ids]) in user then time order.
fn partition(reqs: &[HelpRequest]) -> Vec<(String, Vec<String>)> {
    sessionize(reqs, 3600)
        .into_iter()
        .map(|s| (s.user_id, s.queries))
        .collect()
}

/// Independent reference: sort each user's times, cut where the gap is at
/// least an hour.
fn reference_partition(reqs: &[HelpRequest]) -> Vec<(String, Vec<String>)> {
    let mut by_user: BTreeMap<&str, Vec<&HelpRequest>> = BTreeMap::new();
    for r in reqs {
        by_user.entry(&r.user_id).or_default().push(r);
    }
    let mut out = Vec::new();
    for (user, mut qs) in by_user {
        qs.sort_by_key(|q| q.timestamp);
        let mut cur: Vec<String> = Vec::new();
        let mut last: Option<DateTime<Utc>> = None;
        for q in qs {
            if let Some(prev) = last {
                if (q.timestamp - prev).num_seconds() >= 3600 {
                    out.push((user.to_owned(), std::mem::take(&mut cur)));
                }
            }
            cur.push(q.id.clone());
            last = Some(q.timestamp);
        }
        out.push((user.to_owned(), cur));
    }
    out
}

fn ids(v: &[&str]) -> Vec<String> {
    v.iter().map(|s| s.to_string()).collect()
}

fn sessionization() -> Outcome {
    let crafted: Vec<Crafted> = vec![
        ("gap 3599 stays", vec![at("a", "1", 0), at("a", "2", 3599)], vec![("a", vec!["1", "2"])]),
        ("gap 3600 splits", vec![at("a", "1", 0), at("a", "2", 3600)], vec![("a", vec!["1"]), ("a", vec!["2"])]),
        (
            "chained 3599 gaps",
            vec![at("a", "1", 0), at("a", "2", 3599), at("a", "3", 7198)],
            vec![("a", vec!["1", "2", "3"])],
        ),
        (
            "boundary after chain",
            vec![at("a", "1", 0), at("a", "2", 3599), at("a", "3", 7199)],
            vec![("a", vec!["1", "2"]), ("a", vec!["3"])],
        ),
        (
            "unsorted input",
            vec![at("a", "3", 9000), at("a", "1", 0), at("a", "2", 100)],
            vec![("a", vec!["1", "2"]), ("a", vec!["3"])],
        ),
        (
            "users independent",
            vec![at("a", "1", 0), at("b", "2", 10), at("a", "3", 20), at("b", "4", 5000)],
            vec![("a", vec!["1", "3"]), ("b", vec!["2"]), ("b", vec!["4"])],
        ),
        ("single query", vec![at("a", "1", 0)], vec![("a", vec!["1"])]),
        (
            "same instant",
            vec![at("a", "1", 50), at("a", "2", 50)],
            vec![("a", vec!["1", "2"])],
        ),
    ];
    for (name, reqs, expected) in &crafted {
        let expected: Vec<(String, Vec<String>)> = expected.iter().map(|(u, q)| (u.to_string(), ids(q))).collect();
        let got = partition(reqs);
        ensure!(got == expected, "{name}: got {got:?}, want {expected:?}");
    }
    let boundary = sessionize(&[at("a", "1", 0), at("a", "2", 3599)], 3600);
    ensure!(boundary[0].length_seconds == 3599, "length of 3599 s session is {}", boundary[0].length_seconds);

    let mut rng = StdRng::seed_from_u64(3600);
    for trial in 0..1000 {
        let n = rng.random_range(1..40);
        let users = rng.random_range(1..4);
        let mut t: Vec<i64> = vec![0; users];
        let mut reqs = Vec::new();
        for i in 0..n {
            let u = rng.random_range(0..users);
            t[u] += match rng.random_range(0..4) {
                0 => rng.random_range(0..600),
                1 => rng.random_range(3595..3606),
                2 => 3600,
                _ => rng.random_range(3600..200_000),
            };
            reqs.push(at(&format!("u{u}"), &format!("q{i}"), t[u]));
        }
        // Shuffle so the implementation must order by time itself.
        for i in (1..reqs.len()).rev() {
            reqs.swap(i, rng.random_range(0..=i));
        }
        let sessions = sessionize(&reqs, 3600);
        let mut seen: Vec<&str> = sessions.iter().flat_map(|s| s.queries.iter().map(String::as_str)).collect();
        seen.sort_unstable();
        let mut all: Vec<&str> = reqs.iter().map(|r| r.id.as_str()).collect();
        all.sort_unstable();
        ensure!(seen == all, "trial {trial}: not a partition");
        let by_id: BTreeMap<&str, &HelpRequest> = reqs.iter().map(|r| (r.id.as_str(), r)).collect();
        for s in &sessions {
            let times: Vec<i64> = s.queries.iter().map(|q| by_id[q.as_str()].timestamp.timestamp()).collect();
            ensure!(s.queries.iter().all(|q| by_id[q.as_str()].user_id == s.user_id), "trial {trial}: mixed users");
            ensure!(times.windows(2).all(|w| w[1] >= w[0] && w[1] - w[0] < 3600), "trial {trial}: bad inner gap");
            ensure!(s.length_seconds == (s.end - s.start).num_seconds(), "trial {trial}: bad length");
            ensure!(s.start.timestamp() == times[0] && s.end.timestamp() == *times.last().unwrap(), "trial {trial}: bad bounds");
        }
        for w in sessions.windows(2) {
            if w[0].user_id == w[1].user_id {
                ensure!((w[1].start - w[0].end).num_seconds() >= 3600, "trial {trial}: sessions should merge");
            }
        }
        ensure!(partition(&reqs) == reference_partition(&reqs), "trial {trial}: differs from reference");
    }
    Ok(format!("{} crafted suites incl. exact 3600 s boundary, 1000 random sets", crafted.len()))
}

// ---------------------------------------------------------------------------
// Statistics oracles

fn statistics_oracles() -> Outcome {
    let k = kappa_from_confusion(&[vec![20, 5], vec![10, 15]]).map_err(|e| e.to_string())?;
    ensure!(k == 0.4, "kappa {k}");

    // Rows are respondents; all three items agree exactly.
    let rows: Vec<Vec<f64>> = [1.0, 4.0, 2.0, 8.0, 5.0, 7.0].iter().map(|&v| vec![v; 3]).collect();
    let alpha = cronbach_alpha(&rows).map_err(|e| e.to_string())?;
    ensure!((alpha - 1.0).abs() < 1e-12, "identical-items alpha {alpha}");

    // Reference values from scipy.stats.pearsonr.
    let x = [1.2, 2.4, 3.1, 4.8, 5.0, 6.7, 7.3, 8.9, 9.4, 10.6];
    let y = [2.0, 1.9, 3.8, 3.5, 6.1, 5.2, 7.9, 6.8, 9.9, 8.7];
    let c = pearson(&x, &y).map_err(|e| e.to_string())?;
    ensure!((c.r - 0.9208534755504214).abs() < 1e-9, "r {}", c.r);
    ensure!((c.p_two_tailed - 0.00015590106974986337).abs() < 1e-6, "p {}", c.p_two_tailed);

    let mut rng = StdRng::seed_from_u64(1);
    for trial in 0..200 {
        let n = rng.random_range(2..60);
        let scale = 10f64.powi(rng.random_range(-3..6));
        let xs: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0) * scale + 5.0).collect();
        let z = zscore(&xs).ok_or_else(|| format!("trial {trial}: zscore undefined"))?;
        let m = z.iter().sum::<f64>() / n as f64;
        let sd = (z.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt();
        ensure!(m.abs() < 1e-9 && (sd - 1.0).abs() < 1e-9, "trial {trial}: mean {m}, sd {sd}");
    }
    Ok(format!("kappa 0.4 exact, alpha {alpha}, r {:.12}, p {:.6e}, 200 z-score vectors", c.r, c.p_two_tailed))
}

// ---------------------------------------------------------------------------
// End-to-end

fn helpdesk(args: &[&str]) -> Result<String, String> {
    let out = Command::new(env!("CARGO_BIN_EXE_helpdesk"))
        .args(args)
        .output()
        .map_err(|e| e.to_string())?;
    if !out.status.success() {
        return Err(format!("helpdesk {args:?}: {}", String::from_utf8_lossy(&out.stderr)));
    }
    Ok(String::from_utf8_lossy(&out.stdout).into_owned())
}

fn read_json(path: &Path) -> Result<Value, String> {
    let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    serde_json::from_str(&text).map_err(|e| e.to_string())
}

fn end_to_end() -> Outcome {
    let start = Instant::now();
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let d = dir.path();
    let p = |f: &str| d.join(f).to_str().unwrap().to_owned();
    helpdesk(&["seed", "--profile", "table1", "--out", &p("class")])?;
    let manifest = read_json(&d.join("class/manifest.json"))?;
    let outlier = manifest["outlier_user"].as_str().ok_or("no planted outlier")?.to_owned();
    ensure!(manifest["outlier_queries"] == 614, "outlier has {} queries", manifest["outlier_queries"]);
    let planted_alpha = manifest["planted_alpha"].as_f64().ok_or("no planted alpha")?;

    let common = |out: &str| {
        vec![
            "analyze".to_owned(),
            "--log".into(),
            p("class/log.jsonl"),
            "--exercises".into(),
            p("class/exercises"),
            "--labels".into(),
            p("class/labels.jsonl"),
            "--performance".into(),
            p("class/performance.csv"),
            "--out".into(),
            p(out),
        ]
    };
    let mut args = common("excluded");
    args.push("--exclude-outliers".into());
    helpdesk(&args.iter().map(String::as_str).collect::<Vec<_>>())?;
    helpdesk(&common("all").iter().map(String::as_str).collect::<Vec<_>>())?;
    let report = read_json(&d.join("excluded/report.json"))?;
    let all = read_json(&d.join("all/report.json"))?;

    let pct: Vec<i64> = report["categories"]["rows"]
        .as_array()
        .ok_or("no category table")?
        .iter()
        .map(|r| r["percent"].as_f64().unwrap_or(f64::NAN).round() as i64)
        .collect();
    ensure!(pct == [40, 50, 8, 2], "category percentages {pct:?}");

    let alpha = report["usage"]["composite"]["cronbach_alpha"].as_f64().ok_or("no alpha")?;
    ensure!((alpha - planted_alpha).abs() <= 0.05, "alpha {alpha} vs planted {planted_alpha}");
    ensure!((planted_alpha - 0.87).abs() <= 0.05, "planted alpha {planted_alpha} is off target 0.87");

    let corr = &report["correlation"]["correlation"];
    let r = corr["r"].as_f64().ok_or("no r")?;
    ensure!((r - 0.38).abs() <= 0.02, "r {r}");
    ensure!(corr["n"] == 48, "n {} with the outlier excluded", corr["n"]);
    ensure!(corr["excluded_users"] == json!([outlier]), "excluded {}", corr["excluded_users"]);
    ensure!(all["correlation"]["correlation"]["n"] == 49, "n {} without exclusions", all["correlation"]["correlation"]["n"]);

    within(start.elapsed(), Duration::from_secs(60))?;
    Ok(format!(
        "40/50/8/2, alpha {alpha:.3} (planted {planted_alpha:.3}), r {r:.3}, p {:.4}, n 49 -> 48 ({outlier})",
        corr["p_two_tailed"].as_f64().unwrap_or(f64::NAN)
    ))
}

// ---------------------------------------------------------------------------
// Sufficiency parsing

fn sufficiency_parsing() -> Outcome {
    // (completion, sufficient?)
    let cases: [(&str, bool); 20] = [
        ("You want to reverse a list. OK.", true),
        ("OK.", true),
        ("The question is about recursion depth.\nOK.", true),
        ("Summary: string slicing. OK.  \n\n", true),
        ("Summary of the ask. \"OK.\"", true),
        ("Asking why the loop never ends. 'OK.'\n", true),
        ("Asking about dictionaries.\u{201C}OK.\u{201D}", true),
        ("Fine.\tOK.\t", true),
        ("Reasoning first. Then OK.\r\n", true),
        ("This is clear. Summary: sorting.OK.", true),
        ("OK. But what error do you see?", false),
        ("OK. Please share the code.", false),
        ("I need to know which line fails. OK. Also which input?", false),
        ("Could you paste the full error message?", false),
        ("", false),
        ("   \n", false),
        ("It looks fine, ok.", false),
        ("Everything is OK", false),
        ("OK!", false),
        ("Please describe the expected output. OK?", false),
    ];
    for (i, (text, sufficient)) in cases.iter().enumerate() {
        let got = parse_sufficiency(text);
        ensure!(
            matches!(got, SufficiencyOutcome::Sufficient) == *sufficient,
            "case {i} {text:?}: got {got:?}"
        );
        if let SufficiencyOutcome::NeedsClarification { clarification_text } = &got {
            ensure!(!clarification_text.trim().is_empty(), "case {i}: empty clarification");
        }
    }
    Ok("20/20 cases, 0 deviations".into())
}

// ---------------------------------------------------------------------------
// Copied content

fn copied_content() -> Outcome {
    let corpus = generate(&SeedConfig::default()).map_err(|e| e.to_string())?;
    let mut min_copy = f64::INFINITY;
    let mut long = 0;
    for e in &corpus.exercises {
        let own = copied_percentage(&e.text, std::slice::from_ref(e));
        ensure!(own == 100.0, "{}: copied_percentage(e, [e]) = {own}", e.exercise_id);
        if e.text.chars().count() >= 200 {
            long += 1;
            let issue = format!("How do I {}", e.text);
            let pct = copied_percentage(&issue, &corpus.exercises);
            ensure!(pct > COPIED_THRESHOLD, "{}: 'How do I ' + text scores {pct}", e.exercise_id);
            min_copy = min_copy.min(pct);
        }
    }
    ensure!(long > 0, "no exercise of 200+ characters to check");
    Ok(format!(
        "{} exercises at 100%, {long} long ones all > {COPIED_THRESHOLD} (min {min_copy:.1}%)",
        corpus.exercises.len()
    ))
}

// ---------------------------------------------------------------------------
// API contract over TCP

const MOCK_RULES: &str = r#"{
  "rules": [
    {"contains": "BACKEND-DOWN", "fail": "timeout"},
    {"contains": "end by writing \"OK.\"", "response": "You are asking about loops. OK."},
    {"contains": "rewrite the following to remove any code blocks", "response": "Trace the loop by hand."}
  ],
  "default": "Here is an idea:\n```python\nprint('answer')\n```\nTry it."
}"#;

struct Service {
    base: String,
    stop: Option<tokio::sync::oneshot::Sender<()>>,
    handle: tokio::task::JoinHandle<std::io::Result<()>>,
}

impl Service {
    async fn start(cfg: &ServerConfig) -> Result<Self, String> {
        let state = AppState::open(cfg).map_err(|e| e.to_string())?;
        let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await.map_err(|e| e.to_string())?;
        let base = format!("http://{}", listener.local_addr().map_err(|e| e.to_string())?);
        let (tx, rx) = tokio::sync::oneshot::channel::<()>();
        let handle = tokio::spawn(helpdesk_server::serve_on(listener, state, async {
            let _ = rx.await;
        }));
        Ok(Self {
            base,
            stop: Some(tx),
            handle,
        })
    }

    async fn stop(mut self) -> Result<(), String> {
        if let Some(tx) = self.stop.take() {
            let _ = tx.send(());
        }
        self.handle.await.map_err(|e| e.to_string())?.map_err(|e| e.to_string())
    }
}

fn service_config(root: &Path, tokens: &TokenFile) -> Result<ServerConfig, String> {
    std::fs::write(root.join("mock_rules.json"), MOCK_RULES).map_err(|e| e.to_string())?;
    let text = r#"
data_dir = "data"
[class]
id = "cs101"
name = "Intro"
[backend]
kind = "mock"
mock_rules = "mock_rules.json"
"#;
    let cfg = ServerConfig::parse(text, &root.join("helpdesk.toml")).map_err(|e| e.to_string())?;
    tokens.save(&cfg.tokens_path()).map_err(|e| e.to_string())?;
    Ok(cfg)
}

fn api_contract() -> Outcome {
    let rt = tokio::runtime::Builder::new_multi_thread().enable_all().build().unwrap();
    rt.block_on(api_contract_async())
}

async fn api_contract_async() -> Outcome {
    let students = ["s1", "s2", "s3", "s4"];
    let mut rng = StdRng::seed_from_u64(8080);
    let mut tokens = TokenFile::default();
    let users = students
        .iter()
        .map(|s| (s.to_string(), Role::Student))
        .chain([("prof".to_string(), Role::Instructor)]);
    tokens.provision(&mut rng, users).map_err(|e| e.to_string())?;
    let tok = |u: &str| tokens.tokens.iter().find(|t| t.user_id == u).unwrap().token.clone();

    let root = tempfile::tempdir().map_err(|e| e.to_string())?;
    let cfg = service_config(root.path(), &tokens)?;
    let svc = Service::start(&cfg).await?;
    let http = reqwest::Client::new();
    let err = |e: reqwest::Error| e.to_string();

    // Submissions, one of which hits a failing backend.
    let mut owned: Vec<(usize, String)> = Vec::new();
    for i in 0..24 {
        let s = rng.random_range(0..students.len());
        let resp = http
            .post(format!("{}/api/queries", svc.base))
            .bearer_auth(tok(students[s]))
            .json(&json!({"language": "Python", "code": "x = 1", "issue": format!("question {i}")}))
            .send()
            .await
            .map_err(err)?;
        ensure!(resp.status() == 200, "submit {i}: {}", resp.status());
        let body: Value = resp.json().await.map_err(err)?;
        let text = body["main_text"].as_str().unwrap_or_default();
        ensure!(!has_fence_line(text), "submit {i}: code in answer");
        owned.push((s, body["query_id"].as_str().unwrap_or_default().to_owned()));
    }
    let failing = http
        .post(format!("{}/api/queries", svc.base))
        .bearer_auth(tok("s2"))
        .json(&json!({"issue": "BACKEND-DOWN please"}))
        .send()
        .await
        .map_err(err)?;
    ensure!(failing.status() == 502, "failing backend gave {}", failing.status());
    let body: Value = failing.json().await.map_err(err)?;
    let failed_id = body["query_id"].as_str().ok_or("no query_id on 502")?.to_owned();
    owned.push((1, failed_id.clone()));
    let rec: Value = http
        .get(format!("{}/api/queries/{failed_id}", svc.base))
        .bearer_auth(tok("prof"))
        .send()
        .await
        .map_err(err)?
        .json()
        .await
        .map_err(err)?;
    ensure!(
        rec["issue"] == "BACKEND-DOWN please" && rec["failure"].is_string() && rec["main_text"].is_null(),
        "failed submission not persisted: {rec}"
    );

    // Authorization: random reader/target pairs.
    let mut checks = 0;
    for _ in 0..150 {
        let reader = rng.random_range(0..students.len());
        let target = rng.random_range(0..students.len());
        let resp = http
            .get(format!("{}/api/queries?user={}&per_page=500", svc.base, students[target]))
            .bearer_auth(tok(students[reader]))
            .send()
            .await
            .map_err(err)?;
        if reader == target {
            ensure!(resp.status() == 200, "own list gave {}", resp.status());
            let page: Value = resp.json().await.map_err(err)?;
            let recs = page["records"].as_array().ok_or("no records")?;
            ensure!(recs.iter().all(|r| r["user_id"] == students[reader]), "foreign record in own list");
            ensure!(recs.iter().all(|r| r["trace"] == json!([])), "trace shown to a student");
            let expected = owned.iter().filter(|(o, _)| *o == reader).count();
            ensure!(recs.len() == expected, "{} records, expected {expected}", recs.len());
        } else {
            ensure!(resp.status() == 403, "cross-student list gave {}", resp.status());
        }
        let (owner, id) = &owned[rng.random_range(0..owned.len())];
        let resp = http
            .get(format!("{}/api/queries/{id}", svc.base))
            .bearer_auth(tok(students[reader]))
            .send()
            .await
            .map_err(err)?;
        let expect = if *owner == reader { 200 } else { 404 };
        ensure!(resp.status() == expect, "reader {reader} on {id} of {owner}: {}", resp.status());
        let unlisted = http
            .get(format!("{}/api/queries", svc.base))
            .bearer_auth(tok(students[reader]))
            .send()
            .await
            .map_err(err)?;
        let page: Value = unlisted.json().await.map_err(err)?;
        ensure!(
            page["records"].as_array().is_some_and(|r| r.iter().all(|r| r["user_id"] == students[reader])),
            "default listing leaked"
        );
        for path in ["/api/export", "/api/labels", "/api/analytics/report"] {
            let s = http
                .get(format!("{}{path}", svc.base))
                .bearer_auth(tok(students[reader]))
                .send()
                .await
                .map_err(err)?
                .status();
            ensure!(s == 403, "student on {path}: {s}");
        }
        checks += 1;
    }
    let anon = http.get(format!("{}/api/queries", svc.base)).send().await.map_err(err)?.status();
    ensure!(anon == 401, "anonymous list gave {anon}");

    // export -> import -> export.
    let export = |base: String| {
        let http = http.clone();
        let prof = tok("prof");
        async move {
            let resp = http.get(format!("{base}/api/export")).bearer_auth(prof).send().await.map_err(err)?;
            if resp.status() != 200 {
                return Err(format!("export gave {}", resp.status()));
            }
            resp.bytes().await.map(|b| b.to_vec()).map_err(err)
        }
    };
    let first = export(svc.base.clone()).await?;
    ensure!(
        first.iter().filter(|&&b| b == b'\n').count() == owned.len(),
        "export has wrong line count"
    );
    let other_root = tempfile::tempdir().map_err(|e| e.to_string())?;
    let other_cfg = service_config(other_root.path(), &tokens)?;
    let other = Service::start(&other_cfg).await?;
    let imported = http
        .post(format!("{}/api/import", other.base))
        .bearer_auth(tok("prof"))
        .body(first.clone())
        .send()
        .await
        .map_err(err)?;
    ensure!(imported.status() == 200, "import gave {}", imported.status());
    let second = export(other.base.clone()).await?;
    ensure!(first == second, "export -> import -> export is not byte-identical");
    other.stop().await?;

    // The failed record and everything else survive a restart.
    svc.stop().await?;
    let svc = Service::start(&cfg).await?;
    let third = export(svc.base.clone()).await?;
    ensure!(first == third, "export changed across restart");
    svc.stop().await?;

    Ok(format!(
        "{} records, {checks} randomized authorization rounds, 502 persisted, {} byte round trip; no web UI build needed",
        owned.len(),
        first.len()
    ))
}
