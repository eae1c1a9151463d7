//! Full-size synthetic class analyzed end to end against its manifest.

use helpdesk_core::analytics::{analyze, AnalysisInputs, AnalysisOptions, Exclusions};
use helpdesk_core::synth::{generate, SeedConfig};

#[test]
fn default_profile_matches_manifest() {
    let corpus = generate(&SeedConfig::default()).unwrap();
    let m = &corpus.manifest;
    assert_eq!((m.raw_queries, m.duplicates, m.kept), (2591, 509, 2082));
    assert_eq!(m.outlier_queries, Some(614));

    let reqs = corpus.requests();
    let outlier = m.outlier_user.clone().unwrap();
    let opts = AnalysisOptions {
        exclusions: Exclusions::users([outlier.clone()]),
        ..Default::default()
    };
    let inputs = AnalysisInputs {
        queries: &reqs,
        exercises: Some(&corpus.exercises),
        labels: Some(&corpus.labels),
        performance: Some(&corpus.performance),
    };
    let report = analyze(inputs, &opts).unwrap();

    assert_eq!(report.dedup.duplicates, 509);
    assert_eq!(report.dedup.kept, 2082);
    assert_eq!(report.sessions.total_sessions, m.total_sessions);
    for s in &report.usage.summary {
        assert!((s.mean - m.usage_mean[&s.metric]).abs() < 1e-9, "{}", s.metric);
    }

    let cats = report.categories.as_ref().unwrap();
    for row in &cats.rows {
        assert_eq!(row.count, m.reported_counts[&row.name], "{}", row.name);
        assert_eq!(row.percent.round() as u32, m.reported_percent_rounded[&row.name]);
    }
    let pct: Vec<u32> = cats.rows.iter().map(|r| r.percent.round() as u32).collect();
    assert_eq!(pct, [40, 50, 8, 2]);
    assert_eq!(cats.off_topic, 3);
    assert_eq!(cats.disagreements, m.rater_disagreements);
    assert!((cats.kappa_full.unwrap() - m.planted_kappa_full).abs() < 1e-9);
    assert!((cats.kappa_collapsed.unwrap() - m.planted_kappa_collapsed).abs() < 1e-9);
    assert!((m.planted_kappa_full - 0.75).abs() < 0.01, "{}", m.planted_kappa_full);
    assert!((m.planted_kappa_collapsed - 0.83).abs() < 0.01);

    let flags = report.flags.as_ref().unwrap();
    assert_eq!(flags.short_issue, m.short_issues);
    assert_eq!(flags.copied, m.copied_issues);

    assert!((report.usage.composite.cronbach_alpha - m.planted_alpha).abs() < 1e-9);
    let corr = &report.correlation.as_ref().unwrap().correlation;
    assert_eq!(corr.n, 48);
    assert_eq!(corr.excluded_users, [outlier]);
    assert!((corr.r - 0.38).abs() < 1e-9, "{}", corr.r);

    let all = analyze(inputs, &AnalysisOptions::default()).unwrap();
    assert_eq!(all.correlation.unwrap().correlation.n, 49);
    println!(
        "alpha {:.3} kappa {:.3}/{:.3} short {} copied {}",
        m.planted_alpha, m.planted_kappa_full, m.planted_kappa_collapsed, m.short_issues, m.copied_issues
    );
}
