//! Subcommands of the `helpdesk` binary.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use helpdesk_core::analytics::{
    analyze, render_text, AnalysisInputs, AnalysisOptions, AnalyticsError, DedupConfig, Exclusions, Report,
    DEFAULT_DEDUP_K, DEFAULT_GAP_SECONDS,
};
use helpdesk_core::store::{import_exercises, import_performance, read_labels, read_log};
use helpdesk_core::synth::{self, Profile, SeedConfig};
use helpdesk_server::{Role, ServerConfig, TokenFile};

#[derive(Debug, Parser)]
#[command(name = "helpdesk", version, about = "Guardrailed programming help and query-log analytics")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the HTTP service.
    Serve {
        #[arg(long)]
        config: PathBuf,
    },
    /// Analyze a query log and print the report.
    Analyze(AnalyzeArgs),
    /// Write a synthetic class (log, exercises, labels, performance, manifest).
    Seed(SeedArgs),
    /// Add bearer tokens for new users to a token file.
    Tokens(TokenArgs),
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    /// Query log (JSON lines).
    #[arg(long)]
    pub log: PathBuf,
    /// Directory of exercise `.txt` files; enables the low-effort flags.
    #[arg(long)]
    pub exercises: Option<PathBuf>,
    /// Course performance CSV; enables the usage/performance correlation.
    #[arg(long)]
    pub performance: Option<PathBuf>,
    /// Rater labels (JSON lines); enables the category table.
    #[arg(long)]
    pub labels: Option<PathBuf>,
    #[arg(long, default_value_t = DEFAULT_DEDUP_K)]
    pub dedup_k: f64,
    #[arg(long, default_value_t = DEFAULT_GAP_SECONDS)]
    pub gap_seconds: i64,
    /// Leave a user out of the composite and correlation. Repeatable.
    #[arg(long = "exclude-user")]
    pub exclude_users: Vec<String>,
    /// Also exclude users whose raw query count exceeds mean + 3 SD.
    #[arg(long)]
    pub exclude_outliers: bool,
    /// Write report.json and report.txt here.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SeedArgs {
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = synth::DEFAULT_USERS)]
    pub users: usize,
    #[arg(long, default_value_t = synth::DEFAULT_QUERIES)]
    pub queries: usize,
    #[arg(long, default_value = "table1")]
    pub profile: Profile,
    #[arg(long, default_value_t = synth::DEFAULT_SEED)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct TokenArgs {
    /// Token file to create or extend.
    #[arg(long)]
    pub file: PathBuf,
    #[arg(long = "student")]
    pub students: Vec<String>,
    #[arg(long = "instructor")]
    pub instructors: Vec<String>,
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    /// Unreadable or invalid input.
    #[error("{0}")]
    Input(String),
    /// Inputs were fine but the analysis is undefined for them.
    #[error(transparent)]
    Analytics(#[from] AnalyticsError),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Input(_) => 1,
            CliError::Analytics(AnalyticsError::InvalidParameter(_)) => 1,
            CliError::Analytics(_) => 2,
        }
    }
}

fn input<E: std::fmt::Display>(e: E) -> CliError {
    CliError::Input(e.to_string())
}

pub fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Serve { config } => serve(&config),
        Command::Analyze(a) => {
            let report = run_analyze(&a)?;
            print!("{}", render_text(&report));
            Ok(())
        }
        Command::Seed(s) => seed(&s),
        Command::Tokens(t) => tokens(&t),
    }
}

fn serve(config: &Path) -> Result<(), CliError> {
    let cfg = ServerConfig::load(config).map_err(input)?;
    let rt = tokio::runtime::Runtime::new().map_err(input)?;
    rt.block_on(helpdesk_server::serve(&cfg)).map_err(input)
}

pub fn run_analyze(a: &AnalyzeArgs) -> Result<Report, CliError> {
    let opts = AnalysisOptions {
        dedup: DedupConfig::new(a.dedup_k)?,
        gap_seconds: a.gap_seconds,
        exclusions: Exclusions {
            users: a.exclude_users.iter().cloned().collect(),
            outlier_rule: a.exclude_outliers,
        },
    };
    let queries: Vec<_> = read_log(&a.log)
        .map_err(input)?
        .iter()
        .map(|r| r.request())
        .collect();
    let exercises = match &a.exercises {
        Some(dir) => {
            let load = import_exercises(dir).map_err(input)?;
            for f in &load.failures {
                eprintln!("warning: skipped exercise {}: {}", f.path.display(), f.reason);
            }
            Some(load.exercises)
        }
        None => None,
    };
    let labels = a.labels.as_deref().map(read_labels).transpose().map_err(input)?;
    let performance = a
        .performance
        .as_deref()
        .map(import_performance)
        .transpose()
        .map_err(input)?;
    let inputs = AnalysisInputs {
        queries: &queries,
        exercises: exercises.as_deref(),
        labels: labels.as_deref(),
        performance: performance.as_deref(),
    };
    let report = analyze(inputs, &opts)?;
    if let Some(out) = &a.out {
        std::fs::create_dir_all(out).map_err(input)?;
        let json = serde_json::to_string_pretty(&report).expect("report serializes");
        std::fs::write(out.join("report.json"), json + "\n").map_err(input)?;
        std::fs::write(out.join("report.txt"), render_text(&report)).map_err(input)?;
    }
    Ok(report)
}

fn seed(s: &SeedArgs) -> Result<(), CliError> {
    let cfg = SeedConfig {
        users: s.users,
        queries: s.queries,
        profile: s.profile,
        seed: s.seed,
    };
    let corpus = synth::generate(&cfg).map_err(input)?;
    synth::write_corpus(&s.out, &corpus).map_err(input)?;
    let m = &corpus.manifest;
    println!(
        "wrote {} queries from {} users ({} planted duplicates) to {}",
        m.raw_queries,
        cfg.users,
        m.duplicates,
        s.out.display()
    );
    if let Some(u) = &m.outlier_user {
        println!("planted outlier: {u} ({} queries)", m.outlier_queries.unwrap_or_default());
    }
    Ok(())
}

fn tokens(t: &TokenArgs) -> Result<(), CliError> {
    let mut file = if t.file.exists() {
        TokenFile::load(&t.file).map_err(input)?
    } else {
        TokenFile::default()
    };
    let users = t
        .students
        .iter()
        .map(|u| (u.clone(), Role::Student))
        .chain(t.instructors.iter().map(|u| (u.clone(), Role::Instructor)));
    let added = file.provision(&mut rand::rng(), users).map_err(input)?;
    file.save(&t.file).map_err(input)?;
    for e in added {
        let role = match e.role {
            Role::Student => "student",
            Role::Instructor => "instructor",
        };
        println!("{}\t{}\t{}", e.user_id, role, e.token);
    }
    Ok(())
}
