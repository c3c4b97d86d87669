//! Command-line driver for the `biocomp` pipeline.
//!
//! Exit codes: 0 on success, 1 on internal errors, 2 on invalid input or
//! configuration.

pub mod commands;
pub mod config;

use std::ffi::OsString;
use std::fmt;
use std::path::PathBuf;

use biocomp::learn::Family;
use biocomp::SignalConfig;
use clap::{Parser, Subcommand};

pub use commands::{cmd_correlate, cmd_evaluate, cmd_features, cmd_synth, cmd_validate, CorrelationReport};
pub use config::{Overrides, PipelineConfig, ProtocolChoice, SEED_ENV};

pub const EXIT_INTERNAL: i32 = 1;
pub const EXIT_INPUT: i32 = 2;

#[derive(Debug)]
pub enum CliError {
    /// Bad corpus, configuration or arguments.
    Input(String),
    Internal(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Input(_) => EXIT_INPUT,
            CliError::Internal(_) => EXIT_INTERNAL,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Input(m) | CliError::Internal(m) => f.write_str(m),
        }
    }
}

impl std::error::Error for CliError {}

impl From<biocomp::Error> for CliError {
    fn from(e: biocomp::Error) -> Self {
        use biocomp::Error as E;
        match &e {
            E::Decomposition { .. } => CliError::Internal(e.to_string()),
            E::Io { source, .. } if source.kind() != std::io::ErrorKind::NotFound => CliError::Internal(e.to_string()),
            _ => CliError::Input(e.to_string()),
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "biocomp",
    version,
    about = "Classify code vs. prose comprehension from wearable biometrics"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Pipeline configuration file (TOML, or JSON with a .json extension).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Master seed; defaults to $BIOCOMP_SEED, then 0.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// loro, holdout or both.
    #[arg(long, global = true)]
    pub protocol: Option<ProtocolChoice>,
    /// Comma-separated signal configurations, e.g. HEART,EEG+EDA.
    #[arg(long, global = true, value_delimiter = ',')]
    pub configs: Option<Vec<SignalConfig>>,
    /// Comma-separated classifier families, e.g. NB,RF.
    #[arg(long, global = true, value_delimiter = ',')]
    pub families: Option<Vec<Family>>,
    /// Output directory.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Corpus root directory.
    #[arg(long, global = true)]
    pub corpus: Option<PathBuf>,
    /// Worker threads.
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check a corpus and write validation.json.
    Validate,
    /// Write one feature CSV per signal configuration.
    Features,
    /// Train and evaluate every configuration and family.
    Evaluate,
    /// Correlate per-participant best LORO BAC with GPA.
    Correlate {
        /// Evaluation report to read; defaults to report.json in the output
        /// directory, and LORO is run when that does not exist.
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Generate a synthetic corpus under the corpus root.
    Synth {
        /// Number of participants.
        #[arg(long)]
        n: Option<usize>,
        /// Replace existing session directories.
        #[arg(long)]
        force: bool,
    },
}

impl Cli {
    fn overrides(&self) -> Overrides {
        Overrides {
            seed: self.seed,
            protocol: self.protocol,
            configs: self.configs.clone(),
            families: self.families.clone(),
            out: self.out.clone(),
            corpus: self.corpus.clone(),
            jobs: self.jobs,
            n: match self.command {
                Command::Synth { n, .. } => n,
                _ => None,
            },
        }
    }
}

/// Parses `args` (program name first), runs the command and returns the
/// process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_INPUT } else { 0 };
        }
    };
    match execute(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

pub fn execute(cli: &Cli) -> Result<(), CliError> {
    let env_seed = std::env::var(SEED_ENV).ok();
    let cfg = PipelineConfig::resolve(cli.config.as_deref(), env_seed.as_deref(), &cli.overrides())?;
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(jobs) = cfg.jobs {
        pool = pool.num_threads(jobs);
    }
    let pool = pool
        .build()
        .map_err(|e| CliError::Internal(format!("thread pool: {e}")))?;
    pool.install(|| match &cli.command {
        Command::Validate => cmd_validate(&cfg).map(|r| {
            println!(
                "{}: {} sessions, corpus is analyzable",
                cfg.corpus_root.display(),
                r.sessions.len()
            );
        }),
        Command::Features => cmd_features(&cfg).map(|paths| {
            for p in paths {
                println!("{}", p.display());
            }
        }),
        Command::Evaluate => cmd_evaluate(&cfg).map(|report| {
            for p in report.protocols() {
                for row in p.best_rows() {
                    println!(
                        "{:<9} {:<16} best {:<10} BAC {}",
                        p.protocol.label(),
                        row.config.label(),
                        if row.family.is_empty() { "-" } else { &row.family },
                        row.bac.map_or("NA".into(), |b| format!("{b:.4}"))
                    );
                }
            }
        }),
        Command::Correlate { report } => cmd_correlate(&cfg, report.as_deref()).map(|c| {
            println!("Kendall tau {:.4}, p = {:.4}, n = {}", c.tau, c.p_value, c.n);
        }),
        Command::Synth { force, .. } => cmd_synth(&cfg, *force).map(|s| println!("{s}")),
    })
}
