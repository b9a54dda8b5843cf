//! Batch experiments over `cladoflow-core`.
//!
//! A run is one experiment with flat parameters, a seed and a thread count,
//! read from a JSON file and/or flags. It writes a CSV table and a JSON
//! summary; the exit status is 0 when every assertion holds, 2 when one
//! fails and 1 on a usage or input error.

pub mod config;
pub mod experiments;
pub mod report;

use std::ffi::OsString;
use std::path::PathBuf;
use std::time::Instant;

use clap::Parser;

pub use config::{parse_config, Conflict, Experiment, ExperimentConfig, Flags};
pub use experiments::{execute, resolve_params, Assertion, Outcome};
pub use report::Written;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("usage: {0}")]
    Usage(String),
    #[error("invalid value for {key:?}: {message}")]
    Parse { key: String, message: String },
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Library(#[from] cladoflow_core::Error),
}

pub const EXIT_PASS: i32 = 0;
pub const EXIT_ERROR: i32 = 1;
pub const EXIT_ASSERTION: i32 = 2;

#[derive(Debug, Parser)]
#[command(
    name = "cladoflow",
    version,
    about = "Experiments on the Aldous chain on cladograms",
    after_long_help = experiments::help_text()
)]
pub struct Cli {
    /// Experiment name; may come from the config file instead.
    pub experiment: Option<String>,
    /// JSON config file with flat keys.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Master seed; default 1.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Worker threads; falls back to CLADOFLOW_THREADS, then all cores.
    #[arg(long)]
    pub threads: Option<usize>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// File stem for the reports instead of experiment and timestamp.
    #[arg(long)]
    pub name: Option<String>,
    /// Experiment parameter; repeatable.
    #[arg(long = "param", value_name = "KEY=VALUE")]
    pub params: Vec<String>,
}

#[derive(Debug)]
pub struct RunResult {
    pub outcome: Outcome,
    pub written: Written,
    pub pass: bool,
}

/// Resolve parameters, run inside a pool of `config.threads` workers and
/// write the reports.
pub fn run(config: &ExperimentConfig, conflicts: &[Conflict]) -> Result<RunResult, CliError> {
    let params = resolve_params(config.experiment, &config.params)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.threads)
        .build()
        .map_err(|e| CliError::Usage(format!("thread pool: {e}")))?;
    let started = chrono::Utc::now();
    let clock = Instant::now();
    log::info!(
        "{} seed={} threads={}",
        config.experiment,
        config.seed,
        config.threads
    );
    let outcome = pool.install(|| execute(config, &params))?;
    let seconds = clock.elapsed().as_secs_f64();
    let written = report::write(config, &params, conflicts, &outcome, started, seconds)?;
    let pass = outcome.assertions.iter().all(|a| a.pass);
    Ok(RunResult {
        outcome,
        written,
        pass,
    })
}

fn run_cli(cli: Cli) -> Result<bool, CliError> {
    let file = match &cli.config {
        Some(p) => Some(std::fs::read_to_string(p)?),
        None => None,
    };
    let flags = Flags {
        experiment: cli.experiment,
        seed: cli.seed,
        threads: cli.threads,
        out: cli.out,
        name: cli.name,
        params: cli.params,
    };
    let env = std::env::var(config::THREADS_ENV).ok();
    let (config, conflicts) = parse_config(file.as_deref(), &flags, env.as_deref())?;
    for c in &conflicts {
        log::warn!(
            "{}: flag value {} overrides file value {}",
            c.key,
            c.flag,
            c.file
        );
    }
    let r = run(&config, &conflicts)?;
    for a in &r.outcome.assertions {
        let tag = if a.pass { "PASS" } else { "FAIL" };
        println!("{tag} {} ({})", a.name, a.detail);
    }
    println!("csv {}", r.written.csv.display());
    println!("json {}", r.written.json.display());
    Ok(r.pass)
}

/// Entry point for the binary; returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info"))
        .try_init();
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                EXIT_ERROR
            } else {
                EXIT_PASS
            };
        }
    };
    match run_cli(cli) {
        Ok(true) => EXIT_PASS,
        Ok(false) => EXIT_ASSERTION,
        Err(e) => {
            log::error!("{e}");
            EXIT_ERROR
        }
    }
}
