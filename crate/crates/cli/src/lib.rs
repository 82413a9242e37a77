//! Configuration-driven experiments over the `shrinkball` library.
//!
//! [`execute`] validates a config, runs it on a worker pool and writes
//! `results.csv` plus `manifest.json` into the output directory.

pub mod config;
pub mod output;
pub mod run;

use std::path::Path;
use std::time::Instant;

use serde_json::Value;

use config::{validate, ExperimentConfig};
use output::{write_artifacts, Manifest, Table};
use run::RunError;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("invalid configuration:\n  {}", .0.join("\n  "))]
    Validation(Vec<String>),
    #[error("{0}")]
    Numeric(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => 2,
            CliError::Numeric(_) => 3,
            CliError::Io(_) => 1,
        }
    }
}

impl From<RunError> for CliError {
    fn from(e: RunError) -> Self {
        match e {
            RunError::Config(m) => CliError::Validation(vec![m]),
            RunError::Numeric(m) => CliError::Numeric(m),
        }
    }
}

pub struct Outcome {
    /// Threads the experiment ran on.
    pub workers: usize,
    pub table: Table,
    pub summary: Value,
    pub warnings: Vec<String>,
}

/// Validates and runs `cfg` with `workers` threads (0 = all cores).
pub fn run_config(cfg: &ExperimentConfig, workers: usize) -> Result<Outcome, CliError> {
    let findings = validate(cfg);
    if !findings.is_ok() {
        return Err(CliError::Validation(findings.errors));
    }
    let (out, used) = shrinkball::rng::with_workers(workers, || (run::run(cfg), rayon::current_num_threads()));
    let out = out?;
    Ok(Outcome { workers: used, table: out.table, summary: out.summary, warnings: findings.warnings })
}

/// [`run_config`] followed by writing the artifacts into `out_dir`.
pub fn execute(cfg: &ExperimentConfig, workers: usize, out_dir: &Path) -> Result<Outcome, CliError> {
    let start = Instant::now();
    let outcome = run_config(cfg, workers)?;
    let manifest = Manifest {
        tool: "shrinkball",
        version: env!("CARGO_PKG_VERSION"),
        kind: cfg.kind().as_str(),
        seed: cfg.seed,
        workers: outcome.workers,
        wall_clock_seconds: start.elapsed().as_secs_f64(),
        config: cfg,
        columns: &outcome.table.columns,
        rows: outcome.table.rows.len(),
        warnings: &outcome.warnings,
        summary: &outcome.summary,
    };
    write_artifacts(out_dir, &outcome.table, &manifest)?;
    Ok(outcome)
}
