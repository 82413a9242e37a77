use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use shrinkball_cli::config::{ExperimentConfig, ExperimentKind};
use shrinkball_cli::{execute, CliError};

#[derive(Parser)]
#[command(name = "shrinkball", version, about = "Small-ball concentration and posterior ball-mass experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Prior ball probabilities over an n grid.
    Concentration(Common),
    /// Posterior ball mass from Gibbs chains on simulated data.
    Posterior(Common),
    /// Numeric checks of the supporting inequalities and integral identities.
    VerifyLemmas(Common),
    /// Prior ball probabilities plus decay-rate fits.
    RateScan(Common),
    /// Log ratio certificate between a small and a large ball.
    Certificate(Common),
}

#[derive(Args)]
struct Common {
    /// JSON experiment config.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads; 0 uses every core.
    #[arg(long, env = "SHRINKBALL_WORKERS", default_value_t = 0)]
    workers: usize,
    /// Output directory; defaults to the config's output_path or ".".
    #[arg(long)]
    out: Option<PathBuf>,
    /// Comma-separated dimensions replacing the config's n_grid.
    #[arg(long, value_delimiter = ',')]
    n_grid: Option<Vec<usize>>,
}

fn load(kind: ExperimentKind, c: &Common) -> Result<ExperimentConfig, CliError> {
    let mut cfg = match &c.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)?;
            serde_json::from_str(&text)
                .map_err(|e| CliError::Validation(vec![format!("{}: {e}", path.display())]))?
        }
        None => ExperimentConfig::default(),
    };
    cfg.kind = Some(kind);
    if let Some(s) = c.seed {
        cfg.seed = s;
    }
    if let Some(g) = &c.n_grid {
        cfg.n_grid = g.clone();
    }
    Ok(cfg)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (kind, common) = match &cli.command {
        Command::Concentration(c) => (ExperimentKind::Concentration, c),
        Command::Posterior(c) => (ExperimentKind::Posterior, c),
        Command::VerifyLemmas(c) => (ExperimentKind::VerifyLemmas, c),
        Command::RateScan(c) => (ExperimentKind::RateScan, c),
        Command::Certificate(c) => (ExperimentKind::Certificate, c),
    };
    let result = load(kind, common).and_then(|cfg| {
        let out = common
            .out
            .clone()
            .or_else(|| cfg.output_path.as_ref().map(PathBuf::from))
            .unwrap_or_else(|| PathBuf::from("."));
        execute(&cfg, common.workers, &out).map(|o| (o, out))
    });
    match result {
        Ok((o, out)) => {
            for w in &o.warnings {
                eprintln!("warning: {w}");
            }
            eprintln!("wrote {} rows to {}", o.table.rows.len(), out.join("results.csv").display());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
