//! Command-line entry point.
//!
//! Exit codes: 0 success, 2 configuration/schema violation, 3 numerical
//! failure (diagnostics.txt written next to the artifacts), 4 I/O error.

// `!(x > 0.0)` validation comparisons deliberately reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod artifacts;
mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use artifacts::{Manifest, OutDir};
use commands::CliError;
use config::ExperimentConfig;

#[derive(Parser)]
#[command(
    name = "defport",
    version,
    about = "Portfolio optimization and indifference pricing in a market with default risk"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Experiment configuration (a config JSON or a manifest.json from a
    /// previous run).
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Output directory (overrides outputs.dir).
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Seed override.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Path-count override.
    #[arg(long, global = true)]
    paths: Option<usize>,

    /// Step-count override.
    #[arg(long, global = true)]
    steps: Option<usize>,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Simulate price/default paths and export them as CSV.
    Simulate,
    /// Log-utility optimal strategy and value.
    Log,
    /// Power-utility value via the k-bounded BSDE family.
    Power,
    /// Exponential-utility value for the configured claim.
    Exp,
    /// Hodges indifference price of the configured claim.
    Price,
    /// Insider information price of the configured claim.
    #[command(name = "info-price")]
    InfoPrice,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Simulate => "simulate",
            Command::Log => "log",
            Command::Power => "power",
            Command::Exp => "exp",
            Command::Price => "price",
            Command::InfoPrice => "info-price",
        }
    }
}

fn load_config(path: &PathBuf) -> Result<ExperimentConfig, CliError> {
    let text = std::fs::read_to_string(path).map_err(CliError::Io)?;
    // A manifest from a previous run embeds the resolved config; accept it
    // directly so "rerun from the manifest" is one command.
    if let Ok(manifest) = serde_json::from_str::<Manifest>(&text) {
        return Ok(manifest.config);
    }
    serde_json::from_str::<ExperimentConfig>(&text).map_err(|e| {
        CliError::Config(format!("{}:{}:{}: {e}", path.display(), e.line(), e.column()))
    })
}

fn run() -> Result<(), CliError> {
    let cli = Cli::parse();
    let config_path = cli
        .config
        .as_ref()
        .ok_or_else(|| CliError::Config("--config <path> is required".to_string()))?;
    let mut cfg = load_config(config_path)?;
    if let Some(seed) = cli.seed {
        cfg.numerics.seed = seed;
    }
    if let Some(paths) = cli.paths {
        cfg.numerics.paths = paths;
    }
    if let Some(steps) = cli.steps {
        cfg.numerics.steps = steps;
    }
    cfg.validate().map_err(|e| CliError::Config(e.to_string()))?;

    let out_path = cli.out.clone().unwrap_or_else(|| PathBuf::from(&cfg.outputs.dir));
    let out = OutDir::create(&out_path).map_err(CliError::Io)?;

    let result = commands::run(cli.command.name(), &cfg, &out);
    if let Err(CliError::Engine(e)) = &result {
        // Numerical failures leave a diagnostics file next to the artifacts.
        let _ = out.write_text("diagnostics.txt", &format!("{e}\n"));
    }
    result
}

fn main() -> ExitCode {
    match run() {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Config(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(CliError::Engine(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(3)
        }
        Err(CliError::Io(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(4)
        }
    }
}
