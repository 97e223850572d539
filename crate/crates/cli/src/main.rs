//! Command-line front end: profile tables, half-width sweeps, bowl
//! integration, strip/disk solves, Perron runs and the property battery.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use config::RunConfig;
use soliton_core::Error;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] Error),
    #[error("{0}")]
    NotConverged(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("serialization error: {0}")]
    Json(#[from] serde_json::Error),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Core(e) => match e {
                Error::InvalidAlpha(_) | Error::NotConvex { .. } | Error::BarrierUnavailable { .. } => 2,
                _ => 3,
            },
            CliError::NotConverged(_) | CliError::Io(_) | CliError::Json(_) => 3,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "soliton", version, about = "Translating-soliton Dirichlet problems on strips and disks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// TOML run configuration; defaults apply to every omitted key.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Directory receiving CSV and JSON outputs.
    #[arg(long, global = true, default_value = ".")]
    out: PathBuf,
    /// Force sequential evaluation for byte-identical reruns.
    #[arg(long, global = true)]
    deterministic: bool,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Tabulate the planar profile (profile.csv, profile.json).
    Profile,
    /// Tabulate the profile half-width over an alpha range (halfwidth.csv).
    Halfwidth,
    /// Integrate the rotational bowl (bowl.csv, bowl.json).
    Bowl,
    /// Solve on a strip or disk and run the property battery (field.csv, report.json).
    Solve,
    /// Run the Perron disk-lifting iteration and compare with the direct solve
    /// (perron.csv, trace.json).
    Perron,
    /// Solve and write only the property battery (verify.json).
    Verify,
}

fn run(cli: &Cli) -> Result<commands::Outcome, CliError> {
    let cfg = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    let (out, det) = (cli.out.as_path(), cli.deterministic);
    match cli.command {
        Command::Profile => commands::profile(&cfg, out),
        Command::Halfwidth => commands::halfwidth_sweep(&cfg, out),
        Command::Bowl => commands::bowl(&cfg, out),
        Command::Solve => commands::solve(&cfg, out, det),
        Command::Perron => commands::perron(&cfg, out, det),
        Command::Verify => commands::verify(&cfg, out, det),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(outcome) => {
            for path in &outcome.written {
                println!("wrote {}", path.display());
            }
            if outcome.failed.is_empty() {
                ExitCode::SUCCESS
            } else {
                eprintln!("failed checks: {}", outcome.failed.join(", "));
                ExitCode::from(4)
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
