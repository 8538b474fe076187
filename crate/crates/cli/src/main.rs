//! `shockcrit`: trace 1-Hugoniot curves and evaluate shock criteria.
//!
//! Exit codes: 0 success, 1 configuration error, 2 continuation stall or
//! unreachable target, 3 audit FAIL.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] shockcrit::Error),
    #[error("{0}")]
    Unreachable(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        use shockcrit::Error as E;
        match self {
            CliError::Config(_) => 1,
            CliError::Unreachable(_) => 2,
            CliError::Core(E::Stalled { .. } | E::RankDeficient { .. } | E::OutOfRange { .. } | E::NotBracketed) => 2,
            CliError::Core(_) => 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    /// One JSON record per line.
    Delimited,
    /// A single JSON document.
    Structured,
}

#[derive(Debug, Parser)]
#[command(name = "shockcrit", version, about = "Hugoniot curves and shock stability criteria")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct GlobalArgs {
    /// Catalog system: burgers, p_system, euler_ideal, shallow_water.
    #[arg(long, global = true)]
    pub system: Option<String>,
    /// System parameters, e.g. "k=1,gamma=2".
    #[arg(long, global = true)]
    pub params: Option<String>,
    /// TOML run configuration.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output file (trace, check, validate) or directory (audit).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    #[arg(long, global = true)]
    pub tol_eq: Option<f64>,
    #[arg(long, global = true)]
    pub delta_lop: Option<f64>,
    /// Worker threads for audit sweeps.
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Trace the 1-shock curve through a left state.
    Trace(TraceArgs),
    /// Evaluate every criterion at one point of the curve.
    Check(CheckArgs),
    /// Sweep left states and test the Lopatinski implication.
    Audit(AuditArgs),
    /// Check symmetrizer and derivative consistency of the system.
    Validate,
}

#[derive(Debug, Args)]
pub struct TraceArgs {
    /// Left state, e.g. "1,0".
    #[arg(long, allow_hyphen_values = true)]
    pub left_state: Option<String>,
    #[arg(long)]
    pub max_arclength: Option<f64>,
}

#[derive(Debug, Args)]
pub struct CheckArgs {
    #[command(flatten)]
    pub trace: TraceArgs,
    /// Curve parameter of the right state.
    #[arg(long, allow_hyphen_values = true)]
    pub s_plus: Option<f64>,
    /// Target shock speed.
    #[arg(long, allow_hyphen_values = true)]
    pub speed: Option<f64>,
    /// Target state coordinate (1-based), used with --value.
    #[arg(long)]
    pub coordinate: Option<usize>,
    #[arg(long, allow_hyphen_values = true)]
    pub value: Option<f64>,
}

#[derive(Debug, Args)]
pub struct AuditArgs {
    #[arg(long)]
    pub samples: Option<usize>,
    #[arg(long)]
    pub max_arclength: Option<f64>,
    /// Re-judge a stored audit document instead of running a sweep.
    #[arg(long)]
    pub from: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match commands::run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
