use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

mod commands;
mod config;

use config::RunConfig;

#[derive(Parser)]
#[command(name = "monochain", version, about = "Mixing bounds, exact curves and couplings for monotone chains")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Total-variation bound coefficients and step counts.
    Bounds(Common),
    /// Exact TV curve with the bound envelopes, as CSV.
    Exact(Common),
    /// Coupled trajectories and a summary report.
    Couple(Common),
    /// Eigenvalue, eigenfunction and condition report of a Moran model.
    Spectral(Common),
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Start state as comma-separated counts, e.g. "0,10,0,10,80".
    #[arg(long)]
    start: Option<String>,
    #[arg(long)]
    output: Option<PathBuf>,
}

/// A failed command: message plus process exit code.
#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl Failure {
    pub fn validation(message: impl Into<String>) -> Self {
        Self { code: 2, message: message.into() }
    }

    pub fn capability(message: impl Into<String>) -> Self {
        Self { code: 3, message: message.into() }
    }
}

impl From<monochain::Error> for Failure {
    fn from(e: monochain::Error) -> Self {
        let code = if e.is_capability() { 3 } else { 2 };
        Self { code, message: e.to_string() }
    }
}

fn load(common: &Common) -> Result<RunConfig, Failure> {
    let mut cfg = RunConfig::load(&common.config)?;
    if let Some(e) = common.epsilon {
        cfg.opts.epsilon = Some(e);
    }
    if let Some(s) = common.seed {
        cfg.opts.seed = Some(s);
    }
    if let Some(s) = &common.start {
        cfg.opts.start = Some(s.clone());
    }
    if let Some(o) = &common.output {
        cfg.opts.output = Some(o.clone());
    }
    Ok(cfg)
}

fn run(cli: Cli) -> Result<(), Failure> {
    match &cli.command {
        Command::Bounds(c) => commands::bounds(&load(c)?),
        Command::Exact(c) => commands::exact(&load(c)?),
        Command::Couple(c) => commands::couple(&load(c)?),
        Command::Spectral(c) => commands::spectral(&load(c)?),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
