//! The `qc` command-line front end. Every subcommand reads one JSON experiment
//! config, writes CSV tables to the output directory and prints a summary.

pub mod commands;
pub mod config;
pub mod plot;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use thiserror::Error;

pub use config::ExperimentConfig;

/// Process exit statuses.
pub mod exit {
    pub const SUCCESS: u8 = 0;
    pub const FAILURE: u8 = 1;
    pub const CONFIG: u8 = 2;
    pub const NO_EQUILIBRIUM: u8 = 3;
    pub const SIMULATION_FAILED: u8 = 4;
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] crate::Error),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("plot error: {0}")]
    Plot(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => exit::CONFIG,
            _ => exit::FAILURE,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "qc", version, about = "Equilibrium and pricing experiments for a queue with risk-averse customers")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Debug, Clone, clap::Args)]
pub struct CommonArgs {
    /// JSON experiment config.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory for CSV tables [default: ./out].
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Also render an SVG chart to this path.
    #[arg(long, global = true)]
    pub plot: Option<PathBuf>,
    /// Overrides the simulation seed in the config.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads for grid sweeps.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Solve for the equilibrium joining rate of one policy.
    Equilibrium,
    /// Achievable input rates with one or two parameters fixed.
    Range,
    /// Pricing curves for target rates with one parameter fixed.
    Curve,
    /// Best profit per input rate under each constraint.
    Profit,
    /// Free parameter as a function of risk aversion.
    RiskSweep,
    /// Check an equilibrium against a discrete-event simulation.
    Simulate,
    /// A policy whose profit is within epsilon of the envelope.
    Epsopt,
}

impl Command {
    fn config_name(&self) -> config::CommandName {
        use config::CommandName as C;
        match self {
            Command::Equilibrium => C::Equilibrium,
            Command::Range => C::Range,
            Command::Curve => C::Curve,
            Command::Profit => C::Profit,
            Command::RiskSweep => C::RiskSweep,
            Command::Simulate => C::Simulate,
            Command::Epsopt => C::Epsopt,
        }
    }
}

/// Runs one subcommand and returns its exit status.
pub fn run(cli: &Cli) -> Result<u8, CliError> {
    let path = cli
        .common
        .config
        .as_ref()
        .ok_or_else(|| CliError::Config("--config <path> is required".into()))?;
    let cfg = ExperimentConfig::from_path(path)?;
    if cfg.command != cli.command.config_name() {
        return Err(CliError::Config(format!(
            "config is for `{}` but `{}` was requested",
            cfg.command.as_str(),
            cli.command.config_name().as_str()
        )));
    }
    if let Some(n) = cli.common.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Config(format!("--threads: {e}")))?;
    }
    let out = cli
        .common
        .out
        .clone()
        .or_else(|| cfg.out.clone())
        .unwrap_or_else(|| PathBuf::from("out"));
    std::fs::create_dir_all(&out)?;
    let ctx = commands::Context {
        cfg: &cfg,
        out: &out,
        plot: cli.common.plot.as_deref(),
        seed: cli.common.seed,
    };
    match cli.command {
        Command::Equilibrium => commands::equilibrium(&ctx),
        Command::Range => commands::range(&ctx),
        Command::Curve => commands::curve(&ctx),
        Command::Profit => commands::profit(&ctx),
        Command::RiskSweep => commands::risk_sweep(&ctx),
        Command::Simulate => commands::simulate(&ctx),
        Command::Epsopt => commands::epsopt(&ctx),
    }
}

/// Entry point of the `qc` binary.
pub fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("QC_LOG", "error")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { exit::CONFIG } else { exit::SUCCESS });
        }
    };
    match run(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            log::error!("{e}");
            eprintln!("qc: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
