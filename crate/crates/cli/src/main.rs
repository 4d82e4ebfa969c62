//! `tfp`: runs the Painlevé, ground-state, spectrum and Bohr–Sommerfeld
//! studies and writes their tables.

mod commands;
mod config;
mod error;
mod plot;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use log::error;

use crate::commands::Context;
use crate::config::StudyConfig;
use crate::error::CliError;

#[derive(Parser, Debug)]
#[command(name = "tfp", version, about = "Boundary-layer studies of the trapped Gross–Pitaevskii ground state")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Configuration file of key=value lines.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory (overrides the `out` key).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Also write SVG plots.
    #[arg(long, global = true)]
    plots: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Which {
    Painleve,
    Groundstate,
    Spectrum,
    Bs,
    Study,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Hastings–McLeod solve: painleve.csv, summary.txt.
    Painleve(Overrides),
    /// Corrections, ground states over eps, remainder table.
    Groundstate(Overrides),
    /// M0 eigenvalues and the L+ scaling table (d=1).
    Spectrum(Overrides),
    /// Bohr–Sommerfeld levels against M0, x-variable rule.
    Bs(Overrides),
    /// The whole chain.
    Study(Overrides),
}

#[derive(clap::Args, Debug)]
struct Overrides {
    /// key=value settings applied after the config file.
    #[arg(value_name = "KEY=VALUE")]
    pairs: Vec<String>,
}

impl Command {
    fn split(&self) -> (Which, &[String]) {
        match self {
            Command::Painleve(o) => (Which::Painleve, &o.pairs),
            Command::Groundstate(o) => (Which::Groundstate, &o.pairs),
            Command::Spectrum(o) => (Which::Spectrum, &o.pairs),
            Command::Bs(o) => (Which::Bs, &o.pairs),
            Command::Study(o) => (Which::Study, &o.pairs),
        }
    }
}

fn configure_threads() -> Result<(), CliError> {
    let Ok(raw) = std::env::var("TFP_THREADS") else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|n| *n > 0)
        .ok_or_else(|| CliError::Config(format!("TFP_THREADS must be a positive integer (got '{raw}')")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Config(format!("thread pool: {e}")))
}

fn run(cli: Cli) -> Result<(), CliError> {
    configure_threads()?;
    let mut cfg = match &cli.config {
        Some(p) => StudyConfig::from_file(p)?,
        None => StudyConfig::default(),
    };
    let (which, pairs) = cli.command.split();
    for p in pairs {
        cfg.apply_pair(p)?;
    }
    if let Some(out) = cli.out {
        cfg.out = out;
    }
    cfg.validate()?;
    commands::prepare_output(&cfg.out)?;
    let ctx = Context { cfg, plots: cli.plots };
    match which {
        Which::Painleve => commands::cmd_painleve(&ctx),
        Which::Groundstate => commands::cmd_groundstate(&ctx),
        Which::Spectrum => commands::cmd_spectrum(&ctx),
        Which::Bs => commands::cmd_bs(&ctx),
        Which::Study => commands::cmd_study(&ctx),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            error!("{e}");
            eprintln!("tfp: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
