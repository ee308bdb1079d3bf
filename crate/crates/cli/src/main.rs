//! `hdlp`: local projections with greedy control selection, simulation
//! designs, coverage experiments and LP-DiD.
//!
//! Exit codes: 0 success, 2 configuration error, 3 data error, 4 computation
//! error. No output file is written on a nonzero exit.

mod commands;
mod config;
mod error;
mod io;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crate::commands::Overrides;

#[derive(Parser)]
#[command(name = "hdlp", version, about = "Local projections with high-dimensional controls")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Impulse responses from a wide CSV of time series.
    Estimate(Common),
    /// Simulate a VAR, the persistent sparse/dense design, or a factor model.
    Simulate(Common),
    /// Coverage and interval-width experiment.
    Montecarlo(Common),
    /// LP-DiD on a long-format panel.
    Lpdid(Common),
}

#[derive(Args)]
struct Common {
    /// TOML configuration file.
    #[arg(long)]
    config: PathBuf,
    /// Overrides the configured seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads.
    #[arg(long)]
    threads: Option<usize>,
    /// Overrides the configured output path.
    #[arg(long)]
    out: Option<PathBuf>,
}

impl Common {
    fn overrides(&self) -> Overrides {
        Overrides { seed: self.seed, threads: self.threads, out: self.out.clone() }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Estimate(c) => commands::estimate(&c.config, &c.overrides()),
        Command::Simulate(c) => commands::simulate(&c.config, &c.overrides()),
        Command::Montecarlo(c) => commands::montecarlo(&c.config, &c.overrides()),
        Command::Lpdid(c) => commands::lpdid(&c.config, &c.overrides()),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("hdlp: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
