//! `mcsbi`: first-passage-time model checking of population CTMCs.
//!
//! Exit codes: 0 success, 1 usage error, 2 numeric failure.

mod check;
mod commands;
mod config;
mod failure;
mod svg;

use clap::error::ErrorKind;
use clap::{Parser, Subcommand};

use crate::commands::{BenchArgs, ModelsArgs, MomentsArgs, SimulateArgs};
use crate::config::{CheckArgs, Method, RunConfig};
use crate::failure::Failure;

#[derive(Debug, Parser)]
#[command(name = "mcsbi", version, about = "First-passage-time CDFs of time-bounded until properties on population CTMCs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Compute the first-passage CDF of a property with one or more methods
    Check(CheckArgs),
    /// Sample one Gillespie trajectory as CSV (t, species...)
    Simulate(SimulateArgs),
    /// Exact master-equation CDF, in the same schema as `check`
    Exact(CheckArgs),
    /// Print the closed moment equations and their trajectory
    Moments(MomentsArgs),
    /// List the bundled models
    Models(ModelsArgs),
    /// Time methods on bundled models and report the SSA/SBI speedup
    Bench(BenchArgs),
}

fn dispatch(command: Command) -> Result<(), Failure> {
    match command {
        Command::Check(args) => check::run(&RunConfig::from_args(args)?),
        Command::Exact(args) => {
            let mut config = RunConfig::from_args(args)?;
            config.method = Method::Exact;
            config.validate()?;
            check::run(&config)
        }
        Command::Simulate(args) => commands::simulate_cmd(&args),
        Command::Moments(args) => commands::moments_cmd(&args),
        Command::Models(args) => commands::models_cmd(&args),
        Command::Bench(args) => commands::bench_cmd(&args),
    }
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            std::process::exit(code);
        }
    };
    if let Err(f) = dispatch(cli.command) {
        eprintln!("error: {f}");
        std::process::exit(f.exit_code());
    }
}
