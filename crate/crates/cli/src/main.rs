mod artifacts;
mod commands;
mod error;
mod spec;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use schednet::verify::{Suite, MASTER_SEED};

use crate::error::{CliError, CliResult};
use crate::spec::ExperimentSpec;

/// Simulate and analyze randomized scheduling in wireless and circuit-switched networks.
#[derive(Parser)]
#[command(name = "schednet", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every (load target, seed) replica and write traces plus a summary.
    Simulate(RunArgs),
    /// Load factor of each configured arrival vector, with a decomposition witness.
    Capacity(RunArgs),
    /// Run the analyses listed in the experiment spec.
    Analyze(RunArgs),
    /// Run the built-in invariant suites.
    Verify(VerifyArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Experiment spec (JSON).
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides `output_dir` in the experiment spec.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Runs a single replica with this seed.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct VerifyArgs {
    /// chains, analysis, weights, capacity or all.
    #[arg(long, default_value = "all", value_parser = parse_suite)]
    suite: Suite,
    /// Master seed for the randomized instances.
    #[arg(long)]
    seed: Option<u64>,
    /// Also write the report here.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn parse_suite(s: &str) -> Result<Suite, String> {
    s.parse().map_err(|e: schednet::Error| e.to_string())
}

fn run(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Simulate(a) => {
            let spec = ExperimentSpec::load(&a.config, a.seed)?;
            commands::simulate(&spec, &spec.output_dir(a.out.as_deref())?)
        }
        Command::Capacity(a) => {
            let spec = ExperimentSpec::load(&a.config, a.seed)?;
            commands::capacity(&spec, &spec.output_dir(a.out.as_deref())?)
        }
        Command::Analyze(a) => {
            let spec = ExperimentSpec::load(&a.config, a.seed)?;
            commands::analyze(&spec, &spec.output_dir(a.out.as_deref())?)
        }
        Command::Verify(a) => commands::verify(a.suite, a.seed.unwrap_or(MASTER_SEED), a.out.as_deref()),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e @ CliError::ChecksFailed { .. }) => {
            eprintln!("schednet: {e}");
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("schednet: error: {e}");
            ExitCode::from(2)
        }
    }
}
