//! Command-line entry point.
//!
//! Exit codes: 0 on success, 2 on input errors (bad config, malformed data,
//! violated invariants), 1 on internal errors.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use featmarket_cli::{CliError, CommandKind, ExperimentConfig};

#[derive(Parser)]
#[command(
    name = "featmarket",
    about = "Strategic classification experiments under classifier-induced feature markets"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct RunArgs {
    /// JSON experiment config
    #[arg(long)]
    config: PathBuf,
    /// Override the config seed
    #[arg(long)]
    seed: Option<u64>,
    /// Override the config output directory
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Equilibrium price and revenue curve of a demand profile
    Price(RunArgs),
    /// Simulate best responses at a fixed or equilibrium price
    Simulate(RunArgs),
    /// Train naive / strat / market-aware models over seeded splits
    Train(RunArgs),
    /// Short- and long-term metrics for a fixed classifier
    Eval(RunArgs),
    /// The training protocol swept over budget rescale exponents
    Sweep(RunArgs),
    /// Generate a synthetic dataset CSV
    Synth(RunArgs),
}

fn dispatch(command: Command) -> Result<(), CliError> {
    let (kind, args) = match command {
        Command::Price(a) => (CommandKind::Price, a),
        Command::Simulate(a) => (CommandKind::Simulate, a),
        Command::Train(a) => (CommandKind::Train, a),
        Command::Eval(a) => (CommandKind::Eval, a),
        Command::Sweep(a) => (CommandKind::Sweep, a),
        Command::Synth(a) => (CommandKind::Synth, a),
    };
    let mut cfg = ExperimentConfig::load(&args.config)?;
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    if let Some(out) = args.out {
        cfg.out_dir = out;
    }
    featmarket_cli::run_experiment(kind, &cfg)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("{err}");
            ExitCode::from(err.exit_code())
        }
    }
}
