use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use fluxjac_cli::config::{Command, ExperimentConfig};

#[derive(Parser)]
#[command(name = "fluxjac", about = "Flux-differencing Jacobian experiments")]
struct Cli {
    #[command(subcommand)]
    command: Sub,
}

#[derive(Subcommand)]
enum Sub {
    /// Compare analytic Jacobians with automatic differentiation.
    Verify(Args),
    /// Time Jacobian assembly against the residual and the oracles.
    Bench(Args),
    /// Measure temporal convergence rates.
    Converge(Args),
    /// Run a time-dependent simulation.
    Simulate(Args),
}

#[derive(clap::Args)]
struct Args {
    /// Experiment configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Fail with a nonzero exit code when a configured check fails.
    #[arg(long)]
    assert: bool,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (command, args) = match cli.command {
        Sub::Verify(a) => (Command::Verify, a),
        Sub::Bench(a) => (Command::Bench, a),
        Sub::Converge(a) => (Command::Converge, a),
        Sub::Simulate(a) => (Command::Simulate, a),
    };
    let mut cfg = match &args.config {
        Some(path) => {
            let text = match std::fs::read_to_string(path) {
                Ok(t) => t,
                Err(e) => {
                    eprintln!("error: cannot read {}: {e}", path.display());
                    return ExitCode::from(2);
                }
            };
            match ExperimentConfig::parse(&text) {
                Ok(c) => c,
                Err(e) => {
                    eprintln!("error: {}: {e}", path.display());
                    return ExitCode::from(2);
                }
            }
        }
        None => ExperimentConfig::default(),
    };
    cfg.command = command;
    if let Some(s) = args.seed {
        cfg.seed = s;
    }
    if let Some(o) = args.out {
        cfg.out = o;
    }
    match fluxjac_cli::execute(&cfg, args.assert) {
        Ok(outcome) => {
            print!("{}", outcome.report);
            for c in &outcome.checks {
                println!("{}", c.line());
            }
            if outcome.passed() {
                ExitCode::SUCCESS
            } else {
                ExitCode::FAILURE
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
