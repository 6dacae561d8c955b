use std::process::ExitCode;

use clap::{Parser, Subcommand};

mod attack;
mod classify;
mod exit;
mod fit;
mod output;
mod simulate;

/// Differentially private GLM estimation: simulations, model fitting and
/// score-attack audits.
#[derive(Debug, Parser)]
#[command(name = "privglm", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run a grid of simulated error-trajectory experiments.
    Simulate(simulate::SimulateArgs),
    /// Fit a GLM to a CSV dataset.
    Fit(fit::FitArgs),
    /// Measure the score attack against an estimator on simulated data.
    Attack(attack::AttackArgs),
    /// Repeated train/test split classification with sparse logistic regression.
    Classify(classify::ClassifyArgs),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Simulate(args) => simulate::run(args),
        Command::Fit(args) => fit::run(args),
        Command::Attack(args) => attack::run(args),
        Command::Classify(args) => classify::run(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            err.exit_code()
        }
    }
}
