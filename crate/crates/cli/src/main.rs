use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

mod commands;
mod config;
mod exit;

use config::{ExperimentConfig, FeederArgs, PosviArgs, SboArgs, SolveArgs, TrainArgs, VerifyArgs};

#[derive(Parser)]
#[command(name = "mshap", version, about = "Shapley credit assignment for cooperative Markov games")]
struct Cli {
    #[command(subcommand)]
    command: Commands,
}

#[derive(Subcommand)]
enum Commands {
    /// Coalition values, Markov Shapley values, core and fairness checks of a game.
    Solve(SolveArgs),
    /// Fixed point of the Shapley-Bellman operator with equal-credit weights.
    Sbo(SboArgs),
    /// Tabular SHAQ or VDN training; writes a learning-curve CSV.
    Train(TrainArgs),
    /// Belief-state value iteration for every coalition of a partially observable game.
    Posvi(PosviArgs),
    /// Baseline controller on the linearised feeder; per-step CSV and summary JSON.
    Feeder(FeederArgs),
    /// Cross-checks against brute-force oracles.
    Verify(VerifyArgs),
    /// Runs every table of a TOML experiment config.
    Run {
        /// Experiment config (TOML).
        config: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Commands::Solve(a) => commands::solve(a),
        Commands::Sbo(a) => commands::sbo(a),
        Commands::Train(a) => commands::train_cmd(a),
        Commands::Posvi(a) => commands::posvi_cmd(a),
        Commands::Feeder(a) => commands::feeder(a),
        Commands::Verify(a) => commands::verify_cmd(a),
        Commands::Run { config } => ExperimentConfig::from_file(config).and_then(|c| commands::run(&c)),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("mshap: {e}");
            e.code()
        }
    }
}
