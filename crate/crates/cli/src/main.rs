//! `icsdetect` — simulate ICS telemetry under attack, train the ensemble
//! detector, and reproduce the benchmark tables.

mod commands;
mod config;
mod source;

use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(name = "icsdetect", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate labeled telemetry from a scenario file
    Simulate(commands::SimulateArgs),
    /// Train the ensemble pipeline on one stratified split and save the model
    Train(commands::TrainArgs),
    /// Evaluate a saved model on a dataset (optionally on its original split)
    Eval(commands::EvalArgs),
    /// Imbalance-ratio sweep: one table per metric, rows=ratios, columns=methods
    Sweep(commands::SweepArgs),
    /// Method comparison at ratio 1.0: rows=methods, columns=scores
    Compare(commands::CompareArgs),
    /// Export one branch's networks as standalone files
    ExportBranch(commands::ExportBranchArgs),
}

fn main() {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Simulate(args) => commands::cmd_simulate(args),
        Command::Train(args) => commands::cmd_train(args),
        Command::Eval(args) => commands::cmd_eval(args),
        Command::Sweep(args) => commands::cmd_sweep(args),
        Command::Compare(args) => commands::cmd_compare(args),
        Command::ExportBranch(args) => commands::cmd_export_branch(args),
    };
    if let Err(err) = result {
        // Single machine-parsable line: error: <cause>: <cause>: ...
        eprintln!("error: {:#}", err);
        std::process::exit(1);
    }
}
