use std::process::ExitCode;

use clap::{Parser, Subcommand};

use sica_cli::commands;
use sica_cli::error::CliError;

/// Sparse-source recovery from multivariate signals: subspace whitening,
/// FastICA unmixing, isotropy-null calibrated thresholds, a mixture-model
/// baseline, a ground-truthed simulator, and evaluation harnesses.
///
/// All randomness flows from explicit --seed flags; identical invocations
/// produce byte-identical outputs.
#[derive(Parser)]
#[command(name = "sica", version, about, max_term_width = 100)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a ground-truthed synthetic dataset directory.
    Simulate(commands::simulate::SimulateArgs),
    /// Whiten an observed matrix and unmix it with FastICA.
    Decompose(commands::decompose::DecomposeArgs),
    /// Threshold components against a null (gaussian/empirical) or with
    /// the mixture baseline.
    Threshold(commands::threshold::ThresholdArgs),
    /// Score thresholded components against simulation ground truth.
    Evaluate(commands::evaluate::EvaluateArgs),
    /// Sweep ROC curves over noise conditions and methods.
    Roc(commands::roc::RocArgs),
    /// Observed FPR vs specified p-value over the six reference conditions.
    Table1(commands::table1::Table1Args),
    /// Downsampling consistency protocol on a time series.
    Consistency(commands::consistency::ConsistencyArgs),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result: Result<(), CliError> = match cli.command {
        Command::Simulate(args) => commands::simulate::run(args),
        Command::Decompose(args) => commands::decompose::run(args),
        Command::Threshold(args) => commands::threshold::run(args),
        Command::Evaluate(args) => commands::evaluate::run(args),
        Command::Roc(args) => commands::roc::run(args),
        Command::Table1(args) => commands::table1::run(args),
        Command::Consistency(args) => commands::consistency::run(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
