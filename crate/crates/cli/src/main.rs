//! `lshproj`: binary LSH projection representations for text.
//!
//! One entry point for the whole pipeline: project texts to K-bit sketches,
//! misspell datasets, run projection-space analyses, and train/evaluate/
//! attack the projection classifier and its word-lookup baseline. Every
//! subcommand is deterministic under `--seed`, and every file artifact gets
//! a `.manifest.json` sufficient to reproduce it.

mod commands;
mod manifest;

use std::process::ExitCode;

use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(
    name = "lshproj",
    version,
    about = "Binary LSH text projections: project, perturb, analyze, train, evaluate, attack"
)]
struct Cli {
    /// Cap worker threads for parallel analyses (default: all cores;
    /// results are independent of thread count).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print hex projections of texts or tokens.
    Project(commands::project::ProjectArgs),
    /// Misspell the text column of a TSV dataset.
    Perturb(commands::perturb::PerturbArgs),
    /// Projection-shift grid over K × perturbation level.
    #[command(visible_alias = "sweep")]
    Analyze(commands::analyze::AnalyzeArgs),
    /// Train a classifier (sgnn or lookup) on a TSV dataset.
    Train(commands::train::TrainArgs),
    /// Accuracy of a saved model on a test TSV.
    Evaluate(commands::evaluate::EvaluateArgs),
    /// Accuracy drop of a saved model under misspelling attacks.
    Attack(commands::attack::AttackArgs),
}

fn run(command: Command) -> anyhow::Result<()> {
    match command {
        Command::Project(args) => commands::project::run(args),
        Command::Perturb(args) => commands::perturb::run(args),
        Command::Analyze(args) => commands::analyze::run(args),
        Command::Train(args) => commands::train::run(args),
        Command::Evaluate(args) => commands::evaluate::run(args),
        Command::Attack(args) => commands::attack::run(args),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(threads) = cli.threads {
        // Ignore the error if a pool already exists (repeat configuration).
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global();
    }
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::FAILURE
        }
    }
}
