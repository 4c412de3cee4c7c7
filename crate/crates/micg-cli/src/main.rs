//! `micg`: multidimensional child-growth index toolkit.
//!
//! Subcommand per pipeline stage, files as the interchange. Every output
//! starts with a comment header carrying the tool version, a digest of
//! the run configuration, and the seed, so identical invocations can be
//! checked byte for byte.

mod commands;
mod pipeline;
mod run;

use std::process::ExitCode;

use clap::{Parser, Subcommand};

use commands::{chart, code, frontier, index, regress, robustness, simulate};

#[derive(Parser)]
#[command(
    name = "micg",
    version,
    about = "Multidimensional child-growth index toolkit"
)]
struct Cli {
    /// Seed for every stochastic stage.
    #[arg(long, env = "MICG_SEED", default_value_t = 0, global = true)]
    seed: u64,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Code raw child records into a deprivation matrix.
    Code(code::CodeArgs),
    /// Score children: deprivation, achievement, and summary tables.
    Index(index::IndexArgs),
    /// Compare weighting schemes by rank concordance and score density.
    Robustness(robustness::RobustnessArgs),
    /// Fit the achievement frontier and rank opportunity.
    Frontier(frontier::FrontierArgs),
    /// Regress achievement on covariates, mean and quantile.
    Regress(regress::RegressArgs),
    /// Render SVG figures from pipeline outputs.
    #[command(subcommand)]
    Chart(chart::ChartCmd),
    /// Generate synthetic data and integrate model trajectories.
    #[command(subcommand)]
    Simulate(simulate::SimulateCmd),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Code(args) => code::run(args, cli.seed),
        Command::Index(args) => index::run(args, cli.seed),
        Command::Robustness(args) => robustness::run(args, cli.seed),
        Command::Frontier(args) => frontier::run(args, cli.seed),
        Command::Regress(args) => regress::run(args, cli.seed),
        Command::Chart(cmd) => chart::run(cmd, cli.seed),
        Command::Simulate(cmd) => simulate::run(cmd, cli.seed),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(err.code())
        }
    }
}
