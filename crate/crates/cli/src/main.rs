use std::path::PathBuf;

use anyhow::Result;
use clap::{Args, Parser, Subcommand};

use qwalk_cli::commands;
use qwalk_cli::config::{self, Experiment};

/// Simulate one-dimensional discrete-time quantum walks with two-valued
/// coin sequences and compute their spectral and asymptotic diagnostics.
#[derive(Parser)]
#[command(name = "qwalk", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Probability distributions and spreading moments; optionally a
    /// theta2 sweep over all four deterministic sequences.
    Spread(RunArgs),
    /// Quasi-energy spectrum and density of states of the step operator,
    /// or of the accumulated product for temporal walks.
    Spectrum(RunArgs),
    /// Survival amplitude, Cesàro average, echo Fourier transform, decay
    /// fits, and the spectral-class report.
    Survival(RunArgs),
    /// Diffraction amplitudes of the coin arrangements plus a peak table.
    Diffraction(RunArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Flat key-value config file (unknown keys are errors).
    #[arg(long)]
    config: PathBuf,
    /// Output directory; created if absent.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Ad-hoc config tweaks, repeatable: --override steps=1000
    #[arg(long = "override", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    /// Shorthand for --override seed=<N>.
    #[arg(long)]
    seed: Option<u64>,
    /// Also emit a gnuplot script for the run's data files.
    #[arg(long)]
    gnuplot: bool,
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    let (experiment, args) = match &cli.command {
        Command::Spread(a) => (Experiment::Spread, a),
        Command::Spectrum(a) => (Experiment::Spectrum, a),
        Command::Survival(a) => (Experiment::Survival, a),
        Command::Diffraction(a) => (Experiment::Diffraction, a),
    };
    let cfg = config::load(&args.config, &args.overrides, args.seed, experiment)?;
    commands::run(&cfg, &args.out, args.gnuplot)?;
    Ok(())
}
