//! `backstep` — deterministic experiment harness around the spectral
//! backstepping toolkit.

mod commands;
mod config;
mod csv_out;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use commands::Context;
use csv_out::CsvOptions;

#[derive(Parser)]
#[command(
    name = "backstep",
    about = "Spectra, feedback synthesis, pole checks, simulations and sweeps for skew-adjoint multiplier systems",
    version
)]
struct Cli {
    /// TOML configuration file; defaults apply when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Output directory (overrides the config file).
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Seed override for randomized inputs.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Omit the wall-clock line from CSV headers so outputs are
    /// byte-reproducible.
    #[arg(long, global = true)]
    no_header_timestamp: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Eigenvalues, frequency gaps and multiplier checks.
    Spectrum,
    /// Frame bounds, smoothing diagnostics and resolvent sum tables.
    Riesz,
    /// Solve for the feedback gains and verify the transform identities.
    Feedback,
    /// Compare closed-loop eigenvalues against the shifted spectrum.
    Poleshift,
    /// Propagate a seeded random state through the closed loop.
    Simulate,
    /// Build and verify a minimal-norm open-loop control.
    Control,
    /// Run the decay pipeline across several rates.
    Sweep,
    /// Run the full acceptance suite.
    Acceptance,
}

fn main() -> ExitCode {
    let cli = Cli::parse();

    let text = match &cli.config {
        Some(path) => match std::fs::read_to_string(path) {
            Ok(t) => t,
            Err(e) => {
                eprintln!("backstep: cannot read config {}: {e}", path.display());
                return ExitCode::FAILURE;
            }
        },
        None => String::new(),
    };
    let mut cfg = match config::parse_config(&text) {
        Ok(cfg) => cfg,
        Err(e) => {
            eprintln!("backstep: {e}");
            return ExitCode::FAILURE;
        }
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    let out_dir = cli
        .out
        .clone()
        .unwrap_or_else(|| PathBuf::from(&cfg.output_dir));

    let ctx = Context {
        opts: CsvOptions {
            seed: cfg.seed,
            timestamp: !cli.no_header_timestamp,
        },
        cfg,
        out_dir,
    };
    if let Err(e) = ctx.prepare() {
        eprintln!("backstep: cannot prepare output directory: {e}");
        return ExitCode::FAILURE;
    }

    let (name, outcome) = match cli.command {
        Command::Spectrum => ("spectrum", commands::cmd_spectrum(&ctx)),
        Command::Riesz => ("riesz", commands::cmd_riesz(&ctx)),
        Command::Feedback => ("feedback", commands::cmd_feedback(&ctx)),
        Command::Poleshift => ("poleshift", commands::cmd_poleshift(&ctx)),
        Command::Simulate => ("simulate", commands::cmd_simulate(&ctx)),
        Command::Control => ("control", commands::cmd_control(&ctx)),
        Command::Sweep => ("sweep", commands::cmd_sweep(&ctx)),
        Command::Acceptance => ("acceptance", commands::cmd_acceptance(&ctx)),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("backstep {name}: {e}");
            ExitCode::FAILURE
        }
    }
}
