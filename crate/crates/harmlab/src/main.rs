use clap::{Parser, Subcommand};
use harmlab::cli::{self, RunFlags};
use std::path::PathBuf;
use std::process::ExitCode;

/// Numerical laboratory for uniform approximation by harmonic polynomials
/// on sampled compact sets.
#[derive(Parser)]
#[command(name = "harmlab", version, about)]
struct Args {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, clap::Args)]
struct CommonArgs {
    /// Scenario configuration (JSON).
    #[arg(long)]
    config: PathBuf,
    /// Output directory for artifacts.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Double resolutions for oracle runs.
    #[arg(long)]
    refine: bool,
    /// Override the scenario seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Write SVG plots ("on"/"off"; default from the scenario).
    #[arg(long, value_parser = parse_on_off)]
    svg: Option<bool>,
}

fn parse_on_off(s: &str) -> Result<bool, String> {
    match s {
        "on" => Ok(true),
        "off" => Ok(false),
        other => Err(format!("expected 'on' or 'off', got '{other}'")),
    }
}

#[derive(Subcommand)]
enum Command {
    /// Least deviations and rate classification.
    Approx(CommonArgs),
    /// Condenser extremal field and null-mass evidence.
    Chi(CommonArgs),
    /// Bernstein-ratio regularity profile.
    Regularity(CommonArgs),
    /// Two-constants inequality verification.
    TwoConstants(CommonArgs),
    /// Full uniqueness estimate chain.
    Uniqueness(CommonArgs),
}

fn main() -> ExitCode {
    let args = Args::parse();
    let (runner, common): (fn(&_, &_, &_) -> _, &CommonArgs) = match &args.command {
        Command::Approx(c) => (cli::cmd_approx, c),
        Command::Chi(c) => (cli::cmd_chi, c),
        Command::Regularity(c) => (cli::cmd_regularity, c),
        Command::TwoConstants(c) => (cli::cmd_two_constants, c),
        Command::Uniqueness(c) => (cli::cmd_uniqueness, c),
    };
    let flags = RunFlags { refine: common.refine, seed: common.seed, svg: common.svg };
    match runner(&common.config, &common.out, &flags) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("harmlab: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
