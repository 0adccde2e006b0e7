//! Batch driver for reproducing-kernel campaigns on the upper half-plane.
//!
//! Every subcommand reads one TOML experiment configuration, runs its
//! campaign, and writes a manifest, a CSV table, and a human summary into
//! the output directory. Runs are deterministic: repeating a command with
//! the same config and seed reproduces every output byte except the
//! timestamp line of the manifest.
//!
//! Exit status: 0 success, 2 malformed configuration, 3 numerical failure,
//! 4 completed run with property violations (reports are still written).

mod commands;
mod config;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crate::commands::RunContext;
use crate::report::RunDir;

/// Run-level failure taxonomy mapped onto the process exit status.
pub enum CliError {
    /// Malformed or inconsistent configuration; nothing was computed.
    Config(String),
    /// The campaign started but a numerical routine failed.
    Numerical(String),
    /// The campaign finished and its reports are on disk, but a checked
    /// property was violated.
    Findings(String),
}

#[derive(Parser)]
#[command(
    name = "hbspace",
    version,
    about = "Numerical campaigns for de Branges-Rovnyak spaces on the half-plane"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct RunArgs {
    /// Experiment configuration (TOML)
    #[arg(long)]
    config: PathBuf,
    /// Output directory for the manifest and reports
    #[arg(long, default_value = "hbspace-out")]
    out: PathBuf,
    /// Worker threads (default: all cores)
    #[arg(long)]
    threads: Option<usize>,
    /// Overrides the seed from the configuration
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate the symbol and its derivative jet on a point list
    Eval(RunArgs),
    /// Sweep the derivative weight over a point list
    WeightSweep(RunArgs),
    /// Weighted Bernstein inequality over a random kernel family
    Bernstein(RunArgs),
    /// Carleson embedding tests for a discrete measure
    Embed(RunArgs),
    /// Sublevel-set distances and boundary spectrum report
    Levelset(RunArgs),
    /// Riesz system stability under node perturbations
    Riesz(RunArgs),
}

impl Command {
    fn unpack(&self) -> (&'static str, &RunArgs) {
        match self {
            Command::Eval(a) => ("eval", a),
            Command::WeightSweep(a) => ("weight-sweep", a),
            Command::Bernstein(a) => ("bernstein", a),
            Command::Embed(a) => ("embed", a),
            Command::Levelset(a) => ("levelset", a),
            Command::Riesz(a) => ("riesz", a),
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (name, args) = cli.command.unpack();
    match run(name, args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Config(msg)) => {
            eprintln!("config error: {msg}");
            ExitCode::from(2)
        }
        Err(CliError::Numerical(msg)) => {
            eprintln!("numerical failure: {msg}");
            ExitCode::from(3)
        }
        Err(CliError::Findings(msg)) => {
            eprintln!("findings: {msg}");
            ExitCode::from(4)
        }
    }
}

fn run(name: &'static str, args: &RunArgs) -> Result<(), CliError> {
    if let Some(threads) = args.threads {
        // Ignore the error from a second initialization; the pool is global.
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global();
    }
    let text = std::fs::read_to_string(&args.config).map_err(|e| {
        CliError::Config(format!("cannot read {}: {e}", args.config.display()))
    })?;
    let cfg = config::parse(&text).map_err(CliError::Config)?;
    let symbol = config::build_symbol(&cfg.symbol).map_err(CliError::Config)?;
    let spec = config::build_spec(&cfg.quadrature).map_err(CliError::Config)?;
    let seed = args.seed.or(cfg.seed).unwrap_or(0);
    let out = RunDir::create(&args.out).map_err(CliError::Config)?;
    let ctx = RunContext {
        command: name,
        config: &cfg,
        config_text: &text,
        symbol,
        spec,
        seed,
        out,
    };
    match name {
        "eval" => commands::eval(&ctx),
        "weight-sweep" => commands::weight_sweep(&ctx),
        "bernstein" => commands::bernstein(&ctx),
        "embed" => commands::embed(&ctx),
        "levelset" => commands::levelset(&ctx),
        "riesz" => commands::riesz(&ctx),
        _ => unreachable!("subcommand dispatch covers every variant"),
    }
}
