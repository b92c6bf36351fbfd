//! Command-line runner for the numerical laboratory: loads a JSON experiment
//! config, executes it, writes CSV/JSON artifacts plus a structured report,
//! and exits 0 exactly when every check passes.

mod config;
mod experiments;
mod report;

use clap::{Args, Parser, Subcommand};
use config::{ExperimentConfig, ExperimentTag};
use experiments::RunContext;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "nlslab",
    about = "Experiments on the mass-critical NLS with an inverse-square potential"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct RunArgs {
    /// JSON experiment configuration
    #[arg(long)]
    config: PathBuf,
    /// Output directory (default: nlslab-out/<experiment>)
    #[arg(long)]
    out: Option<PathBuf>,
    /// Override the config seed
    #[arg(long)]
    seed: Option<u64>,
    /// Concurrency for sweep members
    #[arg(long, default_value_t = 1)]
    threads: usize,
}

#[derive(Subcommand)]
enum Command {
    /// Ground-state certification (optionally with the Hardy probe and the
    /// translated-bump witness)
    GroundState(RunArgs),
    /// Sweep the coupling and aggregate headline metrics
    GnSweep(RunArgs),
    /// Standing-wave conservation run
    Evolve(RunArgs),
    /// Minimal-mass blow-up cross-validation and diagnostics
    MinimalMassBlowup(RunArgs),
    /// Synthetic profile-decomposition suite
    ProfileDemo(RunArgs),
    /// Virial identities on exact blow-up snapshots
    VirialCheck(RunArgs),
}

impl Command {
    fn tag(&self) -> ExperimentTag {
        match self {
            Command::GroundState(_) => ExperimentTag::GroundState,
            Command::GnSweep(_) => ExperimentTag::GnSweep,
            Command::Evolve(_) => ExperimentTag::Evolve,
            Command::MinimalMassBlowup(_) => ExperimentTag::MinimalMassBlowup,
            Command::ProfileDemo(_) => ExperimentTag::ProfileDemo,
            Command::VirialCheck(_) => ExperimentTag::VirialCheck,
        }
    }

    fn args(&self) -> &RunArgs {
        match self {
            Command::GroundState(a)
            | Command::GnSweep(a)
            | Command::Evolve(a)
            | Command::MinimalMassBlowup(a)
            | Command::ProfileDemo(a)
            | Command::VirialCheck(a) => a,
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let tag = cli.command.tag();
    let args = cli.command.args();

    let mut cfg = match ExperimentConfig::load(&args.config) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("config error: {e}");
            return ExitCode::from(2);
        }
    };
    if cfg.experiment != tag {
        eprintln!(
            "config error: experiment: config is for '{}', subcommand expects '{}'",
            cfg.experiment.name(),
            tag.name()
        );
        return ExitCode::from(2);
    }
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    let out_dir = args
        .out
        .clone()
        .unwrap_or_else(|| PathBuf::from("nlslab-out").join(tag.name()));
    let ctx = RunContext {
        out_dir,
        threads: args.threads.max(1),
    };

    match experiments::run(cfg, &ctx) {
        Ok(report) if report.all_passed() => ExitCode::SUCCESS,
        Ok(_) => ExitCode::from(1),
        Err(e) => {
            eprintln!("run error: {e}");
            ExitCode::from(2)
        }
    }
}
