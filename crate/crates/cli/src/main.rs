//! Experiment runner: model loading, audits, exact reversal checks, decay
//! curves, trajectory ensembles, and martingale test reports.
//!
//! Exit codes: 0 when every selected check passes, 1 when a check fails
//! (reports are still written), 2 on configuration errors.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use commands::{run_command, CommandKind, RunConfig};

#[derive(Parser)]
#[command(name = "ipslab", version, about = "Finite-volume interacting-particle-system laboratory")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct CommonArgs {
    /// Model/experiment file (TOML).
    model: PathBuf,
    /// Output directory for reports and CSV artifacts.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Master seed override (simulation commands require a seed here or in
    /// the experiment block).
    #[arg(long)]
    seed: Option<u64>,
    /// Worker-thread cap.
    #[arg(long)]
    threads: Option<usize>,
    /// Enumerated state-space cap override.
    #[arg(long)]
    state_cap: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Rate-family and specification condition reports.
    Audit(CommonArgs),
    /// Stationary measure and DLR check.
    Stationary(CommonArgs),
    /// Reversed rates and the two-route reversal consistency check.
    Reverse(CommonArgs),
    /// Duality bilinear and per-region switching identities.
    Duality(CommonArgs),
    /// Entropy decay curves with dissipation and Poincare bound.
    Decay(CommonArgs),
    /// Trajectory ensembles with law and reversal checks.
    Simulate(CommonArgs),
    /// Trajectorial entropy process, compensator, and martingale tests.
    Trajectorial(CommonArgs),
    /// The full battery.
    All(CommonArgs),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (kind, args) = match &cli.command {
        Command::Audit(a) => (CommandKind::Audit, a),
        Command::Stationary(a) => (CommandKind::Stationary, a),
        Command::Reverse(a) => (CommandKind::Reverse, a),
        Command::Duality(a) => (CommandKind::Duality, a),
        Command::Decay(a) => (CommandKind::Decay, a),
        Command::Simulate(a) => (CommandKind::Simulate, a),
        Command::Trajectorial(a) => (CommandKind::Trajectorial, a),
        Command::All(a) => (CommandKind::All, a),
    };
    if let Some(threads) = args.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
        {
            eprintln!("config error: thread pool: {e}");
            return ExitCode::from(2);
        }
    }
    let config = RunConfig {
        model_path: args.model.clone(),
        out_dir: args.out.clone(),
        seed: args.seed,
        state_cap: args.state_cap,
    };
    match run_command(kind, &config) {
        Ok(outcomes) => {
            let mut failed = 0usize;
            for o in &outcomes {
                let tag = if o.pass { "PASS" } else { "FAIL" };
                println!("{tag} {}: {}", o.name, o.detail);
                if !o.pass {
                    failed += 1;
                }
            }
            if failed == 0 {
                println!("all {} checks passed", outcomes.len());
                ExitCode::SUCCESS
            } else {
                println!("{failed} of {} checks failed", outcomes.len());
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!("config error: {e}");
            ExitCode::from(2)
        }
    }
}
