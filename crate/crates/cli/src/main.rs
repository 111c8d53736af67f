use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use sirb_cli::commands::{cmd_simulate, cmd_stability, cmd_steady, to_json};
use sirb_cli::scenario::Scenario;
use sirb_cli::sweep::{cmd_sweep, SweepSpec};
use sirb_cli::Result;

/// Simulate and analyze the SIRB reaction-diffusion model.
#[derive(Debug, Parser)]
#[command(name = "sirb", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Integrate a scenario and write trajectory artifacts.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Overrides the seed of a random initial profile.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// List the equilibria of a scenario as JSON.
    Steady {
        #[arg(long)]
        config: PathBuf,
    },
    /// Classify the equilibria of a scenario mode by mode.
    Stability {
        #[arg(long)]
        config: PathBuf,
        /// Number of Neumann modes to check.
        #[arg(long)]
        modes: Option<usize>,
    },
    /// Tabulate existence and stability over a parameter grid.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Worker threads; all cores when absent.
        #[arg(long)]
        jobs: Option<usize>,
        #[arg(long)]
        modes: Option<usize>,
    },
}

fn run(cli: Cli) -> Result<String> {
    match cli.command {
        Command::Simulate { config, out, seed } => {
            let scenario = Scenario::load(&config)?;
            let meta = cmd_simulate(&scenario, &out, seed)?;
            Ok(to_json(&meta))
        }
        Command::Steady { config } => cmd_steady(&Scenario::load(&config)?),
        Command::Stability { config, modes } => cmd_stability(&Scenario::load(&config)?, modes),
        Command::Sweep { config, out, jobs, modes } => {
            let spec = SweepSpec::load(&config)?;
            let meta = cmd_sweep(&spec, &out, jobs, modes)?;
            Ok(to_json(&meta))
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(text) => {
            print!("{text}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
