//! `lbcbeam`: codes, beams, syndrome tables and Monte Carlo sweeps.

mod args;
mod commands;
mod error;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Parser, Subcommand};

use crate::args::SimArgs;
use crate::error::CliError;

#[derive(Debug, Parser)]
#[command(
    name = "lbcbeam",
    version,
    about = "Parity-check beam discovery simulator"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Print the code matched to n antennas and L paths.
    Codes {
        #[arg(long)]
        n: usize,
        #[arg(long = "L", visible_alias = "paths")]
        l: usize,
        /// Also write H to this file, one row per line.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write beam weights and sampled patterns.
    Beams {
        #[command(flatten)]
        sim: SimArgs,
        /// Pattern samples over [0, pi].
        #[arg(long, default_value_t = 721)]
        samples: usize,
    },
    /// Build syndrome tables and check that their syndromes are distinct.
    Table {
        #[command(flatten)]
        sim: SimArgs,
    },
    /// Replay one trial and dump every intermediate quantity.
    Simulate {
        #[command(flatten)]
        sim: SimArgs,
        /// Index into the SNR grid.
        #[arg(long, default_value_t = 0)]
        point: usize,
        #[arg(long, default_value_t = 0)]
        trial: usize,
    },
    /// Run the Monte Carlo sweep over the SNR grid.
    Sweep {
        #[command(flatten)]
        sim: SimArgs,
    },
}

fn init_threads(sim: &SimArgs) -> Result<(), CliError> {
    if let Some(n) = sim.threads {
        if n == 0 {
            return Err(CliError::Config("threads: must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Other(e.to_string()))?;
    }
    Ok(())
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Codes { n, l, out } => commands::codes(n, l, out.as_deref()),
        Command::Beams { sim, samples } => {
            init_threads(&sim)?;
            commands::beams(&sim.resolve()?, samples)
        }
        Command::Table { sim } => {
            init_threads(&sim)?;
            commands::table(&sim.resolve()?)
        }
        Command::Simulate { sim, point, trial } => {
            init_threads(&sim)?;
            commands::simulate(&sim.resolve()?, point, trial)
        }
        Command::Sweep { sim } => {
            init_threads(&sim)?;
            commands::sweep(&sim.resolve()?)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(1),
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
