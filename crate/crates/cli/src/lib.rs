//! Batch front-end for `beamkit-core`: one TOML config in, CSV files out.
//!
//! Subcommands:
//!
//! - `steering` builds a steering dictionary;
//! - `design` designs robust MVDR weights and scores them;
//! - `compare` diffs two metric sweeps;
//! - `scatterfield` writes the scattered pressure at the mics.

pub mod commands;
pub mod config;
pub mod error;
pub mod formats;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

pub use commands::{cmd_compare, cmd_design, cmd_scatterfield, cmd_steering, ModelHandle, Outcome};
pub use config::RunConfig;
pub use error::{CliError, Result, EXIT_CONFIG, EXIT_FAILURE, EXIT_OK, EXIT_PARTIAL};

#[derive(Debug, Parser)]
#[command(name = "beamkit", version, about = "Beamformer design for arrays on rigid bodies")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build a steering dictionary over the configured grids.
    Steering(RunArgs),
    /// Design robust MVDR weights and write the metric sweep.
    Design(RunArgs),
    /// Compare two metric sweeps row by row.
    Compare(RunArgs),
    /// Write the scattered pressure at each microphone.
    Scatterfield(RunArgs),
}

#[derive(Debug, Clone, Args)]
pub struct RunArgs {
    /// Run configuration (TOML).
    #[arg(long)]
    pub config: PathBuf,
    /// Output directory; overrides `output_dir` in the config.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Worker threads; defaults to the number of cores.
    #[arg(long)]
    pub workers: Option<usize>,
}

impl Command {
    pub fn args(&self) -> &RunArgs {
        match self {
            Command::Steering(a) | Command::Design(a) | Command::Compare(a) | Command::Scatterfield(a) => a,
        }
    }
}

/// Loads the config and runs the command on the current rayon pool.
pub fn run(command: &Command) -> Result<Outcome> {
    let args = command.args();
    let cfg = RunConfig::load(&args.config)?;
    let out = args.out.as_deref();
    match command {
        Command::Steering(_) => cmd_steering(&cfg, out),
        Command::Design(_) => cmd_design(&cfg, out),
        Command::Compare(_) => cmd_compare(&cfg, out),
        Command::Scatterfield(_) => cmd_scatterfield(&cfg, out),
    }
}
