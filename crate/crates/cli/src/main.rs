use std::process::ExitCode;

use beamkit_cli::{run, Cli, EXIT_FAILURE};
use clap::Parser;
use log::{error, info, warn};

fn main() -> ExitCode {
    let cli = Cli::parse();
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();

    // Results must not depend on the thread count, so dense kernels stay
    // sequential and parallelism comes only from ordered rayon maps.
    beamkit_core::faer::set_global_parallelism(beamkit_core::faer::Par::Seq);
    if let Some(n) = cli.command.args().workers {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global() {
            error!("cannot start {n} workers: {e}");
            return ExitCode::from(EXIT_FAILURE as u8);
        }
    }

    match run(&cli.command) {
        Ok(outcome) => {
            if !outcome.skipped.is_empty() {
                warn!("{} design(s) skipped; the WNG floor was not attainable", outcome.skipped.len());
            }
            info!("done: {} file(s) written", outcome.files.len());
            ExitCode::from(outcome.exit_code() as u8)
        }
        Err(e) => {
            error!("{e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
