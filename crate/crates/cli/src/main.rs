//! `crl`: sample spaces, compute curvature and spectra, run verification
//! experiments. Exit status 0 on pass, 1 on a failed check, 2 on bad input,
//! 3 on a numerical failure.

mod commands;
mod config;
mod output;

use std::process::ExitCode;

use clap::Parser;

use crate::config::{Cli, RunConfig, UsageError};

fn exit_code(err: &anyhow::Error) -> u8 {
    if err.downcast_ref::<UsageError>().is_some() {
        return 2;
    }
    match err.downcast_ref::<coarse_ricci::Error>() {
        Some(coarse_ricci::Error::SolverStalled { .. } | coarse_ricci::Error::Numeric(_)) => 3,
        _ => 2,
    }
}

fn run(cli: Cli) -> anyhow::Result<bool> {
    let config = RunConfig::resolve(cli.command, cli.flags)?;
    if let Some(workers) = config.workers {
        rayon::ThreadPoolBuilder::new().num_threads(workers).build_global()?;
    }
    let (bytes, passed) = commands::execute(&config)?;
    output::emit(&config, &bytes)?;
    Ok(passed)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code(&err))
        }
    }
}
