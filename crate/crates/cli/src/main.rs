//! Bad band detection for hyperspectral cubes: detect, sensitivity,
//! simulate and inspect subcommands over ENVI files.
//!
//! Exit codes: 0 success, 2 input or configuration error, 3 numeric
//! failure inside the solver.

mod args;
mod commands;
mod pgm;
mod plot;
mod report;

use std::process::ExitCode;

use clap::Parser;

use crate::args::{Cli, Command};

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(threads) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
        {
            eprintln!("error: cannot set up a {threads}-thread pool: {e}");
            return ExitCode::from(2);
        }
    }
    let result = match &cli.command {
        Command::Detect(a) => commands::cmd_detect(a),
        Command::Sensitivity(a) => commands::cmd_sensitivity(a),
        Command::Simulate(a) => commands::cmd_simulate(a),
        Command::Inspect(a) => commands::cmd_inspect(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_numeric() { 3 } else { 2 })
        }
    }
}
