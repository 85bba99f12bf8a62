//! `fracoh`: command-line front end for fractal-coherence.
//!
//! Exit codes: 0 success, 1 bad input or usage, 2 a numerical or
//! scientific check failed.

mod args;
mod commands;
mod output;

use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::Parser;

use args::Cli;
use output::{Failure, RunManifest};

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                // Usage errors share code 1 with every other bad input.
                _ => ExitCode::from(1),
            };
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {f}");
            ExitCode::from(f.code)
        }
    }
}

fn run(cli: &Cli) -> Result<(), Failure> {
    let caps = cli.caps.resolve()?;
    let manifest = RunManifest {
        subcommand: cli.command.name(),
        flags: serde_json::to_value(cli)?,
        caps,
        seed: cli.command.seed(),
        version: env!("CARGO_PKG_VERSION"),
        timestamp: chrono::Utc::now().to_rfc3339(),
    };
    commands::dispatch(cli, &caps, &manifest)
}
