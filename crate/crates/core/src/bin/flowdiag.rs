// SPDX-License-Identifier: Apache-2.0

//! `flowdiag run|sweep <scenario.json>` and `flowdiag selftest`.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use flowdiag::acceptance;
use flowdiag::scenario::{run_path, Mode};

#[derive(Parser)]
#[command(
    name = "flowdiag",
    version,
    about = "Continuous unitary transformations: flow equations and one-step CUT"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate a scenario whose parameters are all scalars.
    Run { scenario: PathBuf },
    /// Evaluate the Cartesian product of array-valued parameters.
    Sweep { scenario: PathBuf },
    /// Run the built-in acceptance checks and print a pass/fail table.
    Selftest,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (path, mode) = match cli.command {
        Command::Run { scenario } => (scenario, Mode::Run),
        Command::Sweep { scenario } => (scenario, Mode::Sweep),
        Command::Selftest => {
            let outcomes = acceptance::run_all();
            for o in &outcomes {
                println!("{o}");
            }
            return if outcomes.iter().all(|o| o.passed) {
                ExitCode::SUCCESS
            } else {
                ExitCode::FAILURE
            };
        }
    };
    match run_path(&path, mode) {
        Ok(out) => {
            print!("{}", out.report.to_json_string());
            ExitCode::from(out.status().code() as u8)
        }
        Err(e) => {
            eprintln!("{}", e.to_record());
            ExitCode::from(e.status().code() as u8)
        }
    }
}
