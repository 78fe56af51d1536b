//! `renyi-lab` command-line driver.
//!
//! Exit status: 0 on success, 1 when a suite (or a check) finds violations,
//! 2 on usage, parse or input errors.

mod args;
mod commands;
mod output;

use std::process::ExitCode;

use clap::Parser;

use args::Cli;

/// What a successful command run found.
pub enum Outcome {
    Clean,
    Violations,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match commands::run(cli) {
        Ok(Outcome::Clean) => ExitCode::SUCCESS,
        Ok(Outcome::Violations) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            // A broken internal invariant is a finding, not a usage problem.
            let inconsistent = e
                .downcast_ref::<renyi_lab::LabError>()
                .is_some_and(|l| matches!(l, renyi_lab::LabError::Inconsistent(_)));
            ExitCode::from(if inconsistent { 1 } else { 2 })
        }
    }
}
