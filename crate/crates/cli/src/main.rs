// SPDX-License-Identifier: Apache-2.0

use std::process::ExitCode;

use clap::Parser;
use kerr_wigner_cli::args::Cli;
use kerr_wigner_cli::{exit_code, run, Outcome};

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match cli.command.to_config().and_then(|c| run(&c)) {
        Ok(Outcome::Success) => ExitCode::SUCCESS,
        Ok(Outcome::ChecksFailed) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
