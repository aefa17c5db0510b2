//! Command-line front end: Drazin inverses of matrix files, instance
//! generation, single identity checks and audit suites.

mod args;
mod check;
mod compute;
mod error;
mod generate;
mod params;
mod suite;

use std::process::ExitCode;

use clap::Parser;

use args::{Cli, Command};
use error::EXIT_PARSE;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_PARSE } else { 0 });
        }
    };
    let result = match &cli.command {
        Command::Compute(a) => compute::run(a),
        Command::Generate(a) => generate::run(a),
        Command::Check(a) => check::run(a),
        Command::Suite(a) => suite::run(a),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code)
        }
    }
}
