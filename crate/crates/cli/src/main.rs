//! `mfglht` command-line front end.
//!
//! Exit codes: 0 on success (including `--help`/`--version`), 1 on usage
//! errors, 2 on data or numeric errors.

mod args;
mod commands;

use std::process::ExitCode;

use clap::Parser;

use args::{Cli, Command};

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Data(mfglht::Error),
}

impl From<mfglht::Error> for CliError {
    fn from(e: mfglht::Error) -> Self {
        Self::Data(e)
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Test(a) => commands::test(a.merge().map_err(CliError::Usage)?),
        Command::Bootstrap(a) => commands::bootstrap(a.merge().map_err(CliError::Usage)?),
        Command::Reconstruct(a) => commands::reconstruct_cmd(a.merge().map_err(CliError::Usage)?),
        Command::Simulate(a) => commands::simulate(a.merge().map_err(CliError::Usage)?),
        Command::Power(a) => commands::power(a.merge().map_err(CliError::Usage)?),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(CliError::Data(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
