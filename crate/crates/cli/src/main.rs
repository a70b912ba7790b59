use std::io::Write;
use std::process::ExitCode;

use clap::Parser;

mod args;
mod commands;
mod error;

use args::{Cli, Command};
use commands::{Emitted, Status};
use error::CliError;

const EXIT_PARAMETER: u8 = 1;
const EXIT_SUITE_FAILURE: u8 = 2;
const EXIT_NOT_CONVERGED: u8 = 3;

fn run(cli: &Cli) -> Result<Emitted, CliError> {
    match &cli.command {
        Command::MoyalDistance(a) => commands::moyal_distance_cmd(a),
        Command::TorusDistance(a) => commands::torus_distance_cmd(a),
        Command::Probe(a) => commands::probe_cmd(a),
        Command::Verify(a) => commands::verify_cmd(a),
        Command::BallCheck(a) => commands::ball_check_cmd(a),
    }
}

fn write(emitted: &Emitted) -> Result<(), CliError> {
    match &emitted.out {
        Some(path) => std::fs::write(path, &emitted.body)?,
        None => std::io::stdout().lock().write_all(emitted.body.as_bytes())?,
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(EXIT_PARAMETER) } else { ExitCode::SUCCESS };
        }
    };
    let emitted = match run(&cli).and_then(|e| write(&e).map(|_| e)) {
        Ok(e) => e,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_PARAMETER);
        }
    };
    match emitted.status {
        Status::Ok => ExitCode::SUCCESS,
        Status::SuiteFailure => {
            eprintln!("error: one or more suites failed");
            ExitCode::from(EXIT_SUITE_FAILURE)
        }
        Status::NotConverged => {
            eprintln!("warning: the computation did not converge; bounds are still valid");
            ExitCode::from(EXIT_NOT_CONVERGED)
        }
    }
}
