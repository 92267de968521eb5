//! `expg`: command-line front end for the exp-G library.
//!
//! Exit codes: 0 on success, 1 for input errors (bad flags, unreadable or
//! malformed data), 2 when the computation itself fails.

mod args;
mod commands;

use std::io::Write;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::Parser;

use args::{Cli, Command};
use commands::Failure;

fn run(cli: &Cli) -> Result<String, Failure> {
    match &cli.command {
        Command::Fit(a) => commands::cmd_fit(a),
        Command::Test(a) => commands::cmd_test(a),
        Command::Moments(a) => commands::cmd_moments(a),
        Command::Entropy(a) => commands::cmd_entropy(a),
        Command::Sample(a) => commands::cmd_sample(a),
        Command::Curves(a) => commands::cmd_curves(a),
        Command::Demo(a) => commands::cmd_demo(a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(1),
            };
        }
    };
    match run(&cli) {
        Ok(out) => {
            // A closed pipe (e.g. `| head`) is not an error worth reporting.
            let _ = std::io::stdout().lock().write_all(out.as_bytes());
            ExitCode::SUCCESS
        }
        Err(f) => {
            eprintln!("error: {}", f.message());
            ExitCode::from(f.exit_code() as u8)
        }
    }
}
