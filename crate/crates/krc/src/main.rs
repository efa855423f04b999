use std::process::ExitCode;

use clap::Parser;
use krc::cli::{dispatch, Cli};

fn main() -> ExitCode {
    match dispatch(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("krc: {e}");
            ExitCode::FAILURE
        }
    }
}
