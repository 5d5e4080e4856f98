use std::process::ExitCode;

use clap::Parser;
use usm_cli::{run, Cli};

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("usm: error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
