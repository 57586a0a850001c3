use std::process::ExitCode;

use clap::Parser;

fn main() -> ExitCode {
    match siot_app::cli::run(siot_app::cli::Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
