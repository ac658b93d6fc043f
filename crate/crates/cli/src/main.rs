mod candidate;
mod cli;
mod commands;
mod reproduce;
mod report;

use std::process::ExitCode;

use clap::Parser;

/// 0 pass, 1 verification failure, 2 input error, 3 numerical breakdown.
fn exit_code(err: &anyhow::Error) -> u8 {
    match err.downcast_ref::<mflq::Error>() {
        Some(e) if e.is_numerical() => 3,
        _ => 2,
    }
}

fn main() -> ExitCode {
    let args = cli::Cli::parse();
    match commands::run(args.command) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code(&err))
        }
    }
}
