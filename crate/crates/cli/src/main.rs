use std::process::ExitCode;

use clap::Parser;
use outerproj_cli::args::Cli;
use outerproj_cli::{commands, exit_code};

fn main() -> ExitCode {
    let cli = Cli::parse();
    match commands::run(cli.command) {
        Ok(_) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code(&err) as u8)
        }
    }
}
