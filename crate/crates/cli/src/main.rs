use std::process::ExitCode;

use clap::Parser;

fn main() -> ExitCode {
    nncalc_cli::run(nncalc_cli::Cli::parse())
}
