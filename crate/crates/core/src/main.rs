use std::process::ExitCode;

use clap::Parser;

fn main() -> ExitCode {
    chiralwg::cli::run(&chiralwg::cli::Cli::parse())
}
