//! Command-line front end: `chiralwg <command> --config <file> [--out <file>]
//! [--param key=value ...]`.
//!
//! Exit codes: 0 on success, 1 when a physics check fails, 2 on bad input.

pub mod commands;
pub mod config;
pub mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

pub use commands::{parse_sweep, run_command, Command, CommandError, Report, Sweep};
pub use config::{parse_config, parse_config_str, ConfigError, LayoutConfig, ParsedConfig};
pub use output::{Cell, ResultTable};

#[derive(Debug, Parser)]
#[command(name = "chiralwg", version, about = "Giant atoms chirally coupled to a waveguide")]
pub struct Cli {
    #[arg(value_enum)]
    pub command: Command,
    /// Layout file (JSON). Optional for `verify-tables`.
    #[arg(long, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Write the CSV here instead of standard output.
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
    /// Override a config value, e.g. `phases[1]=pi/2` or `drive.beta_re=0.4`.
    #[arg(long = "param", value_name = "KEY=VALUE")]
    pub params: Vec<String>,
    /// Value to scan in `sweep`, given at most twice.
    #[arg(long = "sweep", value_name = "KEY=START:STOP:N")]
    pub sweeps: Vec<String>,
}

pub fn run(cli: &Cli) -> ExitCode {
    match execute(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

/// Runs the command and writes its table; `Ok(false)` means the table was
/// written but a check failed.
pub fn execute(cli: &Cli) -> Result<bool, CommandError> {
    if cli.config.is_none() && !cli.params.is_empty() {
        return Err(CommandError::Input("--param needs --config".into()));
    }
    if cli.command != Command::Sweep && !cli.sweeps.is_empty() {
        return Err(CommandError::Input("--sweep is only valid with `sweep`".into()));
    }
    let config = cli.config.as_deref().map(|p| parse_config(p, &cli.params)).transpose()?;
    let sweeps = cli.sweeps.iter().map(|s| parse_sweep(s)).collect::<Result<Vec<_>, _>>()?;
    let report = run_command(cli.command, config.as_ref(), &sweeps)?;
    let csv = report.table.to_csv(cli.command.name(), config.as_ref().map(|c| c.hash.as_str()));
    match &cli.out {
        Some(path) => std::fs::write(path, csv)
            .map_err(|e| CommandError::Input(format!("cannot write {}: {e}", path.display())))?,
        None => print!("{csv}"),
    }
    if !report.passed {
        eprintln!("{}: check failed", cli.command.name());
    }
    Ok(report.passed)
}
