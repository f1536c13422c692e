mod args;
mod commands;
mod output;

use std::path::Path;
use std::process::ExitCode;

use clap::Parser;

use args::{Cli, Command};

/// Failure classes, each with its own exit code.
#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Numerical(String),
    Certification(String),
}

impl CliError {
    fn io(path: &Path, e: std::io::Error) -> Self {
        CliError::Usage(format!("{}: {e}", path.display()))
    }

    fn code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Numerical(_) => 2,
            CliError::Certification(_) => 3,
        }
    }
}

impl From<interfero::Error> for CliError {
    fn from(e: interfero::Error) -> Self {
        match e {
            interfero::Error::Numerical(_) | interfero::Error::NotUnitary { .. } => CliError::Numerical(e.to_string()),
            _ => CliError::Usage(e.to_string()),
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(s) => write!(f, "error: {s}"),
            CliError::Numerical(s) => write!(f, "numerical failure: {s}"),
            CliError::Certification(s) => write!(f, "certification failed: {s}"),
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Hom { grid, out } => commands::hom(&grid.grid, &out),
        Command::DistScan { setup, grid, outputs, out } => commands::dist_scan(&setup, &grid.grid, &outputs, &out),
        Command::Scatter { setup, trials, classes, out } => commands::scatter(&setup, trials, &classes, &out),
        Command::Suppress { permutation, modes, inputs, class, extended, tol_suppression, out } => {
            commands::suppress(&permutation, modes, &inputs, class, extended, tol_suppression, &out)
        }
        Command::Validate { samples, exact, setup, class, count, out } => {
            commands::validate(samples.as_deref(), exact, &setup.into_setup(), class, count, &out)
        }
        Command::Unitary { modes, kind, seed, out } => commands::unitary(modes, kind, seed, out.as_deref()),
        Command::Corr { setup, class, summary, out } => commands::corr(&setup, class, summary, &out),
        Command::Sample { setup, class, count, out } => commands::sample(&setup, class, count, &out),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.code())
        }
    }
}
