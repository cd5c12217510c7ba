//! `csnl`: generate, solve, verify, plot and benchmark localization instances.
//!
//! Exit codes: 0 success, 1 runtime failure, 2 usage error, 3 no interior
//! critical point (or a report that fails verification), 4 iteration budget
//! exhausted.

mod bench;
mod gen;
mod plot;
mod solve;

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use canonical_snl::SnlError;
use clap::{Parser, Subcommand};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{0}")]
    Input(String),
    #[error(transparent)]
    Snl(#[from] SnlError),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_)
            | CliError::Snl(SnlError::InvalidConfig(_) | SnlError::InvalidSolverConfig(_)) => 2,
            _ => 1,
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;

pub fn read_file(path: &Path) -> CliResult<Vec<u8>> {
    std::fs::read(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Writes to `path`, or to stdout when no path is given.
pub fn write_output(path: Option<&Path>, bytes: &[u8]) -> CliResult<()> {
    match path {
        Some(p) => std::fs::write(p, bytes).map_err(|source| CliError::Io {
            path: p.to_path_buf(),
            source,
        }),
        None => std::io::stdout()
            .write_all(bytes)
            .map_err(|source| CliError::Io {
                path: PathBuf::from("<stdout>"),
                source,
            }),
    }
}

#[derive(Parser)]
#[command(
    name = "csnl",
    version,
    about = "Canonical-dual sensor network localization"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a problem instance as JSON.
    Gen(gen::GenArgs),
    /// Solve an instance and write the report as JSON.
    Solve(solve::SolveArgs),
    /// Re-check a report against its instance.
    Verify(solve::VerifyArgs),
    /// Draw true and computed positions as SVG.
    Plot(plot::PlotArgs),
    /// Solve presets over a range of seeds and write a CSV table.
    Bench(bench::BenchArgs),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Gen(args) => gen::run(&args).map(|()| 0),
        Command::Solve(args) => solve::run(&args),
        Command::Verify(args) => solve::run_verify(&args),
        Command::Plot(args) => plot::run(&args).map(|()| 0),
        Command::Bench(args) => bench::run(&args).map(|()| 0),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("csnl: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
