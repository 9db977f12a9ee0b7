//! Command-line driver for the `ufo-core` library.
//!
//! [`run`] parses arguments, executes one subcommand and reports what it
//! wrote; `main` maps errors to exit codes with [`CliError::exit_code`].

pub mod args;
pub mod commands;
pub mod config;
pub mod manifest;
pub mod output;

use clap::{CommandFactory, FromArgMatches};
use std::ffi::OsString;
use std::path::{Path, PathBuf};

pub use args::Cli;

/// Relative output paths are resolved against this directory when set.
pub const OUTPUT_ROOT_VAR: &str = "UFO_OUTPUT_ROOT";

pub const EXIT_USAGE: i32 = 1;
pub const EXIT_NUMERICAL: i32 = 2;
pub const EXIT_THRESHOLD: i32 = 3;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Clap(#[from] clap::Error),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error(transparent)]
    Core(#[from] ufo_core::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    /// Training stopped on a non-finite loss; the last good state was saved.
    #[error("{0}")]
    Diverged(String),
    #[error("{0}")]
    Threshold(String),
}

impl CliError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Clap(e) if !e.use_stderr() => 0,
            CliError::Core(e) if e.is_numerical() => EXIT_NUMERICAL,
            CliError::Diverged(_) => EXIT_NUMERICAL,
            CliError::Threshold(_) => EXIT_THRESHOLD,
            _ => EXIT_USAGE,
        }
    }
}

/// What a subcommand produced.
#[derive(Clone, Debug, Default)]
pub struct Outcome {
    pub outputs: Vec<PathBuf>,
    /// Lines meant for stdout.
    pub report: Vec<String>,
}

/// Resolves `path` against the output root, if one is configured.
pub fn resolve_output(path: &Path) -> PathBuf {
    match std::env::var_os(OUTPUT_ROOT_VAR) {
        Some(root) if path.is_relative() && !root.is_empty() => Path::new(&root).join(path),
        _ => path.to_path_buf(),
    }
}

const SUBCOMMANDS: &[&str] = &[
    "generate",
    "train",
    "eval",
    "ablate",
    "seeds",
    "resolution",
    "gradcheck",
    "params",
];

/// Parses `args` (program name first) after config-file expansion.
pub fn parse<I, T>(args: I) -> Result<(Cli, Vec<OsString>), CliError>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString>,
{
    let args: Vec<OsString> = args.into_iter().map(Into::into).collect();
    let args = config::expand(args, SUBCOMMANDS)?;
    let matches = Cli::command().try_get_matches_from(&args)?;
    let cli = Cli::from_arg_matches(&matches)?;
    Ok((cli, args))
}

/// Runs one command line to completion.
pub fn run<I, T>(args: I) -> Result<Outcome, CliError>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString>,
{
    let (cli, args) = parse(args)?;
    commands::dispatch(cli, &args)
}

/// Logger writing to stderr at a level picked by `-v`/`-q`.
pub fn init_logging(verbose: u8, quiet: bool) {
    let level = match (quiet, verbose) {
        (true, _) => log::LevelFilter::Warn,
        (false, 0) => log::LevelFilter::Info,
        (false, _) => log::LevelFilter::Debug,
    };
    let _ = env_logger::Builder::new()
        .filter_level(level)
        .format_timestamp_millis()
        .try_init();
}
