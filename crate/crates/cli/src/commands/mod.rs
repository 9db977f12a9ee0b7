mod generate;
mod study;
mod train;

use crate::args::{Cli, Command};
use crate::{resolve_output, CliError, Outcome};
use std::ffi::OsString;
use std::path::{Path, PathBuf};

pub use generate::dataset_spec;
pub use train::train_config;

pub fn dispatch(cli: Cli, args: &[OsString]) -> Result<Outcome, CliError> {
    match cli.command {
        Command::Generate(a) => generate::run(&a, args),
        Command::Train(a) => train::run_train(&a, args),
        Command::Eval(a) => train::run_eval(&a, args),
        Command::Ablate(a) => train::run_ablate(&a, args),
        Command::Seeds(a) => train::run_seeds(&a, args),
        Command::Resolution(a) => study::run_resolution(&a, args),
        Command::Gradcheck(a) => study::run_gradcheck(&a),
        Command::Params(a) => study::run_params(&a, args),
    }
}

/// Input files: taken as given, or under the output root when a relative
/// path only exists there.
fn resolve_input(path: &Path) -> Result<PathBuf, CliError> {
    if path.exists() {
        return Ok(path.to_path_buf());
    }
    let rooted = resolve_output(path);
    if rooted.exists() {
        return Ok(rooted);
    }
    Err(CliError::Usage(format!("{}: no such file", path.display())))
}

fn create_dir(dir: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))
}
