//! Configuration-driven experiment runner for the `svelab` library.

pub mod config;
pub mod describe;
pub mod error;
pub mod run;

pub use config::{ExperimentConfig, Kind, Overrides, Params};
pub use error::{CliError, CliResult};

use std::path::{Path, PathBuf};

/// Reads, validates, runs and writes one experiment. Returns the summary
/// table and the written files.
pub fn run_file(path: &Path, ov: &Overrides) -> CliResult<(String, Vec<PathBuf>)> {
    let text = std::fs::read_to_string(path).map_err(|source| CliError::Io { path: path.display().to_string(), source })?;
    let (cfg, params) = ExperimentConfig::parse(&text, ov)?;
    let out = run::execute(&cfg, &params)?;
    let files = run::write_artifacts(Path::new(&cfg.output.dir), &out)?;
    Ok((out.table(), files))
}
