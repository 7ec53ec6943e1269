//! Experiment runner for the embedding simulator: configuration loading,
//! batch execution over algorithms and seeds, CSV output and instance files.

use std::io::Write;
use std::path::{Path, PathBuf};

use lbhga_core::topology::ConfigError;
use thiserror::Error;

pub mod config;
pub mod experiment;
pub mod instance;

pub use config::{Config, Overrides};
pub use experiment::{run_experiment, ExperimentReport, METRICS_HEADER};
pub use instance::Instance;

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Config(ConfigError),
    #[error("{path}: {source}")]
    Instance { path: PathBuf, source: instance::ParseError },
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("writing csv: {0}")]
    Csv(#[from] csv::Error),
}

impl CliError {
    /// 1 for bad input, 2 for failures while running.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Instance { .. } => 1,
            CliError::Io { .. } | CliError::Csv(_) => 2,
        }
    }
}

/// Writes through a temporary file in the same directory, then renames.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    let io = |source| CliError::Io { path: path.to_owned(), source };
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io)?;
    tmp.write_all(bytes).map_err(io)?;
    tmp.persist(path).map_err(|e| io(e.error))?;
    Ok(())
}
