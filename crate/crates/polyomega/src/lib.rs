//! Experiments and file formats on top of [`polyomega_core`]: a flat config
//! format, CSV/JSON reports with provenance headers, parallel window sieving
//! and the `polyomega` command line.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::path::{Path, PathBuf};

pub mod commands;
pub mod config;
pub mod parallel;
pub mod report;

pub use commands::{run, Command, Outcome};
pub use config::ExperimentConfig;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("config: {0}")]
    Config(String),
    #[error("system: {0}")]
    System(String),
    #[error("compute: {0}")]
    Compute(String),
    #[error("io: {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    /// The command ran to completion and wrote its report, but the report
    /// contains a failed check.
    #[error("finding: {0}")]
    Finding(String),
}

impl Error {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        Error::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    pub fn compute(e: impl std::fmt::Display) -> Self {
        Error::Compute(e.to_string())
    }

    /// Process exit status for this error.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Finding(_) => 3,
            _ => 2,
        }
    }

    /// `error: <message>` on one line.
    pub fn one_line(&self) -> String {
        let msg = self.to_string().replace(['\n', '\r'], " ");
        format!("error: {msg}")
    }
}
