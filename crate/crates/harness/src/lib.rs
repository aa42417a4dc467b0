//! Seeded ensembles, result files and acceptance checks on top of
//! `sle-core`.

pub mod acceptance;
pub mod config;
pub mod ensemble;
pub mod report;

use std::path::{Path, PathBuf};

#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    #[error("usage: {0}")]
    Usage(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("acceptance failed: {0}")]
    Acceptance(String),
}

impl HarnessError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        Self::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    /// Process exit code: 1 usage, 2 acceptance failure, 3 I/O.
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Usage(_) => 1,
            Self::Acceptance(_) => 2,
            Self::Io { .. } => 3,
        }
    }
}
