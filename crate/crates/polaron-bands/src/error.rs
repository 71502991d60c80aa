//! Errors of the driver and their exit codes.

use std::path::PathBuf;

use polaron_core::PolaronError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    /// Unreadable, malformed or invalid configuration.
    #[error("{0}")]
    Config(String),

    #[error(transparent)]
    Core(#[from] PolaronError),

    /// A cache entry that exists but cannot be trusted.
    #[error("cache error in {}: {reason}", path.display())]
    Cache { path: PathBuf, reason: String },

    #[error("I/O error at {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    /// Checks ran and at least one failed.
    #[error("verification failed: {}", failed.join(", "))]
    Verification { failed: Vec<String> },
}

impl CliError {
    /// 1 verification failure, 2 configuration error, 3 numerical error
    /// (including untrusted caches and I/O failures).
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Verification { .. } => 1,
            CliError::Config(_) => 2,
            CliError::Core(e) if e.is_config() => 2,
            _ => 3,
        }
    }

    /// Short machine-readable category.
    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Verification { .. } => "verification",
            CliError::Config(_) => "config",
            CliError::Core(e) if e.is_config() => "config",
            CliError::Core(_) => "numerical",
            CliError::Cache { .. } => "cache",
            CliError::Io { .. } => "io",
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }
}
