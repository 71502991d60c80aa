//! Error type shared by every numerical stage.

use thiserror::Error;

/// Failure modes of the numerical pipeline.
///
/// The variants are grouped by what the caller can do about them:
/// configuration problems are fixed by changing inputs, numerical and
/// accuracy failures usually by changing grids or tolerances.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum PolaronError {
    /// A configuration value violates its documented constraint.
    #[error("invalid configuration `{field}`: {reason}")]
    Config { field: String, reason: String },

    /// A radial function was passed to an operation defined only for
    /// another angular-momentum sector.
    #[error("sector error: {0}")]
    Sector(String),

    /// An input violates the precondition of an operation.
    #[error("precondition violated: {0}")]
    Precondition(String),

    /// An internal contract (symmetry, ordering, ...) was broken.
    #[error("contract violation: {0}")]
    Contract(String),

    /// An iteration did not converge within its step budget.
    #[error("no convergence after {iterations} iterations: {detail}")]
    Convergence { iterations: usize, detail: String },

    /// A computation produced values that fail a consistency check.
    #[error("numerical error: {0}")]
    Numerical(String),

    /// A requested accuracy target could not be certified.
    #[error("accuracy target not met: {0}")]
    Accuracy(String),

    /// An index or argument lies outside the computed range.
    #[error("out of range: {0}")]
    Range(String),
}

impl PolaronError {
    /// Convenience constructor for configuration errors.
    pub fn config(field: impl Into<String>, reason: impl Into<String>) -> Self {
        PolaronError::Config {
            field: field.into(),
            reason: reason.into(),
        }
    }

    /// True for errors caused by the inputs rather than by the numerics.
    pub fn is_config(&self) -> bool {
        matches!(self, PolaronError::Config { .. } | PolaronError::Range(_))
    }
}

/// Result alias used throughout the crate.
pub type Result<T> = std::result::Result<T, PolaronError>;
