//! Crate-wide error type.

use thiserror::Error;

/// Failure modes surfaced by the library.
///
/// The CLI maps these onto process exit codes: configuration problems exit 2,
/// numerical failures exit 3, verification failures exit 4.
#[derive(Debug, Error)]
pub enum Error {
    /// Invalid user-supplied configuration (bad JSON, unknown names,
    /// out-of-range hyper-parameters, malformed Pauli labels).
    #[error("configuration error: {0}")]
    Config(String),

    /// Mismatched operator or state dimensions.
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    /// Numerical contract violated at runtime (norm drift, non-finite
    /// objective, trace loss in the integrator).
    #[error("numerical failure: {0}")]
    Numerical(String),

    /// A caller used a fast-path routine whose precondition
    /// (a commuting-noise certificate) does not hold.
    #[error("contract violation: {0}")]
    Contract(String),

    /// Shortcut-vs-oracle cross validation failed.
    #[error("verification failure: {0}")]
    Verification(String),

    /// Filesystem or serialization trouble while emitting reports.
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Process exit code the CLI should use for this error.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::Dimension { .. } => 2,
            Error::Numerical(_) | Error::Contract(_) | Error::Io(_) => 3,
            Error::Verification(_) => 4,
        }
    }
}
