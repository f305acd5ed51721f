//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// An argument lies outside the mathematical domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// Inconsistent inputs (mismatched grids, empty sample sets, ...).
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// A numerical procedure failed to converge or lost too much accuracy.
    #[error("numerical failure: {0}")]
    Numerical(String),

    /// Configuration file problems (unknown key, unparsable value, ...).
    #[error("config error: {0}")]
    Config(String),

    /// A parameter set violates the admissibility inequalities and the
    /// caller did not ask for the violation to be waived.
    #[error("constraint violation: {0}")]
    Constraint(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    pub fn numerical(msg: impl Into<String>) -> Self {
        Error::Numerical(msg.into())
    }

    /// Process exit code for the CLI: 2 config, 3 numerical, 4 constraint.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::InvalidInput(_) | Error::Domain(_) => 2,
            Error::Numerical(_) | Error::Io(_) => 3,
            Error::Constraint(_) => 4,
        }
    }
}
