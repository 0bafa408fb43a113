use thiserror::Error;

use crate::rare_event::StoppedRun;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("division by zero: {0}")]
    DivisionByZero(String),

    /// Parameter sits exactly on a bifurcation boundary.
    #[error("degenerate parameter: {0}")]
    DegenerateParameter(String),

    #[error("singular tridiagonal system at row {row}")]
    Singular { row: usize },

    /// A run exceeded its step budget before reaching either absorbing set.
    /// The partial run is kept for inspection.
    #[error("run not absorbed after {steps} steps")]
    AbsorbedTimeout { steps: u64, partial: Box<StoppedRun> },

    /// No surviving replica strictly exceeds the killed level.
    #[error("extinction at iteration {iteration}: no replica exceeds level {level}")]
    Extinction { iteration: u64, level: f64 },

    #[error("not converged after {iterations} iterations")]
    NotConverged { iterations: u64 },

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Process exit code used by the command line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::InvalidArgument(_) | Error::DegenerateParameter(_) => 2,
            Error::Extinction { .. } | Error::NotConverged { .. } => 3,
            Error::AbsorbedTimeout { .. } => 4,
            _ => 1,
        }
    }
}
