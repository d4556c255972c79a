use std::fmt;

use thiserror::Error;

/// Coarse classification used for CLI exit codes and FFI status codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorCategory {
    /// Bad configuration, invalid parameters, failed assumption checks.
    Config,
    /// The discrete problem could not be solved.
    Numerical,
    /// Filesystem or serialization trouble.
    Io,
}

impl ErrorCategory {
    pub fn exit_code(self) -> i32 {
        match self {
            ErrorCategory::Config => 2,
            ErrorCategory::Numerical => 3,
            ErrorCategory::Io => 4,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            ErrorCategory::Config => "config",
            ErrorCategory::Numerical => "numerical",
            ErrorCategory::Io => "io",
        }
    }
}

/// One violated assumption found while validating a problem.
#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub field: String,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.field, self.message)
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid kernel: {0}")]
    InvalidKernel(String),

    #[error("kernel evaluated outside its domain: {0}")]
    Domain(String),

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("length mismatch: expected {expected}, found {found}")]
    LengthMismatch { expected: usize, found: usize },

    #[error("problem validation failed: {}", join_violations(.0))]
    Validation(Vec<Violation>),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("fixed-point iteration did not converge at step {step} after {iterations} iterations (last increment {last_increment:.3e})")]
    NonConvergence {
        step: usize,
        iterations: usize,
        last_increment: f64,
    },

    #[error("banded factorization hit a non-positive pivot {value:.3e} at row {row}")]
    Factorization { row: usize, value: f64 },

    #[error("damping function returned a non-finite value at v = {0}")]
    Damping(f64),

    #[error("step {step} failed: {source}")]
    Step {
        step: usize,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

fn join_violations(v: &[Violation]) -> String {
    v.iter()
        .map(|x| x.to_string())
        .collect::<Vec<_>>()
        .join("; ")
}

impl Error {
    pub fn category(&self) -> ErrorCategory {
        match self {
            Error::InvalidKernel(_)
            | Error::InvalidGrid(_)
            | Error::LengthMismatch { .. }
            | Error::Validation(_)
            | Error::Config(_) => ErrorCategory::Config,
            Error::Domain(_)
            | Error::NonConvergence { .. }
            | Error::Factorization { .. }
            | Error::Damping(_) => ErrorCategory::Numerical,
            Error::Step { source, .. } => source.category(),
            Error::Io(_) => ErrorCategory::Io,
            Error::Json(e) if e.is_io() => ErrorCategory::Io,
            Error::Json(_) => ErrorCategory::Config,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
