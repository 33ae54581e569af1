use thiserror::Error;

/// Errors raised by the numerical pipeline and the command-line front end.
#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid input: {0}")]
    Invalid(String),

    #[error("condition (A) failed: {0}")]
    ConditionA(String),

    #[error("condition (B) failed: min |eta_+| = {min_abs:.3e} at x = {argmin:.6}")]
    ConditionB { min_abs: f64, argmin: f64 },

    #[error("condition (D) violated: {0}")]
    ConditionD(String),

    #[error("numerical non-convergence: {0}")]
    NonConvergence(String),

    #[error("configuration error: {}", .0.join("; "))]
    Config(Vec<String>),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Process exit status used by the CLI for this error.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::ConditionB { .. } => 2,
            Error::Config(_) | Error::Invalid(_) => 3,
            Error::NonConvergence(_) | Error::ConditionA(_) | Error::ConditionD(_) => 4,
            Error::Domain(_) => 4,
            Error::Io(_) => 1,
        }
    }
}
