use thiserror::Error;

/// Errors raised by the numerical routines in this crate.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("degenerate growth function: {0}")]
    Degenerate(String),

    #[error("growth condition violated: {0}")]
    GrowthViolation(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("unsupported configuration: {0}")]
    Unsupported(String),

    #[error("structure condition violated: {0}")]
    Structure(String),

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("resolution too coarse: {0}")]
    Resolution(String),

    #[error("bracket exhausted: {0}")]
    BracketExhausted(String),

    #[error("numerical failure: {0}")]
    Numeric(String),

    /// The minimizer hit its iteration cap; carries the last iterate's report.
    #[error("minimizer did not converge after {} iterations (gradient norm {:.3e})", .0.iterations, .0.gradient_norm)]
    NotConverged(Box<crate::solve::SolveReport>),

    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
