use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("argument out of domain: {0}")]
    Domain(String),

    #[error("result overflows f64 (log-magnitude {log_magnitude:.3}); use the log-domain variant")]
    Overflow { log_magnitude: f64 },

    #[error("series did not converge after {terms} terms")]
    NonConvergence { terms: usize },

    #[error("basis has {states} states, above the cap of {cap}")]
    BasisTooLarge { states: usize, cap: usize },

    #[error("no guided root found: {0}")]
    NoRoot(String),

    #[error("quadrature did not reach tolerance: {0}")]
    Quadrature(String),

    #[error("phase matching undefined: {0}")]
    PhaseMatching(String),

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl Error {
    /// Validation problems are the caller's fault; everything else is numerical.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::Domain(_) | Error::Config(_) | Error::Parse(_) | Error::InvalidGrid(_)
        )
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
