use thiserror::Error;

/// Errors raised by the solvers.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid game specification: {0}")]
    InvalidSpec(String),

    #[error("time {t} lies outside [0, {horizon}]")]
    TimeOutOfRange { t: f64, horizon: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// A weight matrix that has to be inverted became singular (or too badly
    /// conditioned) at time `t`.
    #[error("regularity breakdown at t = {t}: {what} has condition estimate {condition:.3e}")]
    RegularityBreakdown {
        t: f64,
        what: &'static str,
        condition: f64,
    },

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("operator precondition violated: {0}")]
    Precondition(String),

    #[error("section not uniformly definite (condition estimate {condition:.3e})")]
    SingularSection { condition: f64 },

    #[error("non-finite value encountered at t = {t} while {stage}")]
    NonFinite { t: f64, stage: &'static str },

    #[error("iterate for eps = {eps} failed: {source}")]
    Iterate {
        eps: f64,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    /// Failures of the numerics (breakdowns, blow-ups) as opposed to bad
    /// input.
    pub fn is_numerical(&self) -> bool {
        match self {
            Error::RegularityBreakdown { .. } | Error::SingularSection { .. } | Error::NonFinite { .. } => true,
            Error::Iterate { source, .. } => source.is_numerical(),
            _ => false,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
