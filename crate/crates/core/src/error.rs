use thiserror::Error;

/// Errors raised by the numerical routines in this crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("argument outside the domain: {0}")]
    InvalidDomain(String),

    /// Evaluation at `t = 0, x = 0`, where the law is a unit point mass.
    #[error("point mass at the origin at t = 0")]
    Atom,

    #[error("series did not converge within {max_terms} terms (tail bound {tail:e})")]
    NoConvergence { max_terms: usize, tail: f64 },

    #[error("tolerance {tol:e} not met (error estimate {estimate:e})")]
    ToleranceNotMet { tol: f64, estimate: f64 },

    #[error("renewal step unstable: m({t}) = {value:e} is negative")]
    UnstableStep { t: f64, value: f64 },

    #[error("renewal horizon {horizon} shorter than requested time {requested}")]
    HorizonTooShort { horizon: f64, requested: f64 },

    #[error("degenerate sample: {0}")]
    DegenerateSample(String),

    #[error("Wasserstein integral unbounded: {0}")]
    UnboundedIntegral(String),
}

pub type Result<T> = std::result::Result<T, Error>;
