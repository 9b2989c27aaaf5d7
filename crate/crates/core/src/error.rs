use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Clone, Error)]
pub enum Error {
    /// Matrix or system dimensions do not match; the message names the
    /// offending block.
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    /// An operation requiring Schur stability was handed a system with
    /// spectral radius at or above the allowed bound.
    #[error("system is not Schur stable (spectral radius {rho})")]
    Unstable { rho: f64 },

    /// The resolvent (e^{jw} I - A) is singular at the requested frequency.
    #[error("singular resolvent at omega = {omega}")]
    SingularResolvent { omega: f64 },

    /// An iterative kernel failed to converge.
    #[error("numerical failure: {0}")]
    Numerical(String),

    /// An optimizer was started at a point with infinite objective value.
    #[error("infeasible start: objective is +inf at x0")]
    InfeasibleStart,

    /// A problem, filter, or point file failed to parse or validate.
    #[error("parse error: {0}")]
    Parse(String),

    /// File I/O failure, with the path for context.
    #[error("io error on {path}: {message}")]
    Io { path: String, message: String },
}

impl Error {
    pub fn dim(msg: impl Into<String>) -> Self {
        Error::Dimension(msg.into())
    }

    pub fn numerical(msg: impl Into<String>) -> Self {
        Error::Numerical(msg.into())
    }

    pub fn parse(msg: impl Into<String>) -> Self {
        Error::Parse(msg.into())
    }
}
