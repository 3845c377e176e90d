use thiserror::Error;

/// Errors surfaced by the library.
#[derive(Debug, Error)]
pub enum Error {
    /// A control-effectiveness matrix lost full column rank.
    #[error("matrix is rank deficient (smallest singular value {sigma_min:.3e} <= {tol:.3e})")]
    RankDeficient { sigma_min: f64, tol: f64 },

    /// The derivative buffer does not yet hold a full window of samples.
    #[error("derivative buffer not ready: {have} of {need} samples")]
    BufferNotReady { have: usize, need: usize },

    /// Buffer timestamps deviate from a uniform grid.
    #[error("derivative buffer samples are not uniformly spaced (max deviation {deviation:.3e})")]
    NonuniformSpacing { deviation: f64 },

    /// Riccati iteration failed to converge (non-stabilizable pair or bad data).
    #[error("Riccati solve did not converge after {iterations} iterations (residual {residual:.3e})")]
    NoConvergence { iterations: usize, residual: f64 },

    /// A value-function basis is incompatible with the requested operation.
    #[error("basis mismatch: {0}")]
    BasisMismatch(String),

    /// Invalid configuration.
    #[error("config error: {0}")]
    ConfigError(String),

    /// The closed-loop state became non-finite or left the guard region.
    #[error("numerical divergence at t = {t:.6} ({reason})")]
    NumericalDivergence { t: f64, reason: String },

    /// Metrics requested on an empty trace.
    #[error("trace is empty")]
    EmptyTrace,

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
