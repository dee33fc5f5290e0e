use thiserror::Error;

/// Result alias used throughout the crate.
pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Diagnostics recorded by the maximum-likelihood fit.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Convergence {
    pub iterations: usize,
    pub gradient_norm: f64,
    pub neg_log_likelihood: f64,
    pub converged: bool,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("no sign change on bracket [{lo}, {hi}] (f(lo) = {f_lo}, f(hi) = {f_hi})")]
    Bracket { lo: f64, hi: f64, f_lo: f64, f_hi: f64 },

    #[error("root finder did not converge within {iterations} iterations")]
    RootConvergence { iterations: usize },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("overflow: {0}")]
    Overflow(String),

    #[error("fit did not converge after {} iterations (gradient norm {:.3e}, nll {:.6})", .0.iterations, .0.gradient_norm, .0.neg_log_likelihood)]
    Fit(Convergence),

    #[error("design matrix is rank deficient: {0}")]
    Rank(String),

    #[error("{0}")]
    Config(String),

    #[error("parse error at row {row}: {message}")]
    Parse { row: usize, message: String },

    #[error("schema error: {0}")]
    Schema(String),

    #[error("too many failed fits: {failures} of {total}")]
    TooManyFailures { failures: usize, total: usize },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    /// True for errors raised by numerical routines rather than input handling.
    pub fn is_numeric(&self) -> bool {
        matches!(
            self,
            Error::Domain(_)
                | Error::Bracket { .. }
                | Error::RootConvergence { .. }
                | Error::Overflow(_)
        )
    }

    pub fn is_fit_failure(&self) -> bool {
        matches!(self, Error::Fit(_) | Error::Rank(_) | Error::TooManyFailures { .. })
    }
}
