use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("domain error in {func}: {detail}")]
    Domain { func: &'static str, detail: String },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("{what} did not converge: {detail}")]
    Convergence { what: &'static str, detail: String },

    #[error("quadrature failure in {what}: relative disagreement {rel_gap:e} between node counts")]
    Quadrature { what: &'static str, rel_gap: f64 },

    #[error("coefficient overflow at k = {k}: |a(k)| = {value:e}")]
    CoefficientOverflow { k: usize, value: f64 },

    #[error("series truncation tail bound {bound:e} exceeds tolerance {tol:e}")]
    Truncation { bound: f64, tol: f64 },

    #[error("overflow: {0}")]
    Overflow(String),

    #[error("grid resolution {dt:e} too coarse, need at most {required:e}")]
    Resolution { dt: f64, required: f64 },

    #[error("ensemble horizon {horizon} shorter than required {required}")]
    Horizon { horizon: f64, required: f64 },

    #[error("cutoff too small: expected {expected:e} jumps exceeds budget {budget:e}")]
    CutoffTooSmall { expected: f64, budget: f64 },

    #[error("non-finite state on path {path} at step {step}")]
    NonFinite { path: usize, step: usize },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn domain(func: &'static str, detail: impl Into<String>) -> Error {
    Error::Domain {
        func,
        detail: detail.into(),
    }
}
