use thiserror::Error;

/// Errors raised across the analysis and simulation layers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("bracket [{lo}, {hi}] does not straddle a root (f(lo)={f_lo}, f(hi)={f_hi})")]
    NoSignChange {
        lo: f64,
        hi: f64,
        f_lo: f64,
        f_hi: f64,
    },
    #[error("non-finite value encountered: {0}")]
    NonFinite(String),
    #[error("empty sample")]
    EmptySample,
    #[error("load factor must be positive, got {0}")]
    NonPositiveAlpha(f64),
    #[error("replica state outside the physical region: {0}")]
    InvalidState(String),
    #[error("point with magnitude {magnitude} lies outside the support of radius {radius}")]
    OutOfSupport { magnitude: f64, radius: f64 },
    #[error("fixed-point iteration did not converge after {iterations} iterations (residual {residual:e}, chi={chi}, p={p})")]
    NoConvergence {
        iterations: usize,
        residual: f64,
        chi: f64,
        p: f64,
    },
    #[error("targets not achievable: {0}")]
    NotAchievable(String),
    #[error("linear system is singular: {0}")]
    SingularSystem(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, Error>;
