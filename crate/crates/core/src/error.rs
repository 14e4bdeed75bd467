use thiserror::Error;

/// Errors produced by evaluation, certification and the oracles.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("{name} = {value} must be finite")]
    NonFinite { name: &'static str, value: f64 },

    #[error("exponent {name} = {value} must exceed -1")]
    ExponentOutOfRange { name: &'static str, value: f64 },

    #[error("x = {0} is an endpoint of [-1, 1]; the expansions are undefined there")]
    Endpoint(f64),

    #[error("gamma = {gamma} outside the {region} range {range}")]
    GammaOutOfRange {
        gamma: f64,
        region: &'static str,
        range: &'static str,
    },

    #[error("hypotheses violated: {0}")]
    Hypothesis(String),

    #[error("coefficient pole: t = {re}{im:+}i lies in {{-1, 0, 1}}")]
    Pole { re: f64, im: f64 },

    #[error("reduction depth {depth} exceeds the limit of {limit}")]
    ReductionTooDeep { depth: usize, limit: usize },

    #[error("degree {n} exceeds the rational oracle cap of {cap}")]
    DegreeCap { n: usize, cap: usize },

    #[error("truncation order p must be at least 1")]
    ZeroOrder,

    #[error("invalid grid point {index}: {reason}")]
    InvalidGrid { index: usize, reason: String },

    #[error("ill-conditioned fit for A_{j}: {reason} (residual rms {residual:.3e})")]
    IllConditionedFit {
        j: usize,
        reason: String,
        residual: f64,
    },

    #[error("slope needs at least 4 usable points, got {0}")]
    TooFewPoints(usize),

    #[error("A_p is negligible (|A_p| = {0:.3e}); slope skipped")]
    DegenerateCoefficient(f64),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn finite(name: &'static str, value: f64) -> Result<f64> {
    if value.is_finite() {
        Ok(value)
    } else {
        Err(Error::NonFinite { name, value })
    }
}
