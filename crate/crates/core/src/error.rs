use thiserror::Error;

use crate::input::ParseError;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter {name} = {value}: {reason}")]
    Parameter {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },

    #[error("value {value} lies outside the unit interval")]
    OutsideUnitInterval { value: f64 },

    #[error("x = {x} is outside the support of the {family} distribution")]
    OutsideSupport { x: f64, family: &'static str },

    #[error("observation {index} ({value}) is outside the support of the {family} distribution")]
    Data {
        index: usize,
        value: f64,
        family: &'static str,
    },

    #[error("no observations")]
    EmptyData,

    #[error("{op} is not available for the {family} distribution")]
    Unsupported { op: &'static str, family: &'static str },

    #[error("hazard is undefined at x = {x}: the survival function vanishes")]
    ZeroSurvival { x: f64 },

    #[error("moment of order {order} does not exist (requires order < {bound})")]
    NonexistentMoment { order: f64, bound: f64 },

    #[error("series did not reach tolerance after {terms} terms (partial value {partial}, achieved {achieved:e})")]
    Truncation {
        terms: usize,
        partial: f64,
        achieved: f64,
    },

    #[error("alternating series is numerically unstable for lambda = {lambda}; use the quadrature route")]
    UnstableSeries { lambda: f64 },

    #[error("power series has a zero leading coefficient")]
    ZeroLeadingCoefficient,

    #[error("quadrature did not converge (value {value}, error estimate {error:e})")]
    Quadrature { value: f64, error: f64 },

    #[error("singular system: {0}")]
    Singular(&'static str),

    #[error("iteration did not converge: {0}")]
    NoConvergence(String),

    #[error("maximum likelihood fit failed from every start (best loglik {loglik}, gradient norm {grad_norm:e})")]
    FitFailed {
        estimates: Vec<f64>,
        loglik: f64,
        grad_norm: f64,
    },

    #[error("invalid hypothesis: {0}")]
    Hypothesis(&'static str),

    #[error(transparent)]
    Parse(#[from] ParseError),
}
