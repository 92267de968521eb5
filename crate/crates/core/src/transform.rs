//! The truncated-exponential transform on `[0, 1]` and the scalar functions
//! of `lambda` that the rest of the crate is built from.
//!
//! Every function here is continuous through `lambda = 0`. Quantities of the
//! form `1 - exp(-lambda)` are 0/0-prone near the origin, so they switch to
//! a Taylor expansion for `|lambda| < SERIES_THRESHOLD`, and the large
//! negative-`lambda` branches are rescaled so nothing overflows.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Below this magnitude, `1 - exp(-lambda)` is evaluated by its Taylor series.
pub const SERIES_THRESHOLD: f64 = 1e-5;

/// Inputs this far outside `[0, 1]` are clamped instead of rejected.
const UNIT_SLACK: f64 = 1e-12;

/// The concentration parameter. Any finite real, zero included.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct Lambda(f64);

impl Lambda {
    pub const ZERO: Lambda = Lambda(0.0);

    pub fn new(value: f64) -> Result<Self> {
        if value.is_finite() {
            Ok(Lambda(value))
        } else {
            Err(Error::Parameter {
                name: "lambda",
                value,
                reason: "must be finite",
            })
        }
    }

    #[inline]
    pub fn get(self) -> f64 {
        self.0
    }

    #[inline]
    pub fn is_zero(self) -> bool {
        self.0 == 0.0
    }
}

impl TryFrom<f64> for Lambda {
    type Error = Error;

    fn try_from(value: f64) -> Result<Self> {
        Lambda::new(value)
    }
}

impl From<Lambda> for f64 {
    fn from(l: Lambda) -> f64 {
        l.0
    }
}

impl std::fmt::Display for Lambda {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        self.0.fmt(f)
    }
}

/// A number in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct UnitValue(f64);

impl UnitValue {
    /// Values within `1e-12` of the interval are clamped onto it; anything
    /// further out (or NaN) is an error.
    pub fn new(value: f64) -> Result<Self> {
        if (0.0..=1.0).contains(&value) {
            Ok(UnitValue(value))
        } else if (-UNIT_SLACK..=1.0 + UNIT_SLACK).contains(&value) {
            Ok(UnitValue(value.clamp(0.0, 1.0)))
        } else {
            Err(Error::OutsideUnitInterval { value })
        }
    }

    #[inline]
    pub fn get(self) -> f64 {
        self.0
    }
}

/// `1 - exp(-t)`, accurate for all finite `t`.
pub fn one_minus_exp_neg(t: f64) -> f64 {
    if t.abs() < SERIES_THRESHOLD {
        // t - t^2/2 + t^3/6 - t^4/24
        t * (1.0 - t * (0.5 - t * (1.0 / 6.0 - t / 24.0)))
    } else {
        -(-t).exp_m1()
    }
}

/// `F_lambda(x) = (1 - e^{-lambda x}) / (1 - e^{-lambda})`, and `x` at `lambda = 0`.
pub fn texp_cdf(lambda: Lambda, x: UnitValue) -> f64 {
    texp_cdf_raw(lambda.get(), x.get())
}

pub(crate) fn texp_cdf_raw(lambda: f64, x: f64) -> f64 {
    if lambda == 0.0 || x == 0.0 || x == 1.0 {
        return x;
    }
    let value = if lambda > -1.0 {
        one_minus_exp_neg(lambda * x) / one_minus_exp_neg(lambda)
    } else {
        // (e^{mx} - 1)/(e^m - 1) = e^{-m(1-x)} (1 - e^{-mx})/(1 - e^{-m}), m = -lambda
        let m = -lambda;
        (-m * (1.0 - x)).exp() * one_minus_exp_neg(m * x) / one_minus_exp_neg(m)
    };
    value.clamp(0.0, 1.0)
}

/// Inverse of [`texp_cdf`].
pub fn texp_quantile(lambda: Lambda, u: UnitValue) -> f64 {
    texp_quantile_raw(lambda.get(), u.get())
}

pub(crate) fn texp_quantile_raw(lambda: f64, u: f64) -> f64 {
    if lambda == 0.0 || u == 0.0 || u == 1.0 {
        return u;
    }
    let x = if lambda > 0.0 {
        // -(1/lambda) log(1 - u (1 - e^{-lambda}))
        let d = one_minus_exp_neg(lambda);
        let ud = u * d;
        let log_arg = if ud < 0.5 {
            (-ud).ln_1p()
        } else {
            ((1.0 - u) + u * (-lambda).exp()).ln()
        };
        -log_arg / lambda
    } else {
        // x = log(1 + u (e^m - 1)) / m with m = -lambda
        let m = -lambda;
        if m < 1.0 {
            let em1 = m.exp_m1();
            (u * em1).ln_1p() / m
        } else {
            1.0 + (u + (1.0 - u) * (-m).exp()).ln() / m
        }
    };
    x.clamp(0.0, 1.0)
}

/// The density prefactor `lambda / (1 - e^{-lambda})`, equal to 1 at `lambda = 0`.
pub fn rate_constant(lambda: Lambda) -> f64 {
    rate_constant_raw(lambda.get())
}

pub(crate) fn rate_constant_raw(lambda: f64) -> f64 {
    if lambda.abs() < SERIES_THRESHOLD {
        // 1 + l/2 + l^2/12 - l^4/720
        let l2 = lambda * lambda;
        1.0 + lambda / 2.0 + l2 / 12.0 - l2 * l2 / 720.0
    } else if lambda > 0.0 {
        lambda / one_minus_exp_neg(lambda)
    } else {
        // |l| / (e^{|l|} - 1) = |l| e^{-|l|} / (1 - e^{-|l|})
        let m = -lambda;
        m * (-m).exp() / one_minus_exp_neg(m)
    }
}

/// `log(lambda / (1 - e^{-lambda}))`, finite for every finite `lambda`.
pub fn log_rate_constant(lambda: f64) -> f64 {
    if lambda.abs() < SERIES_THRESHOLD {
        // l/2 + l^2/24 - l^4/2880
        let l2 = lambda * lambda;
        lambda / 2.0 + l2 / 24.0 - l2 * l2 / 2880.0
    } else if lambda > 0.0 {
        lambda.ln() - one_minus_exp_neg(lambda).ln()
    } else {
        let m = -lambda;
        m.ln() - m - one_minus_exp_neg(m).ln()
    }
}

/// `1/lambda - 1/(e^lambda - 1)`: the mean of `G(X)` under the exp-G law,
/// and the derivative of [`log_rate_constant`]. Equals 1/2 at `lambda = 0`.
pub fn mean_transformed(lambda: f64) -> f64 {
    if lambda.abs() < 1e-2 {
        let l2 = lambda * lambda;
        0.5 - lambda / 12.0 + lambda * l2 / 720.0 - lambda * l2 * l2 / 30240.0
            + lambda * l2 * l2 * l2 / 1_209_600.0
    } else if lambda > 0.0 {
        let e = (-lambda).exp();
        1.0 / lambda - e / (1.0 - e)
    } else {
        1.0 / lambda + 1.0 / (-lambda.exp_m1())
    }
}

/// `1/lambda^2 - e^lambda/(e^lambda - 1)^2`: the per-observation Fisher
/// information for `lambda`. Equals 1/12 at `lambda = 0`.
pub fn lambda_information(lambda: f64) -> f64 {
    if lambda == 0.0 {
        return 1.0 / 12.0;
    }
    if lambda.abs() < 0.05 {
        let l2 = lambda * lambda;
        let l4 = l2 * l2;
        1.0 / 12.0 - l2 / 240.0 + l4 / 6048.0 - 7.0 * l4 * l2 / 1_209_600.0
    } else {
        // e^l/(e^l-1)^2 = e^{-|l|}/(1-e^{-|l|})^2 for either sign
        let m = lambda.abs();
        let e = (-m).exp();
        let d = one_minus_exp_neg(m);
        1.0 / (lambda * lambda) - e / (d * d)
    }
}
