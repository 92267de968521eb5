//! Base families `G(x; theta)`.
//!
//! Parameter vectors are ordered `(shape, scale)` for Weibull and Fréchet,
//! `(a, b)` for beta and `(p)` for Bernoulli. Every derivative method returns
//! components in that same order.
//!
//! The Fréchet family uses `G(x) = exp(-(scale/x)^shape)`, so that
//! `X ~ Frechet(shape, scale)` exactly when `1/X ~ Weibull(shape, 1/scale)`.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::special::{
    beta_pdf, digamma, gamma, inc_beta, inc_beta_inv, inc_beta_partials, inc_beta_second_partials,
    ln_beta, ln_gamma, trigamma,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    Weibull,
    Beta,
    Frechet,
    Bernoulli,
}

impl Family {
    pub fn name(self) -> &'static str {
        match self {
            Family::Weibull => "weibull",
            Family::Beta => "beta",
            Family::Frechet => "frechet",
            Family::Bernoulli => "bernoulli",
        }
    }

    pub fn param_names(self) -> &'static [&'static str] {
        match self {
            Family::Weibull | Family::Frechet => &["alpha", "beta"],
            Family::Beta => &["a", "b"],
            Family::Bernoulli => &["p"],
        }
    }

    pub fn n_params(self) -> usize {
        self.param_names().len()
    }

    pub fn is_discrete(self) -> bool {
        self == Family::Bernoulli
    }
}

impl std::fmt::Display for Family {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Family {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "weibull" => Ok(Family::Weibull),
            "beta" => Ok(Family::Beta),
            "frechet" | "fréchet" => Ok(Family::Frechet),
            "bernoulli" => Ok(Family::Bernoulli),
            other => Err(format!("unknown family '{other}' (expected weibull, beta, frechet or bernoulli)")),
        }
    }
}

/// A validated base distribution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "lowercase")]
pub enum BaseDistribution {
    Weibull { shape: f64, scale: f64 },
    Beta { a: f64, b: f64 },
    Frechet { shape: f64, scale: f64 },
    Bernoulli { p: f64 },
}

fn positive(name: &'static str, value: f64) -> Result<f64> {
    if value > 0.0 && value.is_finite() {
        Ok(value)
    } else {
        Err(Error::Parameter {
            name,
            value,
            reason: "must be a finite positive number",
        })
    }
}

impl BaseDistribution {
    pub fn weibull(shape: f64, scale: f64) -> Result<Self> {
        Ok(BaseDistribution::Weibull {
            shape: positive("alpha", shape)?,
            scale: positive("beta", scale)?,
        })
    }

    pub fn beta(a: f64, b: f64) -> Result<Self> {
        Ok(BaseDistribution::Beta {
            a: positive("a", a)?,
            b: positive("b", b)?,
        })
    }

    pub fn frechet(shape: f64, scale: f64) -> Result<Self> {
        Ok(BaseDistribution::Frechet {
            shape: positive("alpha", shape)?,
            scale: positive("beta", scale)?,
        })
    }

    pub fn bernoulli(p: f64) -> Result<Self> {
        if p > 0.0 && p < 1.0 {
            Ok(BaseDistribution::Bernoulli { p })
        } else {
            Err(Error::Parameter {
                name: "p",
                value: p,
                reason: "must lie strictly inside (0, 1)",
            })
        }
    }

    /// Build from a family tag and a parameter vector in canonical order.
    pub fn from_params(family: Family, theta: &[f64]) -> Result<Self> {
        if theta.len() != family.n_params() {
            return Err(Error::Parameter {
                name: "theta",
                value: theta.len() as f64,
                reason: "wrong number of parameters for this family",
            });
        }
        match family {
            Family::Weibull => Self::weibull(theta[0], theta[1]),
            Family::Beta => Self::beta(theta[0], theta[1]),
            Family::Frechet => Self::frechet(theta[0], theta[1]),
            Family::Bernoulli => Self::bernoulli(theta[0]),
        }
    }

    /// Same family, new parameters.
    pub fn with_params(&self, theta: &[f64]) -> Result<Self> {
        Self::from_params(self.family(), theta)
    }

    pub fn family(&self) -> Family {
        match self {
            BaseDistribution::Weibull { .. } => Family::Weibull,
            BaseDistribution::Beta { .. } => Family::Beta,
            BaseDistribution::Frechet { .. } => Family::Frechet,
            BaseDistribution::Bernoulli { .. } => Family::Bernoulli,
        }
    }

    pub fn params(&self) -> Vec<f64> {
        match *self {
            BaseDistribution::Weibull { shape, scale } | BaseDistribution::Frechet { shape, scale } => {
                vec![shape, scale]
            }
            BaseDistribution::Beta { a, b } => vec![a, b],
            BaseDistribution::Bernoulli { p } => vec![p],
        }
    }

    pub fn n_params(&self) -> usize {
        self.family().n_params()
    }

    pub fn param_names(&self) -> &'static [&'static str] {
        self.family().param_names()
    }

    pub fn is_discrete(&self) -> bool {
        self.family().is_discrete()
    }

    /// Closed hull of the support.
    pub fn support_bounds(&self) -> (f64, f64) {
        match self {
            BaseDistribution::Weibull { .. } | BaseDistribution::Frechet { .. } => (0.0, f64::INFINITY),
            BaseDistribution::Beta { .. } | BaseDistribution::Bernoulli { .. } => (0.0, 1.0),
        }
    }

    /// Whether `x` is a point where the density (or mass) is positive.
    pub fn in_support(&self, x: f64) -> bool {
        match self {
            BaseDistribution::Bernoulli { .. } => x == 0.0 || x == 1.0,
            _ => {
                let (lo, hi) = self.support_bounds();
                x > lo && x < hi
            }
        }
    }

    fn check_support(&self, x: f64) -> Result<()> {
        if self.in_support(x) {
            Ok(())
        } else {
            Err(Error::OutsideSupport {
                x,
                family: self.family().name(),
            })
        }
    }

    fn continuous_only(&self, op: &'static str) -> Result<()> {
        if self.is_discrete() {
            Err(Error::Unsupported {
                op,
                family: self.family().name(),
            })
        } else {
            Ok(())
        }
    }

    pub fn cdf(&self, x: f64) -> f64 {
        if x.is_nan() {
            return f64::NAN;
        }
        match *self {
            BaseDistribution::Weibull { shape, scale } => {
                if x <= 0.0 {
                    0.0
                } else {
                    -(-(x / scale).powf(shape)).exp_m1()
                }
            }
            BaseDistribution::Frechet { shape, scale } => {
                if x <= 0.0 {
                    0.0
                } else {
                    (-(scale / x).powf(shape)).exp()
                }
            }
            BaseDistribution::Beta { a, b } => {
                if x <= 0.0 {
                    0.0
                } else if x >= 1.0 {
                    1.0
                } else {
                    inc_beta(x, a, b)
                }
            }
            BaseDistribution::Bernoulli { p } => {
                if x < 0.0 {
                    0.0
                } else if x < 1.0 {
                    1.0 - p
                } else {
                    1.0
                }
            }
        }
    }

    /// `1 - G(x)`, evaluated without cancellation in the upper tail.
    pub fn sf(&self, x: f64) -> f64 {
        if x.is_nan() {
            return f64::NAN;
        }
        match *self {
            BaseDistribution::Weibull { shape, scale } => {
                if x <= 0.0 {
                    1.0
                } else {
                    (-(x / scale).powf(shape)).exp()
                }
            }
            BaseDistribution::Frechet { shape, scale } => {
                if x <= 0.0 {
                    1.0
                } else {
                    -(-(scale / x).powf(shape)).exp_m1()
                }
            }
            BaseDistribution::Beta { a, b } => {
                if x <= 0.0 {
                    1.0
                } else if x >= 1.0 {
                    0.0
                } else {
                    inc_beta(1.0 - x, b, a)
                }
            }
            BaseDistribution::Bernoulli { .. } => 1.0 - self.cdf(x),
        }
    }

    /// Density; zero off the support. Discrete families are rejected.
    pub fn pdf(&self, x: f64) -> Result<f64> {
        self.continuous_only("pdf")?;
        if !self.in_support(x) {
            return Ok(0.0);
        }
        Ok(match *self {
            BaseDistribution::Beta { a, b } => beta_pdf(x, a, b),
            _ => self.logpdf(x)?.exp(),
        })
    }

    pub fn logpdf(&self, x: f64) -> Result<f64> {
        self.continuous_only("logpdf")?;
        self.check_support(x)?;
        Ok(match *self {
            BaseDistribution::Weibull { shape, scale } => {
                let l = (x / scale).ln();
                shape.ln() - scale.ln() + (shape - 1.0) * l - (shape * l).exp()
            }
            BaseDistribution::Frechet { shape, scale } => {
                let l = (scale / x).ln();
                shape.ln() - x.ln() + shape * l - (shape * l).exp()
            }
            BaseDistribution::Beta { a, b } => {
                (a - 1.0) * x.ln() + (b - 1.0) * (-x).ln_1p() - ln_beta(a, b)
            }
            BaseDistribution::Bernoulli { .. } => unreachable!(),
        })
    }

    /// Probability mass at `x` for the discrete family.
    pub fn pmf(&self, x: f64) -> Result<f64> {
        match *self {
            BaseDistribution::Bernoulli { p } => {
                if x == 0.0 {
                    Ok(1.0 - p)
                } else if x == 1.0 {
                    Ok(p)
                } else {
                    Ok(0.0)
                }
            }
            _ => Err(Error::Unsupported {
                op: "pmf",
                family: self.family().name(),
            }),
        }
    }

    /// Support points of the discrete family, in increasing order.
    pub fn support_points(&self) -> Result<Vec<f64>> {
        match self {
            BaseDistribution::Bernoulli { .. } => Ok(vec![0.0, 1.0]),
            _ => Err(Error::Unsupported {
                op: "support_points",
                family: self.family().name(),
            }),
        }
    }

    /// `G^{-1}(u)`; `u` outside `(0, 1)` maps to the support endpoints.
    pub fn quantile(&self, u: f64) -> f64 {
        if u.is_nan() {
            return f64::NAN;
        }
        let (lo, hi) = self.support_bounds();
        if u <= 0.0 {
            return lo;
        }
        if u >= 1.0 {
            return hi;
        }
        match *self {
            BaseDistribution::Weibull { shape, scale } => scale * (-(-u).ln_1p()).powf(1.0 / shape),
            BaseDistribution::Frechet { shape, scale } => scale * (-u.ln()).powf(-1.0 / shape),
            BaseDistribution::Beta { a, b } => inc_beta_inv(u, a, b),
            BaseDistribution::Bernoulli { p } => {
                if u <= 1.0 - p {
                    0.0
                } else {
                    1.0
                }
            }
        }
    }

    /// `log g(G^{-1}(u))`, in closed form where one exists so that the
    /// endpoint behaviour is exact.
    pub fn logpdf_at_quantile(&self, u: f64) -> Result<f64> {
        self.continuous_only("logpdf_at_quantile")?;
        if !(u > 0.0 && u < 1.0) {
            return Err(Error::OutsideUnitInterval { value: u });
        }
        match *self {
            BaseDistribution::Weibull { shape, scale } => {
                // z = -log(1-u), x = scale z^(1/shape)
                let z = -(-u).ln_1p();
                Ok(shape.ln() - scale.ln() + (1.0 - 1.0 / shape) * z.ln() - z)
            }
            BaseDistribution::Frechet { shape, scale } => {
                // w = -log u, x = scale w^(-1/shape)
                let w = -u.ln();
                Ok(shape.ln() - scale.ln() + (1.0 + 1.0 / shape) * w.ln() - w)
            }
            _ => self.logpdf(self.quantile(u)),
        }
    }

    /// The score `U*(theta; x) = d log g / d theta`.
    pub fn score(&self, x: f64) -> Result<Vec<f64>> {
        self.continuous_only("score")?;
        self.check_support(x)?;
        Ok(match *self {
            BaseDistribution::Weibull { shape: a, scale: b } => {
                let l = (x / b).ln();
                let z = (a * l).exp();
                vec![1.0 / a + l - z * l, (a / b) * (z - 1.0)]
            }
            BaseDistribution::Frechet { shape: a, scale: b } => {
                let l = (b / x).ln();
                let w = (a * l).exp();
                vec![1.0 / a + (1.0 - w) * l, (a / b) * (1.0 - w)]
            }
            BaseDistribution::Beta { a, b } => {
                let s = digamma(a + b);
                vec![x.ln() - digamma(a) + s, (-x).ln_1p() - digamma(b) + s]
            }
            BaseDistribution::Bernoulli { .. } => unreachable!(),
        })
    }

    /// `d U* / d theta^T`, symmetric.
    pub fn score_jacobian(&self, x: f64) -> Result<DMatrix<f64>> {
        self.continuous_only("score_jacobian")?;
        self.check_support(x)?;
        let m = match *self {
            BaseDistribution::Weibull { shape: a, scale: b } => {
                let l = (x / b).ln();
                let z = (a * l).exp();
                let aa = -1.0 / (a * a) - z * l * l;
                let ab = (z - 1.0) / b + (a / b) * z * l;
                let bb = -(a / (b * b)) * (z - 1.0) - a * a * z / (b * b);
                [[aa, ab], [ab, bb]]
            }
            BaseDistribution::Frechet { shape: a, scale: b } => {
                let l = (b / x).ln();
                let w = (a * l).exp();
                let aa = -1.0 / (a * a) - w * l * l;
                let ab = (1.0 - w) / b - (a / b) * w * l;
                let bb = -a * (1.0 - w) / (b * b) - a * a * w / (b * b);
                [[aa, ab], [ab, bb]]
            }
            BaseDistribution::Beta { a, b } => {
                let s = trigamma(a + b);
                [[s - trigamma(a), s], [s, s - trigamma(b)]]
            }
            BaseDistribution::Bernoulli { .. } => unreachable!(),
        };
        Ok(DMatrix::from_fn(2, 2, |i, j| m[i][j]))
    }

    /// `d G(x) / d theta`; zero off the support interior.
    pub fn cdf_gradient(&self, x: f64) -> Result<Vec<f64>> {
        self.continuous_only("cdf_gradient")?;
        if !self.in_support(x) {
            return Ok(vec![0.0; self.n_params()]);
        }
        Ok(match *self {
            BaseDistribution::Weibull { shape: a, scale: b } => {
                let l = (x / b).ln();
                let z = (a * l).exp();
                let e = (-z).exp();
                vec![e * z * l, -e * a * z / b]
            }
            BaseDistribution::Frechet { shape: a, scale: b } => {
                let l = (b / x).ln();
                let w = (a * l).exp();
                let g = (-w).exp();
                vec![-g * w * l, -g * a * w / b]
            }
            BaseDistribution::Beta { a, b } => {
                let (da, db) = inc_beta_partials(x, a, b);
                vec![da, db]
            }
            BaseDistribution::Bernoulli { .. } => unreachable!(),
        })
    }

    /// `d^2 G(x) / d theta d theta^T`.
    pub fn cdf_hessian(&self, x: f64) -> Result<DMatrix<f64>> {
        self.continuous_only("cdf_hessian")?;
        if !self.in_support(x) {
            return Ok(DMatrix::zeros(self.n_params(), self.n_params()));
        }
        let m = match *self {
            BaseDistribution::Weibull { shape: a, scale: b } => {
                // G = 1 - exp(-z): d2G = exp(-z) (d2z - dz dz^T)
                let l = (x / b).ln();
                let z = (a * l).exp();
                let e = (-z).exp();
                let dz = [z * l, -a * z / b];
                let d2z = [
                    [z * l * l, -z / b - (a / b) * z * l],
                    [-z / b - (a / b) * z * l, a * (a + 1.0) * z / (b * b)],
                ];
                let f = |i: usize, j: usize| e * (d2z[i][j] - dz[i] * dz[j]);
                [[f(0, 0), f(0, 1)], [f(1, 0), f(1, 1)]]
            }
            BaseDistribution::Frechet { shape: a, scale: b } => {
                // G = exp(-w): d2G = G (dw dw^T - d2w)
                let l = (b / x).ln();
                let w = (a * l).exp();
                let g = (-w).exp();
                let dw = [w * l, a * w / b];
                let d2w = [
                    [w * l * l, (w / b) * (1.0 + a * l)],
                    [(w / b) * (1.0 + a * l), a * (a - 1.0) * w / (b * b)],
                ];
                let f = |i: usize, j: usize| g * (dw[i] * dw[j] - d2w[i][j]);
                [[f(0, 0), f(0, 1)], [f(1, 0), f(1, 1)]]
            }
            BaseDistribution::Beta { a, b } => inc_beta_second_partials(x, a, b),
            BaseDistribution::Bernoulli { .. } => unreachable!(),
        };
        Ok(DMatrix::from_fn(2, 2, |i, j| m[i][j]))
    }

    /// Raw moment `E[Y^r]` of the base distribution (real `r`).
    pub fn moment(&self, r: f64) -> Result<f64> {
        match *self {
            BaseDistribution::Weibull { shape, scale } => {
                let s = r / shape + 1.0;
                if s <= 0.0 {
                    return Err(Error::NonexistentMoment { order: r, bound: -shape });
                }
                Ok(scale.powf(r) * gamma(s))
            }
            BaseDistribution::Frechet { shape, scale } => {
                let s = 1.0 - r / shape;
                if s <= 0.0 {
                    return Err(Error::NonexistentMoment { order: r, bound: shape });
                }
                Ok(scale.powf(r) * gamma(s))
            }
            BaseDistribution::Beta { a, b } => {
                if r + a <= 0.0 {
                    return Err(Error::NonexistentMoment { order: r, bound: -a });
                }
                Ok((ln_beta(r + a, b) - ln_beta(a, b)).exp())
            }
            BaseDistribution::Bernoulli { p } => Ok(if r == 0.0 { 1.0 } else { p }),
        }
    }

    /// `log E[Y^r]`, for callers that combine moments with large factors.
    pub fn ln_moment(&self, r: f64) -> Result<f64> {
        match *self {
            BaseDistribution::Weibull { shape, scale } => {
                self.moment(r)?;
                Ok(r * scale.ln() + ln_gamma(r / shape + 1.0))
            }
            BaseDistribution::Frechet { shape, scale } => {
                self.moment(r)?;
                Ok(r * scale.ln() + ln_gamma(1.0 - r / shape))
            }
            _ => Ok(self.moment(r)?.ln()),
        }
    }
}

impl std::fmt::Display for BaseDistribution {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            BaseDistribution::Weibull { shape, scale } => write!(f, "Weibull(alpha={shape}, beta={scale})"),
            BaseDistribution::Frechet { shape, scale } => write!(f, "Frechet(alpha={shape}, beta={scale})"),
            BaseDistribution::Beta { a, b } => write!(f, "Beta(a={a}, b={b})"),
            BaseDistribution::Bernoulli { p } => write!(f, "Bernoulli(p={p})"),
        }
    }
}
