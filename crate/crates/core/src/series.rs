//! Power series `sum_k a_k x^(k + c)` and the two operations the moment
//! expansions need: raising a series to an integer power, and the series of
//! the beta cdf.

use dashu_float::round::mode::HalfEven;
use dashu_float::FBig;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::special::{inc_beta, ln_beta};

/// When to stop summing an infinite series.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TruncationPolicy {
    pub rel_tol: f64,
    pub max_terms: usize,
}

impl Default for TruncationPolicy {
    fn default() -> Self {
        TruncationPolicy {
            rel_tol: 1e-12,
            max_terms: 500,
        }
    }
}

impl TruncationPolicy {
    pub fn new(rel_tol: f64, max_terms: usize) -> Result<Self> {
        if !(rel_tol > 0.0 && rel_tol.is_finite()) {
            return Err(Error::Parameter {
                name: "rel_tol",
                value: rel_tol,
                reason: "must be a finite positive number",
            });
        }
        if max_terms == 0 {
            return Err(Error::Parameter {
                name: "max_terms",
                value: 0.0,
                reason: "must be at least 1",
            });
        }
        Ok(TruncationPolicy { rel_tol, max_terms })
    }
}

/// `sum_{k<K} a_k x^(k + c)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerSeries {
    coeffs: Vec<f64>,
    offset: f64,
}

impl PowerSeries {
    pub fn new(coeffs: Vec<f64>, offset: f64) -> Result<Self> {
        if coeffs.is_empty() {
            return Err(Error::Parameter {
                name: "K",
                value: 0.0,
                reason: "a series needs at least one coefficient",
            });
        }
        if let Some(bad) = coeffs.iter().find(|c| !c.is_finite()) {
            return Err(Error::Parameter {
                name: "a_k",
                value: *bad,
                reason: "coefficients must be finite",
            });
        }
        if !offset.is_finite() {
            return Err(Error::Parameter {
                name: "c",
                value: offset,
                reason: "offset must be finite",
            });
        }
        Ok(PowerSeries { coeffs, offset })
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn offset(&self) -> f64 {
        self.offset
    }

    /// Truncation order `K` (number of stored coefficients).
    pub fn order(&self) -> usize {
        self.coeffs.len()
    }

    /// Index of the last nonzero coefficient, if any.
    pub fn degree(&self) -> Option<usize> {
        self.coeffs.iter().rposition(|&c| c != 0.0)
    }

    pub fn eval(&self, x: f64) -> f64 {
        let poly = self.coeffs.iter().rev().fold(0.0, |acc, &a| acc * x + a);
        if self.offset == 0.0 {
            poly
        } else {
            poly * x.powf(self.offset)
        }
    }
}

/// Coefficients of `(sum_k a_k x^k)^n` up to the same order `K`, with offset
/// `n c`, from `c_{n,0} = a_0^n` and
/// `c_{n,m} = (m a_0)^{-1} sum_{k=1}^m (n k - m + k) a_k c_{n,m-k}`.
///
/// Every step divides by `a_0`, so rounding error grows like the same
/// recurrence run on `|a_k|`; keep `|a_0|` from being small against the
/// later coefficients (rescale `x` if needed).
pub fn power_coeffs(s: &PowerSeries, n: u32) -> Result<PowerSeries> {
    let a = s.coeffs();
    if a[0] == 0.0 {
        return Err(Error::ZeroLeadingCoefficient);
    }
    let k_max = a.len();
    let nf = f64::from(n);
    let mut c = Vec::with_capacity(k_max);
    c.push(a[0].powi(n as i32));
    for m in 1..k_max {
        let mf = m as f64;
        let sum: f64 = (1..=m).map(|k| ((nf + 1.0) * k as f64 - mf) * a[k] * c[m - k]).sum();
        c.push(sum / (mf * a[0]));
    }
    PowerSeries::new(c, nf * s.offset())
}

/// Reported when a truncated series has not reached its tolerance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TruncationWarning {
    pub terms: usize,
    pub tail_bound: f64,
    pub rel_tol: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BetaCdfSeries {
    pub series: PowerSeries,
    pub warning: Option<TruncationWarning>,
}

/// Where the beta cdf series is certified.
const BETA_SERIES_CHECK_X: f64 = 0.9;

/// `I_x(a, b) = sum_k a_k x^(k+a)` with
/// `a_k = (-1)^k Gamma(a+b) / (Gamma(a) Gamma(b-k) k! (a+k))`, `K` terms.
///
/// For integer `b` the coefficients vanish from `k = b` on and the series is
/// exact. Otherwise the tail on `[0, 0.9]` is bounded and a warning is
/// attached when it exceeds the default relative tolerance.
pub fn beta_series_coeffs(a: f64, b: f64, k: usize) -> Result<BetaCdfSeries> {
    for (name, v) in [("a", a), ("b", b)] {
        if !(v > 0.0 && v.is_finite()) {
            return Err(Error::Parameter {
                name,
                value: v,
                reason: "must be a finite positive number",
            });
        }
    }
    if k == 0 {
        return Err(Error::Parameter {
            name: "K",
            value: 0.0,
            reason: "truncation order must be at least 1",
        });
    }
    let inv_b = (-ln_beta(a, b)).exp();
    let d = binomial_factors(b, k + 1);
    let coeffs: Vec<f64> = (0..k).map(|i| d[i] / (a + i as f64) * inv_b).collect();

    let tol = TruncationPolicy::default().rel_tol;
    let x = BETA_SERIES_CHECK_X;
    // |a_{k+1}/a_k| <= 1 once 2k >= b, so the tail is at most a geometric series in x
    let next = d[k] / (a + k as f64) * inv_b;
    let tail_bound = if next == 0.0 {
        0.0
    } else if 2.0 * k as f64 >= b {
        next.abs() * x.powf(k as f64 + a) / (1.0 - x)
    } else {
        f64::INFINITY
    };
    let warning = (tail_bound > tol * inc_beta(x, a, b)).then_some(TruncationWarning {
        terms: k,
        tail_bound,
        rel_tol: tol,
    });
    Ok(BetaCdfSeries {
        series: PowerSeries::new(coeffs, a)?,
        warning,
    })
}

/// `d_k = (-1)^k binom(b-1, k)`, by `d_k = d_{k-1} (k - b) / k`.
fn binomial_factors(b: f64, n: usize) -> Vec<f64> {
    let mut d = Vec::with_capacity(n);
    d.push(1.0);
    for k in 1..n {
        let kf = k as f64;
        d.push(d[k - 1] * (kf - b) / kf);
    }
    d
}

/// Extended-precision arithmetic for the expansions whose terms cancel.
pub(crate) mod hp {
    use super::*;

    pub type Big = FBig<HalfEven, 2>;

    pub fn big(x: f64, bits: usize) -> Big {
        Big::try_from(x)
            .expect("finite input")
            .with_precision(bits)
            .value()
    }

    pub fn to_f64(x: &Big) -> f64 {
        x.to_f64().value()
    }

    /// `d_k / (a + k)` for `k < n`, the beta cdf coefficients without the
    /// `1/B(a, b)` factor.
    pub fn beta_coeffs_unscaled(a: f64, b: f64, n: usize, bits: usize) -> Vec<Big> {
        let a = big(a, bits);
        let b = big(b, bits);
        let mut out = Vec::with_capacity(n);
        let mut d = big(1.0, bits);
        for k in 0..n {
            if k > 0 {
                let kb = big(k as f64, bits);
                d = &d * (&kb - &b) / &kb;
            }
            out.push(&d / (&a + big(k as f64, bits)));
        }
        out
    }

    /// The same recurrence as `power_coeffs`, on extended-precision values.
    /// `a` may be shorter than `k_max`; missing coefficients are zero.
    pub fn power_coeffs(a: &[Big], n: u32, k_max: usize, bits: usize) -> Vec<Big> {
        let nf = f64::from(n);
        let mut c: Vec<Big> = Vec::with_capacity(k_max);
        c.push(a[0].powi(n.into()));
        for m in 1..k_max {
            let mut sum = big(0.0, bits);
            for k in 1..=m.min(a.len() - 1) {
                let w = (nf + 1.0) * k as f64 - m as f64;
                if w != 0.0 {
                    sum += big(w, bits) * &a[k] * &c[m - k];
                }
            }
            c.push(sum / (big(m as f64, bits) * &a[0]));
        }
        c
    }
}
