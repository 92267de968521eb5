//! Order statistics of exp-G samples.
//!
//! The density of the `i`-th of `n` order statistics has a direct form in
//! `f`, `F` and `1 - F`, and a finite expansion as a signed combination of
//! exp-G densities with parameters `lambda (j + k + 1)`. Moments follow from
//! the expansion and the component moments.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::ExpGModel;
use crate::moments::{moment, MomentResult, MomentRoute};
use crate::quadrature::{integrate_over_support, QuadOptions};
use crate::series::TruncationPolicy;
use crate::special::{ln_beta, ln_gamma};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum OrderRoute {
    Direct,
    Expansion,
}

/// One component of the expansion: weight times the exp-G density with
/// parameter `lambda`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ExpansionTerm {
    pub j: usize,
    pub k: usize,
    pub lambda: f64,
    pub weight: f64,
}

/// Largest `sum |w| / |sum w|` accepted before the expansion is considered too
/// cancellation-prone for moments and quadrature is used instead.
pub const EXPANSION_CONDITION_LIMIT: f64 = 1e4;

fn check_indices(i: usize, n: usize) -> Result<()> {
    if n == 0 {
        return Err(Error::Parameter {
            name: "n",
            value: 0.0,
            reason: "sample size must be at least 1",
        });
    }
    if i == 0 || i > n {
        return Err(Error::Parameter {
            name: "i",
            value: i as f64,
            reason: "order index must satisfy 1 <= i <= n",
        });
    }
    Ok(())
}

fn ln_choose(n: usize, k: usize) -> f64 {
    ln_gamma(n as f64 + 1.0) - ln_gamma(k as f64 + 1.0) - ln_gamma((n - k) as f64 + 1.0)
}

/// `log |1 - e^{-t}|` for `t != 0`, without overflow for large negative `t`.
fn ln_abs_one_minus_exp_neg(t: f64) -> f64 {
    if t > 0.0 {
        (-(-t).exp_m1()).ln()
    } else {
        -t + (-t.exp_m1()).ln()
    }
}

/// Density of `X_{i:n}` at `x` by the chosen route.
///
/// At `lambda = 0` the expansion degenerates and the direct form is used
/// regardless of `route`.
pub fn order_stat_pdf(m: &ExpGModel, i: usize, n: usize, x: f64, route: OrderRoute) -> Result<f64> {
    check_indices(i, n)?;
    match route {
        OrderRoute::Direct => direct_pdf(m, i, n, x),
        OrderRoute::Expansion if m.lambda() == 0.0 => direct_pdf(m, i, n, x),
        OrderRoute::Expansion => {
            let mut sum = 0.0;
            for t in order_stat_weights(m, i, n)? {
                sum += t.weight * m.with_lambda(t.lambda)?.pdf(x)?;
            }
            Ok(sum)
        }
    }
}

fn direct_pdf(m: &ExpGModel, i: usize, n: usize, x: f64) -> Result<f64> {
    let f = m.pdf(x)?;
    if f == 0.0 {
        return Ok(0.0);
    }
    let (lo, hi) = (m.cdf(x), m.survival(x));
    if (i > 1 && lo == 0.0) || (i < n && hi == 0.0) {
        return Ok(0.0);
    }
    let ln = f.ln() + (i - 1) as f64 * lo.ln() + (n - i) as f64 * hi.ln()
        - ln_beta(i as f64, (n - i + 1) as f64);
    Ok(ln.exp())
}

/// Weights of the expansion
///
/// `f_{i:n} = sum_{j<i, k<=n-i} w_{jk} f_{lambda (j+k+1)}`,
///
/// `w_{jk} = (-1)^{n+j-k-i} C(i-1,j) C(n-i,k) e^{-lambda(n-k-i)} (1 - e^{-lambda(j+k+1)})
///          / ((1 - e^{-lambda})^n B(i, n-i+1) (j+k+1))`.
///
/// The weights sum to one. Requires `lambda != 0`.
pub fn order_stat_weights(m: &ExpGModel, i: usize, n: usize) -> Result<Vec<ExpansionTerm>> {
    check_indices(i, n)?;
    let l = m.lambda();
    if l == 0.0 {
        return Err(Error::Unsupported {
            op: "order-statistic expansion at lambda = 0",
            family: m.family().name(),
        });
    }
    let common = -(n as f64) * ln_abs_one_minus_exp_neg(l) - ln_beta(i as f64, (n - i + 1) as f64);
    // (1 - e^{-lambda})^{-n} (1 - e^{-lambda m}) has the sign of lambda^{n+1}
    let lambda_sign = if l < 0.0 && (n + 1) % 2 == 1 { -1.0 } else { 1.0 };
    let mut terms = Vec::with_capacity(i * (n - i + 1));
    for j in 0..i {
        for k in 0..=(n - i) {
            let mult = (j + k + 1) as f64;
            let ln_w = common + ln_choose(i - 1, j) + ln_choose(n - i, k) - mult.ln()
                - l * (n - k - i) as f64
                + ln_abs_one_minus_exp_neg(l * mult);
            let parity = if (n + j + i - k) % 2 == 0 { 1.0 } else { -1.0 };
            terms.push(ExpansionTerm {
                j,
                k,
                lambda: l * mult,
                weight: parity * lambda_sign * ln_w.exp(),
            });
        }
    }
    Ok(terms)
}

/// `sum |w| / |sum w|`: the factor by which rounding in the components is
/// amplified by the expansion.
pub fn expansion_condition(terms: &[ExpansionTerm]) -> f64 {
    let abs: f64 = terms.iter().map(|t| t.weight.abs()).sum();
    let signed: f64 = terms.iter().map(|t| t.weight).sum();
    abs / signed.abs()
}

/// `E[X_{i:n}^r]` from the expansion and component moments, falling back to
/// quadrature of the direct density when `lambda = 0` or the expansion is
/// ill-conditioned.
pub fn order_stat_moment(m: &ExpGModel, i: usize, n: usize, r: f64, pol: &TruncationPolicy) -> Result<MomentResult> {
    check_indices(i, n)?;
    if i == 1 && n == 1 {
        return moment(m, r, pol);
    }
    if m.lambda() == 0.0 || m.base().is_discrete() {
        return order_stat_moment_quadrature(m, i, n, r);
    }
    let terms = order_stat_weights(m, i, n)?;
    let cond = expansion_condition(&terms);
    if cond.is_nan() || cond > EXPANSION_CONDITION_LIMIT {
        return order_stat_moment_quadrature(m, i, n, r);
    }
    let mut value = 0.0;
    let mut used = 0;
    let mut worst: f64 = 0.0;
    for t in &terms {
        let c = moment(&m.with_lambda(t.lambda)?, r, pol)?;
        value += t.weight * c.value;
        used += c.terms;
        worst = worst.max(c.achieved_tol);
    }
    Ok(MomentResult {
        value,
        route: MomentRoute::Expansion,
        terms: used,
        achieved_tol: worst.max(f64::EPSILON) * cond,
    })
}

/// `E[X_{i:n}^r]` by quadrature of `x^r f_{i:n}(x)`.
pub fn order_stat_moment_quadrature(m: &ExpGModel, i: usize, n: usize, r: f64) -> Result<MomentResult> {
    check_indices(i, n)?;
    m.base().moment(r)?;
    if m.base().is_discrete() {
        return Err(Error::Unsupported {
            op: "order-statistic density",
            family: m.family().name(),
        });
    }
    let opts = QuadOptions {
        abs_tol: 0.0,
        rel_tol: 1e-12,
        max_intervals: 4000,
    };
    let q = integrate_over_support(
        m,
        |x| match direct_pdf(m, i, n, x) {
            Ok(d) if d > 0.0 => x.powf(r) * d,
            _ => 0.0,
        },
        &opts,
    )?;
    let value = q.into_result()?;
    Ok(MomentResult {
        value,
        route: MomentRoute::Quadrature,
        terms: q.evaluations,
        achieved_tol: q.abs_error / value.abs().max(f64::MIN_POSITIVE),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::base::BaseDistribution;
    use crate::quadrature::integrate_over_support;

    fn weibull(l: f64, scale: f64, shape: f64) -> ExpGModel {
        ExpGModel::new(l, BaseDistribution::weibull(shape, scale).unwrap()).unwrap()
    }

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    #[test]
    fn single_observation_is_the_model() {
        let m = weibull(1.0, 1.0, 1.0);
        for x in [0.2, 1.0, 3.0] {
            let p = m.pdf(x).unwrap();
            for route in [OrderRoute::Direct, OrderRoute::Expansion] {
                assert!(rel(order_stat_pdf(&m, 1, 1, x, route).unwrap(), p) < 1e-14);
            }
        }
    }

    #[test]
    fn routes_agree() {
        let m = weibull(1.0, 1.0, 1.0);
        let d = order_stat_pdf(&m, 2, 3, 0.8, OrderRoute::Direct).unwrap();
        let e = order_stat_pdf(&m, 2, 3, 0.8, OrderRoute::Expansion).unwrap();
        assert!((d - e).abs() < 1e-10, "{d} {e}");
        for l in [-10.0, -3.0, -0.5, 0.5, 3.0, 10.0] {
            let m = weibull(l, 1.5, 2.0);
            for (i, n) in [(1, 4), (2, 4), (4, 4), (3, 5)] {
                for x in [0.3, 1.0, 2.0] {
                    let d = order_stat_pdf(&m, i, n, x, OrderRoute::Direct).unwrap();
                    let e = order_stat_pdf(&m, i, n, x, OrderRoute::Expansion).unwrap();
                    assert!((d - e).abs() < 1e-10, "l={l} i={i} n={n} x={x}: {d} {e}");
                }
            }
        }
    }

    #[test]
    fn weights_sum_to_one() {
        for l in [-20.0, -1.0, 0.5, 2.0, 40.0] {
            let m = weibull(l, 1.0, 1.0);
            for (i, n) in [(1, 1), (1, 3), (2, 3), (5, 6)] {
                let s: f64 = order_stat_weights(&m, i, n).unwrap().iter().map(|t| t.weight).sum();
                assert!((s - 1.0).abs() < 1e-10, "l={l} i={i} n={n}: {s}");
            }
        }
    }

    #[test]
    fn mixture_identity() {
        let m = ExpGModel::new(-2.0, BaseDistribution::beta(2.0, 3.0).unwrap()).unwrap();
        let n = 5;
        for x in [0.1, 0.4, 0.9] {
            let avg: f64 = (1..=n)
                .map(|i| order_stat_pdf(&m, i, n, x, OrderRoute::Direct).unwrap())
                .sum::<f64>()
                / n as f64;
            assert!((avg - m.pdf(x).unwrap()).abs() < 1e-10);
        }
    }

    #[test]
    fn density_integrates_to_one() {
        let m = weibull(1.0, 1.0, 1.0);
        let q = integrate_over_support(
            &m,
            |x| order_stat_pdf(&m, 2, 3, x, OrderRoute::Direct).unwrap(),
            &QuadOptions::default(),
        )
        .unwrap();
        assert!((q.value - 1.0).abs() < 1e-8);
    }

    #[test]
    fn moments_match_quadrature() {
        let pol = TruncationPolicy::default();
        let m = weibull(1.0, 1.0, 2.0);
        let e = order_stat_moment(&m, 1, 2, 1.0, &pol).unwrap();
        let q = order_stat_moment_quadrature(&m, 1, 2, 1.0).unwrap();
        assert_eq!(e.route, MomentRoute::Expansion);
        assert!(rel(e.value, q.value) < 1e-8, "{e:?} {q:?}");

        let b = ExpGModel::new(2.0, BaseDistribution::beta(2.0, 2.0).unwrap()).unwrap();
        let e = order_stat_moment(&b, 2, 2, 1.0, &pol).unwrap();
        let q = order_stat_moment_quadrature(&b, 2, 2, 1.0).unwrap();
        assert!(rel(e.value, q.value) < 1e-5, "{e:?} {q:?}");

        let single = order_stat_moment(&m, 1, 1, 2.0, &pol).unwrap();
        assert!(rel(single.value, moment(&m, 2.0, &pol).unwrap().value) < 1e-15);
    }

    #[test]
    fn lambda_zero_uses_quadrature() {
        let m = weibull(0.0, 1.0, 1.0);
        // minimum of two unit exponentials has mean 1/2
        let r = order_stat_moment(&m, 1, 2, 1.0, &TruncationPolicy::default()).unwrap();
        assert_eq!(r.route, MomentRoute::Quadrature);
        assert!(rel(r.value, 0.5) < 1e-10);
    }

    #[test]
    fn small_lambda_expansion_is_ill_conditioned() {
        let m = weibull(1e-3, 1.0, 1.0);
        let terms = order_stat_weights(&m, 1, 3).unwrap();
        assert!(expansion_condition(&terms) > EXPANSION_CONDITION_LIMIT);
        let r = order_stat_moment(&m, 1, 3, 1.0, &TruncationPolicy::default()).unwrap();
        assert_eq!(r.route, MomentRoute::Quadrature);
    }

    #[test]
    fn index_validation() {
        let m = weibull(1.0, 1.0, 1.0);
        assert!(order_stat_pdf(&m, 0, 3, 1.0, OrderRoute::Direct).is_err());
        assert!(order_stat_pdf(&m, 4, 3, 1.0, OrderRoute::Direct).is_err());
        assert!(order_stat_weights(&m.with_lambda(0.0).unwrap(), 1, 2).is_err());
    }
}
