//! Numerical plumbing shared by the moment, entropy and information code:
//! adaptive Gauss-Kronrod integration, expectations under an exp-G model,
//! finite differences and a few reference distribution tails.

mod diff;
mod gof;
mod kronrod;
mod tails;

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};
use crate::model::ExpGModel;

pub use diff::{fd_gradient, fd_hessian, fd_jacobian};
pub use gof::{ks_statistic, ks_test, kolmogorov_sf, KsResult};
pub use tails::{chi2_sf, normal_quantile};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadResult {
    pub value: f64,
    pub abs_error: f64,
    pub evaluations: usize,
    pub converged: bool,
}

impl QuadResult {
    /// The value, or an error if the tolerance was not met.
    pub fn into_result(self) -> Result<f64> {
        if self.converged && self.value.is_finite() {
            Ok(self.value)
        } else {
            Err(Error::Quadrature {
                value: self.value,
                error: self.abs_error,
            })
        }
    }

    /// Like [`into_result`](Self::into_result), but a sum of windows also
    /// passes when its total error estimate meets the tolerance for the whole
    /// integral: a sliver next to an endpoint may be too narrow to bisect yet
    /// carry a negligible error.
    pub fn into_result_total(self, opts: &QuadOptions) -> Result<f64> {
        let within = self.abs_error <= opts.abs_tol.max(opts.rel_tol * self.value.abs());
        QuadResult {
            converged: self.converged || within,
            ..self
        }
        .into_result()
    }

    pub fn combine(self, other: QuadResult) -> QuadResult {
        QuadResult {
            value: self.value + other.value,
            abs_error: self.abs_error + other.abs_error,
            evaluations: self.evaluations + other.evaluations,
            converged: self.converged && other.converged,
        }
    }

    pub const EMPTY: QuadResult = QuadResult {
        value: 0.0,
        abs_error: 0.0,
        evaluations: 0,
        converged: true,
    };
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadOptions {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_intervals: usize,
}

impl Default for QuadOptions {
    fn default() -> Self {
        QuadOptions {
            abs_tol: 1e-12,
            rel_tol: 1e-12,
            max_intervals: 4000,
        }
    }
}

impl QuadOptions {
    pub fn with_tolerance(abs_tol: f64, rel_tol: f64) -> Self {
        QuadOptions {
            abs_tol,
            rel_tol,
            ..Default::default()
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct Segment {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Segment {}

impl PartialOrd for Segment {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Segment {
    // max-heap on error; ties broken by position so the order is deterministic
    fn cmp(&self, other: &Self) -> Ordering {
        self.error
            .total_cmp(&other.error)
            .then_with(|| other.a.total_cmp(&self.a))
    }
}

/// Integrate `f` over `[a, b]`. Either bound may be infinite.
///
/// Infinite ranges are mapped to `[0, 1]` with `x = a + t/(1-t)` (and its
/// mirror images). Integrable endpoint singularities are fine as long as `f`
/// is finite at interior points.
pub fn integrate<F>(f: F, a: f64, b: f64, opts: &QuadOptions) -> QuadResult
where
    F: Fn(f64) -> f64,
{
    if a == b {
        return QuadResult::EMPTY;
    }
    if a > b {
        let r = integrate_ordered(&f, b, a, opts);
        return QuadResult { value: -r.value, ..r };
    }
    integrate_ordered(&f, a, b, opts)
}

fn integrate_ordered<F>(f: &F, a: f64, b: f64, opts: &QuadOptions) -> QuadResult
where
    F: Fn(f64) -> f64,
{
    match (a.is_finite(), b.is_finite()) {
        (true, true) => adaptive(f, a, b, opts),
        (true, false) => integrate_upper_tail(f, a, 1.0, opts),
        (false, true) => integrate_lower_tail(f, b, opts),
        (false, false) => {
            let left = integrate_lower_tail(f, 0.0, opts);
            let right = integrate_upper_tail(f, 0.0, 1.0, opts);
            left.combine(right)
        }
    }
}

/// `int_-inf^b f`, substituting `x = b - t/(1-t)`.
fn integrate_lower_tail<F>(f: &F, b: f64, opts: &QuadOptions) -> QuadResult
where
    F: Fn(f64) -> f64,
{
    let g = |t: f64| {
        let s = 1.0 - t;
        let x = b - t / s;
        if x.is_infinite() {
            return 0.0;
        }
        let v = f(x) / (s * s);
        if v.is_finite() {
            v
        } else {
            0.0
        }
    };
    adaptive(&g, 0.0, 1.0, opts)
}

/// `int_a^inf f`, substituting `x = a + scale * t/(1-t)`.
pub fn integrate_upper_tail<F>(f: F, a: f64, scale: f64, opts: &QuadOptions) -> QuadResult
where
    F: Fn(f64) -> f64,
{
    let g = |t: f64| {
        let s = 1.0 - t;
        let x = a + scale * t / s;
        if x.is_infinite() {
            return 0.0;
        }
        let v = f(x) * scale / (s * s);
        if v.is_finite() {
            v
        } else {
            0.0
        }
    };
    adaptive(&g, 0.0, 1.0, opts)
}

fn adaptive<F>(f: &F, a: f64, b: f64, opts: &QuadOptions) -> QuadResult
where
    F: Fn(f64) -> f64,
{
    let first = kronrod::gk21(f, a, b);
    let mut evaluations = 21;
    let mut heap = BinaryHeap::new();
    let mut frozen: Vec<Segment> = Vec::new();
    heap.push(Segment {
        a,
        b,
        value: first.value,
        error: first.error,
    });
    let mut total = first.value;
    let mut total_err = first.error;
    let mut converged = false;

    loop {
        let tol = opts.abs_tol.max(opts.rel_tol * total.abs());
        if total_err <= tol {
            converged = true;
            break;
        }
        if heap.len() + frozen.len() >= opts.max_intervals || !total.is_finite() {
            break;
        }
        let Some(worst) = heap.pop() else { break };
        let mid = 0.5 * (worst.a + worst.b);
        // an interval too narrow to split carries its error to the end
        if mid <= worst.a || mid >= worst.b || (worst.b - worst.a) < 1e-15 * mid.abs().max(1e-300) {
            frozen.push(worst);
            continue;
        }
        let left = kronrod::gk21(f, worst.a, mid);
        let right = kronrod::gk21(f, mid, worst.b);
        evaluations += 42;
        total += left.value + right.value - worst.value;
        total_err += left.error + right.error - worst.error;
        heap.push(Segment {
            a: worst.a,
            b: mid,
            value: left.value,
            error: left.error,
        });
        heap.push(Segment {
            a: mid,
            b: worst.b,
            value: right.value,
            error: right.error,
        });
    }

    // re-sum in left-to-right order so the result does not depend on the
    // running update history
    let mut segments: Vec<Segment> = heap.into_vec();
    segments.extend(frozen);
    segments.sort_by(|p, q| p.a.total_cmp(&q.a));
    let value: f64 = segments.iter().map(|s| s.value).sum();
    let abs_error: f64 = segments.iter().map(|s| s.error).sum();
    let converged = converged && value.is_finite();
    QuadResult {
        value,
        abs_error,
        evaluations,
        converged,
    }
}

/// Composite 21-point Kronrod rule over consecutive `breaks`, as
/// `(node, weight)` pairs in ascending node order.
///
/// For repeated integration of many functions against the same measure,
/// where evaluating the shared factor once per node pays off.
pub fn composite_rule(breaks: &[f64]) -> Vec<(f64, f64)> {
    breaks
        .windows(2)
        .filter(|w| w[1] > w[0])
        .flat_map(|w| kronrod::gk21_nodes(w[0], w[1]))
        .collect()
}

/// Quantile levels used to cut the support into pieces of comparable mass.
const BREAK_LEVELS: [f64; 7] = [1e-6, 1e-3, 0.1, 0.5, 0.9, 0.999, 1.0 - 1e-6];

/// `E[h(X)]` for `X ~ m`, integrating `h(x) f(x)` over the support.
///
/// The support is split at model quantiles so that narrow or far-out mass
/// (large `|lambda|`, or a scale far from 1) is resolved.
pub fn expectation<H>(m: &ExpGModel, h: H, opts: &QuadOptions) -> Result<QuadResult>
where
    H: Fn(f64) -> f64,
{
    let integrand = |x: f64| {
        let d = m.pdf(x).unwrap_or(0.0);
        if d == 0.0 {
            0.0
        } else {
            h(x) * d
        }
    };
    integrate_over_support(m, integrand, opts)
}

/// Integrate an arbitrary `f` over the support of `m`, split at its quantiles.
pub fn integrate_over_support<F>(m: &ExpGModel, f: F, opts: &QuadOptions) -> Result<QuadResult>
where
    F: Fn(f64) -> f64,
{
    let (lo, hi) = m.base().support_bounds();
    let mut cuts: Vec<f64> = Vec::with_capacity(BREAK_LEVELS.len() + 2);
    for &p in &BREAK_LEVELS {
        let q = m.quantile(p)?;
        if q.is_finite() && q > lo && q < hi && cuts.last().is_none_or(|&last| q > last) {
            cuts.push(q);
        }
    }
    let mut result = QuadResult::EMPTY;
    let mut left = lo;
    let scale = match (cuts.first(), cuts.last()) {
        (Some(&first), Some(&last)) if last > first => (last - first).max(1e-300),
        _ => 1.0,
    };
    for &c in &cuts {
        result = result.combine(piece(&f, left, c, scale, opts));
        left = c;
    }
    result = result.combine(piece(&f, left, hi, scale, opts));
    Ok(result)
}

fn piece<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, scale: f64, opts: &QuadOptions) -> QuadResult {
    if b.is_infinite() && a.is_finite() {
        integrate_upper_tail(f, a, scale, opts)
    } else {
        integrate(f, a, b, opts)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn opts() -> QuadOptions {
        QuadOptions::default()
    }

    #[test]
    fn composite_rule_is_exact_for_polynomials() {
        let rule = composite_rule(&[0.0, 0.3, 0.3, 1.0]);
        assert_eq!(rule.len(), 42);
        assert!(rule.windows(2).all(|w| w[0].0 < w[1].0));
        let s: f64 = rule.iter().map(|&(x, w)| w * x.powi(7)).sum();
        assert!((s - 0.125).abs() < 1e-15);
    }

    #[test]
    fn constant_on_unit_interval() {
        let r = integrate(|_| 1.0, 0.0, 1.0, &opts());
        assert!(r.converged);
        assert!((r.value - 1.0).abs() < 1e-15);
    }

    #[test]
    fn exponential_on_half_line() {
        let r = integrate(|x| (-x).exp(), 0.0, f64::INFINITY, &opts());
        assert!(r.converged);
        assert!((r.value - 1.0).abs() < 1e-12);
    }

    #[test]
    fn inverse_sqrt_endpoint_singularity() {
        let r = integrate(|x| 1.0 / x.sqrt(), 0.0, 1.0, &QuadOptions::with_tolerance(1e-11, 1e-11));
        assert!(r.converged, "{r:?}");
        assert!((r.value - 2.0).abs() < 1e-9, "{r:?}");
    }

    #[test]
    fn whole_line_gaussian() {
        let r = integrate(|x| (-x * x / 2.0).exp(), f64::NEG_INFINITY, f64::INFINITY, &opts());
        assert!((r.value - (2.0 * std::f64::consts::PI).sqrt()).abs() < 1e-11);
    }

    #[test]
    fn reversed_bounds_flip_sign() {
        let r = integrate(|x| x * x, 1.0, 0.0, &opts());
        assert!((r.value + 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn error_estimates_are_honest() {
        type Case = (fn(f64) -> f64, f64, f64, f64);
        let cases: [Case; 6] = [
            (|x| x.sin(), 0.0, std::f64::consts::PI, 2.0),
            (|x| x.ln(), 0.0, 1.0, -1.0),
            (|x| 1.0 / (1.0 + x * x), 0.0, f64::INFINITY, std::f64::consts::FRAC_PI_2),
            (|x| x.powf(-0.9), 0.0, 1.0, 10.0),
            (|x| (-x).exp() * x.powi(5), 0.0, f64::INFINITY, 120.0),
            (|x| (50.0 * x).cos(), 0.0, 1.0, 50f64.sin() / 50.0),
        ];
        let loose = QuadOptions::with_tolerance(1e-6, 1e-6);
        for (f, a, b, exact) in cases {
            let r = integrate(f, a, b, &loose);
            let err = (r.value - exact).abs();
            assert!(err <= 10.0 * r.abs_error.max(1e-15), "{exact}: {r:?}, true error {err:e}");
        }
    }

    #[test]
    fn non_convergence_is_flagged() {
        let tight = QuadOptions {
            abs_tol: 1e-15,
            rel_tol: 0.0,
            max_intervals: 3,
        };
        let r = integrate(|x| x.powf(-0.99), 0.0, 1.0, &tight);
        assert!(!r.converged);
        assert!(r.into_result().is_err());
    }

    #[test]
    fn bit_identical_on_repeat() {
        let f = |x: f64| (x.sin() * 3.0).exp() / (1.0 + x);
        let a = integrate(f, 0.0, 10.0, &opts());
        let b = integrate(f, 0.0, 10.0, &opts());
        assert_eq!(a.value.to_bits(), b.value.to_bits());
        assert_eq!(a.abs_error.to_bits(), b.abs_error.to_bits());
    }
}
