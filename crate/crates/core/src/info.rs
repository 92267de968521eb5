//! Entropy and divergence of exp-G laws.
//!
//! Under the base law `G(X)` is uniform and under the exp-G law it has the
//! truncated-exponential density `rate(lambda) e^{-lambda u}` on `[0, 1]`, so
//! the divergences depend on `lambda` only and the entropy splits into a
//! `lambda` part and `C1 = E[log g(G^{-1}(U))]`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::ExpGModel;
use crate::quadrature::{composite_rule, expectation, integrate, QuadOptions, QuadResult};
use crate::transform::{log_rate_constant, mean_transformed, rate_constant_raw, texp_quantile_raw};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Direction {
    /// `D(mu || mu_lambda)`: base law against the exp-G law.
    #[serde(rename = "g_vs_expg")]
    BaseVsModel,
    /// `D(mu_lambda || mu)`.
    #[serde(rename = "expg_vs_g")]
    ModelVsBase,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DivergenceResult {
    pub direction: Direction,
    pub closed_form: f64,
    pub quadrature_value: f64,
    pub discrepancy: f64,
}

/// Closed-form Kullback-Leibler divergence between `G` and exp-G.
pub fn kl_closed_form(lambda: f64, direction: Direction) -> f64 {
    // Both divergences are even in lambda; the closed forms cancel to
    // O(lambda^2) near zero.
    if lambda.abs() < 0.25 {
        let t = lambda * lambda;
        let c = match direction {
            Direction::BaseVsModel => [24.0, -2880.0, 181_440.0, -9_676_800.0, 479_001_600.0],
            Direction::ModelVsBase => [24.0, -960.0, 36_288.0, -1_382_400.0, 53_222_400.0],
        };
        return c.iter().rev().fold(0.0, |acc, d| (acc + 1.0 / d) * t);
    }
    let value = match direction {
        Direction::BaseVsModel => 0.5 * lambda - log_rate_constant(lambda),
        // lambda/(e^lambda - 1) = rate(-lambda)
        Direction::ModelVsBase => log_rate_constant(lambda) - 1.0 + rate_constant_raw(-lambda),
    };
    value.max(0.0)
}

/// `1 - lambda/(e^lambda - 1) - log rate(lambda)`, the sign-reversed form of
/// `D(mu_lambda || mu)`. Never positive.
///
/// Evaluated term by term as written, independently of [`kl_closed_form`].
pub fn reversed_divergence_expression(lambda: f64) -> f64 {
    if lambda == 0.0 {
        return 0.0;
    }
    1.0 - lambda / lambda.exp_m1() - log_rate_constant(lambda)
}

fn quad_options() -> QuadOptions {
    QuadOptions {
        abs_tol: 1e-13,
        rel_tol: 1e-12,
        max_intervals: 4000,
    }
}

fn continuous(m: &ExpGModel, op: &'static str) -> Result<()> {
    if m.base().is_discrete() {
        return Err(Error::Unsupported {
            op,
            family: m.family().name(),
        });
    }
    Ok(())
}

/// Closed form together with a quadrature of the log density ratio in `x`.
pub fn kl_divergence(m: &ExpGModel, direction: Direction) -> Result<DivergenceResult> {
    continuous(m, "divergence")?;
    let base = *m.base();
    let log_ratio = |x: f64| match (m.logpdf(x), base.logpdf(x)) {
        (Ok(a), Ok(b)) => a - b,
        _ => 0.0,
    };
    // Very heavy tails (Fréchet shape well below 1) spread the integral over
    // dozens of decades; an absolute 1e-10 still leaves two orders of
    // margin on the 1e-8 agreement the closed forms are held to.
    let opts = QuadOptions {
        abs_tol: 1e-10,
        ..quad_options()
    };
    let quad = match direction {
        Direction::BaseVsModel => expectation(&m.with_lambda(0.0)?, |x| -log_ratio(x), &opts)?,
        Direction::ModelVsBase => expectation(m, log_ratio, &opts)?,
    };
    let closed_form = kl_closed_form(m.lambda(), direction);
    let quadrature_value = quad.into_result_total(&opts)?;
    Ok(DivergenceResult {
        direction,
        closed_form,
        quadrature_value,
        discrepancy: (closed_form - quadrature_value).abs(),
    })
}

/// `C1 = E[log g(G^{-1}(U))]` and `C2 = E[G(X)]`, `U = G(X)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Constraints {
    pub c1: f64,
    pub c2: f64,
    /// Quadrature error estimate for `c1`.
    pub c1_error: f64,
}

/// Break points for integrals over `u` against `rate(lambda) e^{-lambda u}`:
/// quantiles of that density, refined geometrically towards both endpoints
/// where `log g(G^{-1}(u))` may be singular.
fn unit_breaks(lambda: f64) -> Vec<f64> {
    let mut b = vec![0.0, 1.0];
    for k in 1..=15 {
        let t = 10f64.powi(-k);
        b.push(t);
        b.push(1.0 - t);
    }
    for p in [1e-6, 1e-3, 0.1, 0.5, 0.9, 0.999, 1.0 - 1e-6] {
        b.push(texp_quantile_raw(lambda, p));
    }
    b.retain(|u| (0.0..=1.0).contains(u));
    b.sort_by(f64::total_cmp);
    b.dedup();
    b
}

pub fn constraint_expectations(m: &ExpGModel) -> Result<Constraints> {
    continuous(m, "constraint expectations")?;
    let l = m.lambda();
    let base = *m.base();
    let log_rate = log_rate_constant(l);
    let integrand = |u: f64| match base.logpdf_at_quantile(u) {
        Ok(v) => v * (log_rate - l * u).exp(),
        Err(_) => 0.0,
    };
    let breaks = unit_breaks(l);
    let opts = quad_options();
    let mut total = QuadResult::EMPTY;
    for w in breaks.windows(2) {
        total = total.combine(integrate(integrand, w[0], w[1], &opts));
    }
    let c1 = total.into_result_total(&opts)?;
    Ok(Constraints {
        c1,
        c2: mean_transformed(l),
        c1_error: total.abs_error,
    })
}

/// `1 - lambda/(e^lambda - 1) - log rate(lambda) - C1`.
pub fn shannon_entropy(m: &ExpGModel) -> Result<f64> {
    let c = constraint_expectations(m)?;
    let l = m.lambda();
    Ok(l * c.c2 - log_rate_constant(l) - c.c1)
}

/// `-int f log f` by direct quadrature in `x`.
pub fn entropy_quadrature(m: &ExpGModel) -> Result<f64> {
    continuous(m, "entropy")?;
    let q = expectation(m, |x| m.logpdf(x).map_or(0.0, |v| -v), &quad_options())?;
    q.into_result()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum Perturbation {
    /// The model density itself.
    Identity,
    /// `count` tilts `exp(scale * phi + s1 log g + s2 G)` with `phi` a random
    /// combination of the first three Legendre polynomials in `G(x)`, and
    /// `(s1, s2)` solved so that `C1` and `C2` are preserved.
    RandomTilts { count: usize, seed: u64, scale: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TiltOutcome {
    pub coefficients: Vec<f64>,
    pub multipliers: [f64; 2],
    pub entropy: f64,
    /// Largest absolute deviation from the `C1`, `C2` targets.
    pub constraint_residual: f64,
    pub solved: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DominanceReport {
    /// Entropy of the model on the shared discretization.
    pub entropy: f64,
    pub outcomes: Vec<TiltOutcome>,
    /// Tilts whose constraint solve failed.
    pub skipped: usize,
    /// Every solved tilt has entropy at most `entropy + 1e-7`.
    pub dominated: bool,
}

/// Densities of `U = G(X)` on a fixed rule, with `log g(G^{-1}(u))` cached.
struct UnitGrid {
    nodes: Vec<f64>,
    weights: Vec<f64>,
    log_g: Vec<f64>,
}

impl UnitGrid {
    fn new(m: &ExpGModel) -> Result<Self> {
        let rule = composite_rule(&unit_breaks(m.lambda()));
        let mut grid = UnitGrid {
            nodes: Vec::with_capacity(rule.len()),
            weights: Vec::with_capacity(rule.len()),
            log_g: Vec::with_capacity(rule.len()),
        };
        for (u, w) in rule.into_iter().filter(|&(u, _)| u > 0.0 && u < 1.0) {
            grid.nodes.push(u);
            grid.weights.push(w);
            grid.log_g.push(m.base().logpdf_at_quantile(u)?);
        }
        Ok(grid)
    }

    /// Normalized density values for the given log density (up to a constant).
    fn normalize(&self, log_p: &[f64]) -> Vec<f64> {
        let top = log_p.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let raw: Vec<f64> = log_p.iter().map(|v| (v - top).exp()).collect();
        let z: f64 = raw.iter().zip(&self.weights).map(|(p, w)| p * w).sum();
        raw.into_iter().map(|p| p / z).collect()
    }

    fn mean(&self, p: &[f64], h: impl Fn(usize) -> f64) -> f64 {
        (0..p.len()).map(|i| self.weights[i] * p[i] * h(i)).sum()
    }

    /// Entropy in `x` of the law whose `U` density is `p`: `H_U - E[log g]`.
    fn entropy_x(&self, p: &[f64]) -> f64 {
        let h_u = -self.mean(p, |i| if p[i] > 0.0 { p[i].ln() } else { 0.0 });
        h_u - self.mean(p, |i| self.log_g[i])
    }
}

fn legendre(k: usize, t: f64) -> f64 {
    match k {
        0 => t,
        1 => 0.5 * (3.0 * t * t - 1.0),
        _ => 0.5 * (5.0 * t * t * t - 3.0 * t),
    }
}

/// Compare the entropy of the model with that of constraint-preserving
/// perturbations. All entropies are computed on one shared discretization.
pub fn maxent_dominance_check(m: &ExpGModel, perturbation: Perturbation) -> Result<DominanceReport> {
    continuous(m, "maximum-entropy check")?;
    let l = m.lambda();
    let grid = UnitGrid::new(m)?;
    let base_log: Vec<f64> = grid.nodes.iter().map(|&u| log_rate_constant(l) - l * u).collect();
    let p0 = grid.normalize(&base_log);
    let targets = [grid.mean(&p0, |i| grid.log_g[i]), grid.mean(&p0, |i| grid.nodes[i])];
    let entropy = grid.entropy_x(&p0);

    let tilts: Vec<Vec<f64>> = match perturbation {
        Perturbation::Identity => vec![vec![0.0; 3]],
        Perturbation::RandomTilts { count, seed, scale } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (0..count)
                .map(|_| (0..3).map(|_| scale * rng.random_range(-1.0..1.0)).collect())
                .collect()
        }
    };

    let mut outcomes = Vec::with_capacity(tilts.len());
    let mut skipped = 0;
    for coefficients in tilts {
        let shape: Vec<f64> = grid
            .nodes
            .iter()
            .zip(&base_log)
            .map(|(&u, &b)| b + (0..3).map(|k| coefficients[k] * legendre(k, 2.0 * u - 1.0)).sum::<f64>())
            .collect();
        let (multipliers, p, residual) = solve_tilt(&grid, &shape, targets);
        let solved = residual <= 1e-10;
        if !solved {
            skipped += 1;
        }
        outcomes.push(TiltOutcome {
            coefficients,
            multipliers,
            entropy: grid.entropy_x(&p),
            constraint_residual: residual,
            solved,
        });
    }
    let dominated = outcomes
        .iter()
        .filter(|o| o.solved)
        .all(|o| o.entropy <= entropy + 1e-7);
    Ok(DominanceReport {
        entropy,
        outcomes,
        skipped,
        dominated,
    })
}

/// Newton iteration for `(s1, s2)` so that the tilted density
/// `exp(shape + s1 log g + s2 u)` matches `targets` in `(E log g, E u)`.
fn solve_tilt(grid: &UnitGrid, shape: &[f64], targets: [f64; 2]) -> ([f64; 2], Vec<f64>, f64) {
    let eval = |s: [f64; 2]| {
        let log_p: Vec<f64> = (0..shape.len())
            .map(|i| shape[i] + s[0] * grid.log_g[i] + s[1] * grid.nodes[i])
            .collect();
        let p = grid.normalize(&log_p);
        let e1 = grid.mean(&p, |i| grid.log_g[i]);
        let e2 = grid.mean(&p, |i| grid.nodes[i]);
        let r = [e1 - targets[0], e2 - targets[1]];
        (p, r, [e1, e2])
    };
    let norm = |r: [f64; 2]| r[0].abs().max(r[1].abs());
    let mut s = [0.0, 0.0];
    let (mut p, mut r, mut e) = eval(s);
    for _ in 0..100 {
        if norm(r) <= 1e-12 {
            break;
        }
        let c11 = grid.mean(&p, |i| (grid.log_g[i] - e[0]).powi(2));
        let c12 = grid.mean(&p, |i| (grid.log_g[i] - e[0]) * (grid.nodes[i] - e[1]));
        let c22 = grid.mean(&p, |i| (grid.nodes[i] - e[1]).powi(2));
        let det = c11 * c22 - c12 * c12;
        if det == 0.0 || det.is_nan() {
            break;
        }
        let step = [(c22 * r[0] - c12 * r[1]) / det, (c11 * r[1] - c12 * r[0]) / det];
        let mut t = 1.0;
        let mut improved = false;
        while t > 1e-6 {
            let trial = [s[0] - t * step[0], s[1] - t * step[1]];
            let (tp, tr, te) = eval(trial);
            if tr.iter().all(|v| v.is_finite()) && norm(tr) < norm(r) {
                (s, p, r, e) = (trial, tp, tr, te);
                improved = true;
                break;
            }
            t *= 0.5;
        }
        if !improved {
            break;
        }
    }
    (s, p, norm(r))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::base::BaseDistribution;

    fn weibull(l: f64, scale: f64, shape: f64) -> ExpGModel {
        ExpGModel::new(l, BaseDistribution::weibull(shape, scale).unwrap()).unwrap()
    }

    fn beta(l: f64, a: f64, b: f64) -> ExpGModel {
        ExpGModel::new(l, BaseDistribution::beta(a, b).unwrap()).unwrap()
    }

    #[test]
    fn divergence_reference() {
        // mpmath: log(1/(1-e^-1)) - 1 + 1/(e-1)
        let d = kl_closed_form(1.0, Direction::ModelVsBase);
        assert!((d - 0.040_651_852_256_408_32).abs() < 1e-15, "{d}");
        assert_eq!(kl_closed_form(0.0, Direction::BaseVsModel), 0.0);
        assert_eq!(kl_closed_form(0.0, Direction::ModelVsBase), 0.0);
        assert!(reversed_divergence_expression(1.0) < 0.0);
    }

    #[test]
    fn small_lambda_branch_is_continuous() {
        for dir in [Direction::BaseVsModel, Direction::ModelVsBase] {
            for l in [-0.25, 0.25] {
                let below = kl_closed_form(l * (1.0 - 1e-12), dir);
                let above = kl_closed_form(l * (1.0 + 1e-12), dir);
                assert!(((below - above) / below).abs() < 1e-10, "{dir:?} {l}");
            }
        }
        // mpmath, 40 digits
        let cases = [
            (0.05, 1.041_644_966_138_903_6e-4, 1.041_601_566_805_548_6e-4),
            (1e-3, 4.166_666_631_944_445e-8, 4.166_666_562_500_003e-8),
        ];
        for (l, d1, d2) in cases {
            for s in [-1.0, 1.0] {
                let a = kl_closed_form(s * l, Direction::BaseVsModel);
                let b = kl_closed_form(s * l, Direction::ModelVsBase);
                assert!(((a - d1) / d1).abs() < 1e-14 && ((b - d2) / d2).abs() < 1e-14, "{l}");
            }
        }
    }

    #[test]
    fn divergences_match_quadrature() {
        for l in [-10.0, -1.0, -0.1, 0.1, 1.0, 10.0] {
            for dir in [Direction::BaseVsModel, Direction::ModelVsBase] {
                let r = kl_divergence(&weibull(l, 1.0, 2.0), dir).unwrap();
                assert!(r.closed_form >= 0.0 && r.quadrature_value >= -1e-10);
                assert!(r.discrepancy < 1e-8, "{l} {r:?}");
            }
        }
        let w = kl_divergence(&weibull(3.0, 1.0, 2.0), Direction::ModelVsBase).unwrap();
        let b = kl_divergence(&beta(3.0, 2.0, 3.0), Direction::ModelVsBase).unwrap();
        assert!((w.quadrature_value - b.quadrature_value).abs() < 1e-10);
    }

    #[test]
    fn constraints() {
        let c = constraint_expectations(&beta(1.0, 1.0, 1.0)).unwrap();
        assert!(c.c1.abs() < 1e-14);
        assert!((c.c2 - 0.418_023_293_130_673_6).abs() < 1e-12);
        assert_eq!(constraint_expectations(&weibull(0.0, 1.0, 1.0)).unwrap().c2, 0.5);
        let m = weibull(2.0, 1.5, 2.0);
        let q = expectation(&m, |x| m.base().cdf(x), &QuadOptions::default()).unwrap();
        assert!((q.value - constraint_expectations(&m).unwrap().c2).abs() < 1e-9);
    }

    #[test]
    fn entropy_references() {
        let h = shannon_entropy(&beta(1.0, 1.0, 1.0)).unwrap();
        assert!((h + 0.040_651_852_256_408_32).abs() < 1e-12);
        let h = shannon_entropy(&weibull(0.0, 1.0, 1.0)).unwrap();
        assert!((h - 1.0).abs() < 1e-10, "{h}");
    }

    #[test]
    fn entropy_matches_direct_quadrature() {
        for l in [-10.0, -3.0, -1.0, 0.0, 1.0, 3.0, 10.0] {
            for m in [weibull(l, 1.0, 1.0), weibull(l, 1.5, 2.0), beta(l, 2.0, 1.0), beta(l, 2.0, 3.0)] {
                let a = shannon_entropy(&m).unwrap();
                let b = entropy_quadrature(&m).unwrap();
                assert!((a - b).abs() < 1e-7, "{m}: {a} {b}");
            }
        }
    }

    #[test]
    fn identity_perturbation_is_equality() {
        let m = weibull(1.0, 1.0, 1.0);
        let r = maxent_dominance_check(&m, Perturbation::Identity).unwrap();
        assert_eq!(r.outcomes.len(), 1);
        assert!((r.outcomes[0].entropy - r.entropy).abs() < 1e-12);
        assert!((r.entropy - shannon_entropy(&m).unwrap()).abs() < 1e-8);
    }

    #[test]
    fn random_tilts_are_dominated() {
        for m in [weibull(1.0, 1.0, 1.0), beta(2.0, 2.0, 2.0)] {
            let r = maxent_dominance_check(&m, Perturbation::RandomTilts { count: 10, seed: 3, scale: 0.5 }).unwrap();
            assert_eq!(r.skipped, 0, "{r:?}");
            assert!(r.dominated);
            assert!(r.outcomes.iter().all(|o| o.entropy < r.entropy));
        }
    }

    #[test]
    fn discrete_base_is_unsupported() {
        let m = ExpGModel::new(1.0, BaseDistribution::bernoulli(0.3).unwrap()).unwrap();
        assert!(kl_divergence(&m, Direction::BaseVsModel).is_err());
        assert!(shannon_entropy(&m).is_err());
    }
}
