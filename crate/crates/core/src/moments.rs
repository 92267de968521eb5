//! Raw moments of exp-G distributions.
//!
//! Several routes are provided and each result records which one produced
//! it. The expansion routes are the closed-form exp-Weibull series, its
//! reciprocal for exp-Fréchet, the probability-weighted-moment series (any
//! continuous base) and the beta power series. Adaptive quadrature of
//! `int x^r f(x) dx` serves as both a fallback and an oracle.

use serde::Serialize;

use crate::base::BaseDistribution;
use crate::error::{Error, Result};
use crate::model::ExpGModel;
use crate::quadrature::{expectation, QuadOptions};
use crate::series::hp;
use crate::series::TruncationPolicy;
use crate::special::{ln_beta, ln_gamma};
use crate::transform::{log_rate_constant, rate_constant_raw};

/// `|lambda|` beyond which the alternating `(-lambda)^j / j!` series are refused.
pub const ALTERNATING_LIMIT: f64 = 30.0;

/// Largest `|lambda|`, `lambda < 0`, for which the exp-Weibull series is summed
/// in extended precision rather than handed to quadrature.
pub const WEIBULL_SERIES_NEGATIVE_LIMIT: f64 = 200.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum MomentRoute {
    /// `lambda = 0`: the base moment in closed form.
    Base,
    /// Poisson-weighted series of the exp-Weibull family (and, through
    /// reciprocity, exp-Fréchet).
    WeibullSeries,
    /// `sum_j (-lambda)^j / j! E[Y^r G(Y)^j]` with quadrature for each term.
    PwmSeries,
    /// Beta power series in the moments of the base.
    PowerSeries,
    /// Linear combination over exp-G components (order statistics).
    Expansion,
    Quadrature,
    /// Finite sum over a discrete support.
    Discrete,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MomentResult {
    pub value: f64,
    pub route: MomentRoute,
    /// Series terms used, or integrand evaluations for quadrature.
    pub terms: usize,
    /// Relative size of the neglected tail, or the quadrature error estimate
    /// relative to the value.
    pub achieved_tol: f64,
}

impl MomentResult {
    fn base(value: f64) -> Self {
        MomentResult {
            value,
            route: MomentRoute::Base,
            terms: 1,
            achieved_tol: 0.0,
        }
    }
}

fn moment_quad_options() -> QuadOptions {
    QuadOptions {
        abs_tol: 0.0,
        rel_tol: 1e-12,
        max_intervals: 4000,
    }
}

/// `E[X^r]` by adaptive quadrature of `x^r f(x)`.
pub fn moment_quadrature(m: &ExpGModel, r: f64) -> Result<MomentResult> {
    if m.base().is_discrete() {
        return discrete_moment(m, r);
    }
    m.base().moment(r)?;
    let q = expectation(m, |x| x.powf(r), &moment_quad_options())?;
    let value = q.into_result()?;
    Ok(MomentResult {
        value,
        route: MomentRoute::Quadrature,
        terms: q.evaluations,
        achieved_tol: q.abs_error / value.abs().max(f64::MIN_POSITIVE),
    })
}

fn discrete_moment(m: &ExpGModel, r: f64) -> Result<MomentResult> {
    let points = m.base().support_points()?;
    let mut value = 0.0;
    for x in points {
        let w = m.pmf(x)?;
        if x == 0.0 {
            if r == 0.0 {
                value += w;
            } else if r < 0.0 {
                return Err(Error::NonexistentMoment { order: r, bound: 0.0 });
            }
        } else {
            value += x.powf(r) * w;
        }
    }
    Ok(MomentResult {
        value,
        route: MomentRoute::Discrete,
        terms: 2,
        achieved_tol: 0.0,
    })
}

/// `E[X^r]` for exp-Weibull(lambda, beta, alpha), real `r > -alpha`:
///
/// `rate(lambda) beta^r Gamma(r/alpha + 1) sum_k Pois(k; lambda) (k+1)^(-r/alpha - 1)`.
///
/// For `lambda > 0` the weights are Poisson probabilities, summed in the log
/// domain outward from the mode. For `lambda < 0` the series alternates with
/// cancellation near `e^|lambda|`; it is summed in extended precision up to
/// `|lambda| = WEIBULL_SERIES_NEGATIVE_LIMIT` and by quadrature beyond.
pub fn expweibull_moment(lambda: f64, beta: f64, alpha: f64, r: f64, pol: &TruncationPolicy) -> Result<MomentResult> {
    let base = BaseDistribution::weibull(alpha, beta)?;
    let model = ExpGModel::new(lambda, base)?;
    let s = r / alpha + 1.0;
    if s <= 0.0 {
        return Err(Error::NonexistentMoment { order: r, bound: -alpha });
    }
    if lambda == 0.0 {
        return Ok(MomentResult::base(base.moment(r)?));
    }
    let prefactor = r * beta.ln() + ln_gamma(s);
    if lambda > 0.0 {
        let (ln_sum, terms, achieved) = poisson_series(lambda, s, pol)?;
        let value = (log_rate_constant(lambda) + prefactor + ln_sum).exp();
        return Ok(MomentResult {
            value,
            route: MomentRoute::WeibullSeries,
            terms,
            achieved_tol: achieved,
        });
    }
    let mu = -lambda;
    if mu > WEIBULL_SERIES_NEGATIVE_LIMIT {
        return moment_quadrature(&model, r);
    }
    let (sum, terms, achieved) = alternating_poisson_series(mu, s, pol)?;
    // rate(-mu) e^mu = rate(mu)
    let value = rate_constant_raw(mu) * prefactor.exp() * sum;
    Ok(MomentResult {
        value,
        route: MomentRoute::WeibullSeries,
        terms,
        achieved_tol: achieved,
    })
}

/// `log sum_k e^-l l^k / k! (k+1)^-s` for `l > 0`.
fn poisson_series(l: f64, s: f64, pol: &TruncationPolicy) -> Result<(f64, usize, f64)> {
    let ln_l = l.ln();
    let ln_term = |k: usize| {
        let kf = k as f64;
        -l + kf * ln_l - ln_gamma(kf + 1.0) - s * (kf + 1.0).ln()
    };
    let mode = l.floor() as usize;
    let shift = ln_term(mode);
    let mut sum = 1.0;
    let mut terms = 1;
    let mut last = 1.0;

    let mut up_done = false;
    let mut k = mode + 1;
    while terms < pol.max_terms {
        let t = (ln_term(k) - shift).exp();
        sum += t;
        terms += 1;
        last = t;
        k += 1;
        if t < pol.rel_tol * sum {
            up_done = true;
            break;
        }
    }
    let mut down_done = mode == 0;
    let mut k = mode;
    while !down_done && terms < pol.max_terms {
        k -= 1;
        let t = (ln_term(k) - shift).exp();
        sum += t;
        terms += 1;
        if t < pol.rel_tol * sum || k == 0 {
            down_done = true;
        }
    }
    if !(up_done && down_done) {
        return Err(Error::Truncation {
            terms,
            partial: (shift + sum.ln()).exp(),
            achieved: last / sum,
        });
    }
    Ok((shift + sum.ln(), terms, last / sum))
}

/// `sum_k (-mu)^k / k! (k+1)^-s` for `mu > 0`, in extended precision.
///
/// The sum is at least `e^-mu` and its largest term is about `e^mu`, which
/// sets the working precision.
fn alternating_poisson_series(mu: f64, s: f64, pol: &TruncationPolicy) -> Result<(f64, usize, f64)> {
    let log2e = std::f64::consts::LOG2_E;
    let bits = 96 + (2.0 * mu * log2e).ceil() as usize + (s.abs() * (mu + 2.0).log2()).ceil() as usize;
    let neg_mu = hp::big(-mu, bits);
    let neg_s = hp::big(-s, bits);
    let mut p = hp::big(1.0, bits);
    let mut sum = hp::big(0.0, bits);
    for k in 0..pol.max_terms {
        if k > 0 {
            p = &p * &neg_mu / hp::big(k as f64, bits);
        }
        let q = (&neg_s * hp::big((k + 1) as f64, bits).ln()).exp();
        let t = &p * &q;
        sum += &t;
        let (tf, sf) = (hp::to_f64(&t).abs(), hp::to_f64(&sum));
        // past k = 2 mu the terms at least halve, so the tail is below |t|
        if k as f64 >= 2.0 * mu + 1.0 && tf < 0.1 * pol.rel_tol * sf.abs() {
            return Ok((sf, k + 1, tf / sf.abs()));
        }
    }
    let sf = hp::to_f64(&sum);
    Err(Error::Truncation {
        terms: pol.max_terms,
        partial: sf,
        achieved: f64::NAN,
    })
}

/// `E[Y^r]` for exp-Fréchet(lambda, beta, alpha), `r < alpha`, through
/// `1/X ~ exp-Weibull(-lambda, 1/beta, alpha)`.
pub fn expfrechet_moment(lambda: f64, beta: f64, alpha: f64, r: f64, pol: &TruncationPolicy) -> Result<MomentResult> {
    BaseDistribution::frechet(alpha, beta)?;
    if r >= alpha {
        return Err(Error::NonexistentMoment { order: r, bound: alpha });
    }
    expweibull_moment(-lambda, 1.0 / beta, alpha, -r, pol)
}

fn check_alternating(lambda: f64) -> Result<()> {
    if lambda.abs() > ALTERNATING_LIMIT {
        Err(Error::UnstableSeries { lambda })
    } else {
        Ok(())
    }
}

/// `rate(lambda) sum_j (-lambda)^j / j! E[Y^r G(Y)^j]`, each probability
/// weighted moment by quadrature under the base distribution.
pub fn moment_pwm_series(m: &ExpGModel, r: u32, pol: &TruncationPolicy) -> Result<MomentResult> {
    let base = *m.base();
    if base.is_discrete() {
        return Err(Error::Unsupported {
            op: "moment_pwm_series",
            family: base.family().name(),
        });
    }
    let rf = f64::from(r);
    let base_moment = base.moment(rf)?;
    let lambda = m.lambda();
    if lambda == 0.0 {
        return Ok(MomentResult::base(base_moment));
    }
    check_alternating(lambda)?;
    let base_model = ExpGModel::new(0.0, base)?;
    let opts = moment_quad_options();
    let mut weight = 1.0;
    let mut sum = 0.0;
    let mut last = f64::INFINITY;
    for j in 0..pol.max_terms {
        if j > 0 {
            weight *= -lambda / j as f64;
        }
        let pwm = if j == 0 {
            base_moment
        } else {
            let jj = j as i32;
            expectation(&base_model, |y| y.powi(r as i32) * base.cdf(y).powi(jj), &opts)?.into_result()?
        };
        let t = weight * pwm;
        sum += t;
        last = t.abs() / sum.abs();
        if j as f64 > lambda.abs() && t.abs() < pol.rel_tol * sum.abs() {
            return Ok(MomentResult {
                value: rate_constant_raw(lambda) * sum,
                route: MomentRoute::PwmSeries,
                terms: j + 1,
                achieved_tol: last,
            });
        }
    }
    Err(Error::Truncation {
        terms: pol.max_terms,
        partial: rate_constant_raw(lambda) * sum,
        achieved: last,
    })
}

/// Beta base: `rate(lambda) sum_j (-lambda)^j / j! sum_k c_{j,k} E[Y^(r+k+ja)]`
/// with `c_{j,k}` the coefficients of the `j`-th power of the beta cdf series
/// and `E[Y^v] = B(v+a, b) / B(a, b)`.
///
/// The inner sums cancel heavily (coefficient magnitudes grow geometrically
/// in `j`), so `c_{j,k}` and the inner sums are computed in extended
/// precision; the outer series is summed in double precision.
pub fn moment_powerseries(m: &ExpGModel, r: f64, pol: &TruncationPolicy) -> Result<MomentResult> {
    let BaseDistribution::Beta { a, b } = *m.base() else {
        return Err(Error::Unsupported {
            op: "moment_powerseries",
            family: m.base().family().name(),
        });
    };
    let base_moment = m.base().moment(r)?;
    let lambda = m.lambda();
    if lambda == 0.0 {
        return Ok(MomentResult::base(base_moment));
    }
    check_alternating(lambda)?;

    // integer b: the cdf series is a polynomial of degree b-1
    let degree = (b == b.round() && b <= pol.max_terms as f64).then(|| b as usize - 1);
    let n_coef = degree.map_or(pol.max_terms, |d| d + 1);
    let growth = {
        let approx = hp::beta_coeffs_unscaled(a, b, n_coef, 64);
        let abs: Vec<f64> = approx.iter().map(|c| hp::to_f64(c).abs()).collect();
        (abs.iter().sum::<f64>() / abs[0]).log2().max(0.0)
    };

    let ln_b = ln_beta(a, b);
    let mut weight = 1.0;
    let mut sum = 0.0;
    let mut inner_tol: f64 = 0.0;
    let mut last = f64::INFINITY;
    for j in 0..pol.max_terms {
        if j > 0 {
            weight *= -lambda / j as f64;
        }
        let pwm = if j == 0 {
            base_moment
        } else {
            let (pwm, tol) = beta_pwm(a, b, r, j as u32, degree, n_coef, growth, ln_b, pol)?;
            if !(pwm >= -1e-12 * base_moment && pwm <= base_moment * (1.0 + 1e-9)) {
                return Err(Error::NoConvergence(format!(
                    "beta power series term {j} evaluated to {pwm}, outside [0, E[Y^r]]"
                )));
            }
            inner_tol = inner_tol.max(tol);
            pwm
        };
        let t = weight * pwm;
        sum += t;
        last = t.abs() / sum.abs();
        if j as f64 > lambda.abs() && t.abs() < pol.rel_tol * sum.abs() {
            return Ok(MomentResult {
                value: rate_constant_raw(lambda) * sum,
                route: MomentRoute::PowerSeries,
                terms: j + 1,
                achieved_tol: last.max(inner_tol),
            });
        }
    }
    Err(Error::Truncation {
        terms: pol.max_terms,
        partial: rate_constant_raw(lambda) * sum,
        achieved: last,
    })
}

/// `E[Y^r G(Y)^j]` for `Y ~ Beta(a, b)` from the power series of `G^j`.
#[allow(clippy::too_many_arguments)]
fn beta_pwm(
    a: f64,
    b: f64,
    r: f64,
    j: u32,
    degree: Option<usize>,
    n_coef: usize,
    growth: f64,
    ln_b: f64,
    pol: &TruncationPolicy,
) -> Result<(f64, f64)> {
    let k_max = match degree {
        Some(d) => (j as usize * d + 1).min(pol.max_terms.max(j as usize * d + 1)),
        None => pol.max_terms,
    };
    let bits = 128 + (2.0 * f64::from(j) * growth).ceil() as usize + 2 * (k_max as f64).log2().ceil() as usize;
    let coef = hp::beta_coeffs_unscaled(a, b, n_coef.min(k_max), bits);
    let c = hp::power_coeffs(&coef, j, k_max, bits);

    // E[Y^(v+k)] = E[Y^v] prod_{i<k} (v+i+a)/(v+i+a+b)
    let v = r + f64::from(j) * a;
    let (ab, bb) = (hp::big(a, bits), hp::big(b, bits));
    let mut rho = hp::big(1.0, bits);
    let mut inner = hp::big(0.0, bits);
    let mut last_term = 0.0;
    for (k, ck) in c.iter().enumerate() {
        if k > 0 {
            let w = hp::big(v + (k - 1) as f64, bits) + &ab;
            rho = &rho * &w / (&w + &bb);
        }
        let t = ck * &rho;
        last_term = hp::to_f64(&t);
        inner += t;
    }
    let inner = hp::to_f64(&inner);
    let scale = (-f64::from(j) * ln_b + ln_beta(v + a, b) - ln_b).exp();
    let tol = if degree.is_some() { 0.0 } else { (last_term / inner).abs() };
    if degree.is_none() && tol > pol.rel_tol.sqrt() {
        return Err(Error::Truncation {
            terms: k_max,
            partial: scale * inner,
            achieved: tol,
        });
    }
    Ok((scale * inner, tol))
}

/// `E[X^r]` by the most reliable route for the family:
/// the exp-Weibull and exp-Fréchet series, the beta power series for
/// integer `b` and `|lambda| <= ALTERNATING_LIMIT`, quadrature otherwise.
pub fn moment(m: &ExpGModel, r: f64, pol: &TruncationPolicy) -> Result<MomentResult> {
    let lambda = m.lambda();
    match *m.base() {
        BaseDistribution::Bernoulli { .. } => discrete_moment(m, r),
        BaseDistribution::Weibull { shape, scale } => expweibull_moment(lambda, scale, shape, r, pol),
        BaseDistribution::Frechet { shape, scale } => expfrechet_moment(lambda, scale, shape, r, pol),
        BaseDistribution::Beta { b, .. } => {
            if lambda == 0.0 {
                return Ok(MomentResult::base(m.base().moment(r)?));
            }
            if b == b.round() && lambda.abs() <= ALTERNATING_LIMIT {
                match moment_powerseries(m, r, pol) {
                    Ok(res) => return Ok(res),
                    Err(Error::Truncation { .. } | Error::UnstableSeries { .. } | Error::NoConvergence(_)) => {}
                    Err(e) => return Err(e),
                }
            }
            moment_quadrature(m, r)
        }
    }
}

/// Mean, variance and standardized third and fourth central moments.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ShapeStats {
    pub mean: f64,
    pub variance: f64,
    pub skewness: f64,
    /// Standardized fourth central moment.
    pub kurtosis: f64,
    /// `kurtosis - 3`.
    pub excess_kurtosis: f64,
}

/// Shape statistics from the raw moments of orders 1 to 4.
pub fn skewness_kurtosis(m: &ExpGModel, pol: &TruncationPolicy) -> Result<ShapeStats> {
    let mut raw = [0.0; 4];
    for (i, slot) in raw.iter_mut().enumerate() {
        *slot = moment(m, (i + 1) as f64, pol)?.value;
    }
    Ok(shape_from_raw(raw))
}

pub fn shape_from_raw(raw: [f64; 4]) -> ShapeStats {
    let [m1, m2, m3, m4] = raw;
    let variance = m2 - m1 * m1;
    let mu3 = m3 - 3.0 * m1 * m2 + 2.0 * m1.powi(3);
    let mu4 = m4 - 4.0 * m1 * m3 + 6.0 * m1 * m1 * m2 - 3.0 * m1.powi(4);
    let kurtosis = mu4 / (variance * variance);
    ShapeStats {
        mean: m1,
        variance,
        skewness: mu3 / variance.powf(1.5),
        kurtosis,
        excess_kurtosis: kurtosis - 3.0,
    }
}
