//! Maximum likelihood fitting.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use super::fisher::{fisher_info, fisher_info_printed_weibull, FisherRoute};
use super::optim::{bfgs, BfgsOptions};
use super::{hessian, inf_norm, loglik, score, spd_inverse, Dataset};
use crate::base::Family;
use crate::error::{Error, Result};
use crate::model::ExpGModel;
use crate::quadrature::normal_quantile;

/// Starting values of `lambda` for the free fit.
pub const LAMBDA_SEEDS: [f64; 5] = [-10.0, -1.0, 0.0, 1.0, 10.0];

/// Gradient norm (largest absolute component of the total score over the
/// free parameters) required to call a fit converged.
pub const GRAD_TOL: f64 = 1e-6;

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

#[derive(Debug, Clone, PartialEq)]
pub struct FitOptions {
    /// `(index, value)` pairs pinning parameters; index 0 is `lambda`.
    pub fixed: Vec<(usize, f64)>,
    /// Confidence level of the intervals.
    pub level: f64,
    pub fisher: FisherRoute,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions {
            fixed: Vec::new(),
            level: 0.95,
            fisher: FisherRoute::Generic,
        }
    }
}

impl FitOptions {
    pub fn fix_lambda(lambda: f64) -> Self {
        FitOptions {
            fixed: vec![(0, lambda)],
            ..Self::default()
        }
    }

    pub fn with_level(mut self, level: f64) -> Self {
        self.level = level;
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CiReport {
    pub level: f64,
    /// `None` for pinned parameters.
    pub intervals: Vec<Option<[f64; 2]>>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StartOutcome {
    pub lambda0: f64,
    pub loglik: Option<f64>,
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FitReport {
    pub family: Family,
    pub n: usize,
    pub parameters: Vec<&'static str>,
    pub estimates: Vec<f64>,
    pub fixed: Vec<bool>,
    pub loglik: f64,
    /// Unit information at the estimate.
    pub info_matrix: Vec<Vec<f64>>,
    /// `(n K)^{-1}` over the free parameters, zero rows for pinned ones.
    pub covariance: Option<Vec<Vec<f64>>>,
    pub std_errors: Vec<Option<f64>>,
    pub ci: Option<CiReport>,
    pub information_singular: bool,
    pub converged: bool,
    pub iterations: usize,
    pub grad_norm: f64,
    pub starts: Vec<StartOutcome>,
}

impl FitReport {
    pub fn model(&self) -> Result<ExpGModel> {
        ExpGModel::from_params(self.family, &self.estimates)
    }

    pub fn info(&self) -> DMatrix<f64> {
        let k = self.info_matrix.len();
        DMatrix::from_fn(k, k, |i, j| self.info_matrix[i][j])
    }

    pub fn free_indices(&self) -> Vec<usize> {
        (0..self.fixed.len()).filter(|&i| !self.fixed[i]).collect()
    }
}

fn mean_sd(v: impl Iterator<Item = f64> + Clone) -> (f64, f64) {
    let n = v.clone().count() as f64;
    let mean = v.clone().sum::<f64>() / n;
    let var = v.map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0).max(1.0);
    (mean, var.sqrt())
}

/// Moment-based starting `theta` for the base family.
///
/// Weibull and Fréchet use the mean and spread of `log x`, which are
/// `log beta -+ gamma/alpha` and `pi / (alpha sqrt 6)`; beta uses the
/// ordinary mean and variance.
pub fn base_start(family: Family, data: &Dataset) -> Result<Vec<f64>> {
    let xs = data.values();
    match family {
        Family::Weibull | Family::Frechet => {
            let (m, s) = mean_sd(xs.iter().map(|x| x.ln()));
            let alpha = (std::f64::consts::PI / (s * 6f64.sqrt())).clamp(1e-2, 1e3);
            let shift = EULER_GAMMA / alpha;
            let beta = if family == Family::Weibull {
                (m + shift).exp()
            } else {
                (m - shift).exp()
            };
            Ok(vec![alpha, beta])
        }
        Family::Beta => {
            let (m, s) = mean_sd(xs.iter().copied());
            let common = m * (1.0 - m) / (s * s) - 1.0;
            if common.is_finite() && common > 0.0 {
                Ok(vec![(m * common).max(1e-2), ((1.0 - m) * common).max(1e-2)])
            } else {
                Ok(vec![1.0, 1.0])
            }
        }
        Family::Bernoulli => Err(Error::Unsupported {
            op: "maximum likelihood fit",
            family: family.name(),
        }),
    }
}

/// Free-parameter problem in `(lambda, log theta)` coordinates.
struct Problem<'a> {
    family: Family,
    data: &'a Dataset,
    template: Vec<f64>,
    free: Vec<usize>,
}

impl Problem<'_> {
    fn to_params(&self, z: &[f64]) -> Vec<f64> {
        let mut p = self.template.clone();
        for (&i, &v) in self.free.iter().zip(z) {
            p[i] = if i == 0 { v } else { v.exp() };
        }
        p
    }

    fn to_z(&self, p: &[f64]) -> Vec<f64> {
        self.free.iter().map(|&i| if i == 0 { p[0] } else { p[i].ln() }).collect()
    }

    /// `-loglik / n` and its gradient in `z`.
    fn objective(&self, z: &[f64]) -> Option<(f64, Vec<f64>)> {
        let p = self.to_params(z);
        let m = ExpGModel::from_params(self.family, &p).ok()?;
        let n = self.data.len() as f64;
        let l = loglik(&m, self.data).ok()?;
        let s = score(&m, self.data).ok()?;
        let g = self
            .free
            .iter()
            .map(|&i| -s[i] * if i == 0 { 1.0 } else { p[i] } / n)
            .collect();
        Some((-l / n, g))
    }

    fn free_grad_norm(&self, p: &[f64]) -> Option<f64> {
        let m = ExpGModel::from_params(self.family, p).ok()?;
        let s = score(&m, self.data).ok()?;
        let g: Vec<f64> = self.free.iter().map(|&i| s[i]).collect();
        Some(inf_norm(&g))
    }

    /// Newton steps on the free parameters with the observed Hessian.
    fn polish(&self, mut p: Vec<f64>) -> (Vec<f64>, usize) {
        let mut steps = 0;
        for _ in 0..50 {
            let Ok(m) = ExpGModel::from_params(self.family, &p) else { break };
            let (Ok(l0), Ok(s), Ok(h)) = (loglik(&m, self.data), score(&m, self.data), hessian(&m, self.data)) else {
                break;
            };
            let g = DVector::from_iterator(self.free.len(), self.free.iter().map(|&i| s[i]));
            let g0 = g.amax();
            if g0 <= 1e-10 {
                break;
            }
            let neg_h = DMatrix::from_fn(self.free.len(), self.free.len(), |a, b| -h[(self.free[a], self.free[b])]);
            let Some(chol) = neg_h.cholesky() else { break };
            let delta = chol.solve(&g);
            let mut t = 1.0;
            let mut accepted = false;
            while t > 1e-4 {
                let mut q = p.clone();
                for (a, &i) in self.free.iter().enumerate() {
                    q[i] += t * delta[a];
                }
                if let Ok(mq) = ExpGModel::from_params(self.family, &q) {
                    if let (Ok(lq), Some(gq)) = (loglik(&mq, self.data), self.free_grad_norm(&q)) {
                        if lq >= l0 - 1e-9 * l0.abs().max(1.0) && gq < g0 {
                            p = q;
                            accepted = true;
                            break;
                        }
                    }
                }
                t *= 0.5;
            }
            if !accepted {
                break;
            }
            steps += 1;
        }
        (p, steps)
    }
}

struct Candidate {
    params: Vec<f64>,
    loglik: f64,
    grad_norm: f64,
    iterations: usize,
}

fn run_start(problem: &Problem, start: &[f64]) -> Option<Candidate> {
    let z0 = problem.to_z(start);
    let r = bfgs(|z| problem.objective(z), &z0, &BfgsOptions::default())?;
    let (params, polish_steps) = problem.polish(problem.to_params(&r.x));
    let m = ExpGModel::from_params(problem.family, &params).ok()?;
    let loglik = loglik(&m, problem.data).ok()?;
    let grad_norm = problem.free_grad_norm(&params)?;
    Some(Candidate {
        params,
        loglik,
        grad_norm,
        iterations: r.iterations + polish_steps,
    })
}

fn validate_fixed(family: Family, opts: &FitOptions) -> Result<Vec<Option<f64>>> {
    let k = 1 + family.n_params();
    let mut fixed = vec![None; k];
    for &(i, v) in &opts.fixed {
        if i >= k {
            return Err(Error::Parameter {
                name: "fixed",
                value: i as f64,
                reason: "parameter index out of range",
            });
        }
        if !v.is_finite() || (i > 0 && v <= 0.0) {
            return Err(Error::Parameter {
                name: family.param_names()[i.saturating_sub(1).min(family.n_params() - 1)],
                value: v,
                reason: "pinned value is outside the parameter space",
            });
        }
        fixed[i] = Some(v);
    }
    Ok(fixed)
}

/// Maximize the likelihood over the free parameters.
///
/// `theta` starts from the base-family fit (itself started from moments);
/// `lambda` from each of [`LAMBDA_SEEDS`] unless pinned. The converged start
/// with the largest log-likelihood is reported.
pub fn mle_fit(family: Family, data: &Dataset, opts: &FitOptions) -> Result<FitReport> {
    if family != data.family() {
        return Err(Error::Unsupported {
            op: "fit of data validated for another family",
            family: family.name(),
        });
    }
    if !(opts.level > 0.0 && opts.level < 1.0) {
        return Err(Error::Parameter {
            name: "level",
            value: opts.level,
            reason: "must lie strictly inside (0, 1)",
        });
    }
    let theta0 = base_start(family, data)?;
    let fixed = validate_fixed(family, opts)?;
    let free: Vec<usize> = (0..fixed.len()).filter(|&i| fixed[i].is_none()).collect();
    if data.len() < free.len() + 2 {
        return Err(Error::Parameter {
            name: "n",
            value: data.len() as f64,
            reason: "need at least two more observations than free parameters",
        });
    }
    let mut template = vec![0.0];
    template.extend(&theta0);
    for (i, v) in fixed.iter().enumerate() {
        if let Some(v) = v {
            template[i] = *v;
        }
    }

    // base fit: lambda pinned at 0 (or its pinned value), theta free
    let theta_free: Vec<usize> = free.iter().copied().filter(|&i| i > 0).collect();
    let mut base_template = template.clone();
    if fixed[0].is_none() {
        base_template[0] = 0.0;
    }
    if !theta_free.is_empty() {
        let base_problem = Problem {
            family,
            data,
            template: base_template.clone(),
            free: theta_free,
        };
        if let Some(c) = run_start(&base_problem, &base_template) {
            if c.loglik.is_finite() {
                base_template = c.params;
            }
        }
    }

    let problem = Problem {
        family,
        data,
        template: template.clone(),
        free: free.clone(),
    };
    let seeds: Vec<f64> = match fixed[0] {
        Some(v) => vec![v],
        None => LAMBDA_SEEDS.to_vec(),
    };
    let mut starts = Vec::with_capacity(seeds.len());
    let mut best: Option<Candidate> = None;
    let mut best_any: Option<Candidate> = None;
    for &l0 in &seeds {
        let mut start = base_template.clone();
        start[0] = l0;
        let outcome = if free.is_empty() {
            let m = ExpGModel::from_params(family, &start)?;
            Some(Candidate {
                loglik: loglik(&m, data)?,
                params: start,
                grad_norm: 0.0,
                iterations: 0,
            })
        } else {
            run_start(&problem, &start)
        };
        let converged = outcome.as_ref().is_some_and(|c| c.grad_norm <= GRAD_TOL && c.loglik.is_finite());
        starts.push(StartOutcome {
            lambda0: l0,
            loglik: outcome.as_ref().map(|c| c.loglik),
            converged,
        });
        if let Some(c) = outcome {
            if converged && best.as_ref().is_none_or(|b| c.loglik > b.loglik) {
                best = Some(Candidate { ..c });
            } else if c.loglik.is_finite() && best_any.as_ref().is_none_or(|b| c.loglik > b.loglik) {
                best_any = Some(c);
            }
        }
    }
    let Some(best) = best else {
        let (estimates, loglik, grad_norm) = best_any.map_or((template, f64::NAN, f64::NAN), |c| {
            (c.params, c.loglik, c.grad_norm)
        });
        return Err(Error::FitFailed {
            estimates,
            loglik,
            grad_norm,
        });
    };
    report(family, data, opts, &fixed, best, starts)
}

fn report(
    family: Family,
    data: &Dataset,
    opts: &FitOptions,
    fixed: &[Option<f64>],
    best: Candidate,
    starts: Vec<StartOutcome>,
) -> Result<FitReport> {
    let m = ExpGModel::from_params(family, &best.params)?;
    let info = match opts.fisher {
        FisherRoute::Generic => fisher_info(&m)?,
        FisherRoute::PrintedWeibull => fisher_info_printed_weibull(&m)?,
    };
    let k = info.nrows();
    let free: Vec<usize> = (0..k).filter(|&i| fixed[i].is_none()).collect();
    let n = data.len() as f64;
    let block = DMatrix::from_fn(free.len(), free.len(), |a, b| n * info[(free[a], free[b])]);
    let cov_free = if free.is_empty() { None } else { spd_inverse(&block) };
    let information_singular = !free.is_empty() && cov_free.is_none();
    let mut covariance = None;
    let mut std_errors = vec![None; k];
    let mut ci = None;
    if let Some(c) = &cov_free {
        let mut full = vec![vec![0.0; k]; k];
        for (a, &i) in free.iter().enumerate() {
            for (b, &j) in free.iter().enumerate() {
                full[i][j] = c[(a, b)];
            }
            std_errors[i] = Some(c[(a, a)].sqrt());
        }
        covariance = Some(full);
        let z = normal_quantile(0.5 + 0.5 * opts.level)?;
        ci = Some(CiReport {
            level: opts.level,
            intervals: (0..k)
                .map(|i| std_errors[i].map(|se| [best.params[i] - z * se, best.params[i] + z * se]))
                .collect(),
        });
    }
    let mut parameters = vec!["lambda"];
    parameters.extend(family.param_names());
    Ok(FitReport {
        family,
        n: data.len(),
        parameters,
        estimates: best.params,
        fixed: fixed.iter().map(Option::is_some).collect(),
        loglik: best.loglik,
        info_matrix: (0..k).map(|i| (0..k).map(|j| info[(i, j)]).collect()).collect(),
        covariance,
        std_errors,
        ci,
        information_singular,
        converged: true,
        iterations: best.iterations,
        grad_norm: best.grad_norm,
        starts,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::base::BaseDistribution;
    use crate::fatigue::FATIGUE_LIFE;

    #[test]
    fn fatigue_weibull_fit() {
        let d = Dataset::new(FATIGUE_LIFE.to_vec(), Family::Weibull).unwrap();
        let r = mle_fit(Family::Weibull, &d, &FitOptions::fix_lambda(0.0)).unwrap();
        assert!(r.converged && r.grad_norm <= GRAD_TOL);
        assert!((r.loglik + 459.0999).abs() < 1e-3, "{r:?}");
        assert!((r.estimates[1] / 5.9790 - 1.0).abs() < 1e-4);
        assert!((r.estimates[2] / 143.3150 - 1.0).abs() < 1e-5);
        assert_eq!(r.fixed, vec![true, false, false]);
        assert!(r.std_errors[0].is_none() && r.std_errors[1].is_some());
    }

    #[test]
    fn fatigue_free_fit_finds_the_global_maximum() {
        let d = Dataset::new(FATIGUE_LIFE.to_vec(), Family::Weibull).unwrap();
        let r = mle_fit(Family::Weibull, &d, &FitOptions::default()).unwrap();
        assert!(r.grad_norm <= GRAD_TOL);
        // independent scipy multistart optimum
        assert!((r.loglik + 452.0422).abs() < 1e-3, "{r:?}");
        assert!((r.estimates[0] + 10.884).abs() < 0.01);
        let ci = r.ci.unwrap();
        for (i, iv) in ci.intervals.iter().enumerate() {
            let [lo, hi] = iv.unwrap();
            assert!(lo < r.estimates[i] && r.estimates[i] < hi);
        }
    }

    #[test]
    fn simulated_beta_fit_recovers_parameters() {
        let m = ExpGModel::new(1.5, BaseDistribution::beta(2.0, 3.0).unwrap()).unwrap();
        let d = Dataset::new(m.sample(4000, 11), Family::Beta).unwrap();
        let r = mle_fit(Family::Beta, &d, &FitOptions::default()).unwrap();
        let se = r.std_errors.iter().map(|s| s.unwrap()).collect::<Vec<_>>();
        for (i, truth) in [1.5, 2.0, 3.0].iter().enumerate() {
            assert!((r.estimates[i] - truth).abs() < 4.0 * se[i], "{r:?}");
        }
    }

    #[test]
    fn rejects_bad_requests() {
        let d = Dataset::new(vec![0.0, 1.0, 1.0, 0.0], Family::Bernoulli).unwrap();
        assert!(mle_fit(Family::Bernoulli, &d, &FitOptions::default()).is_err());
        let d = Dataset::new(vec![1.0, 2.0, 3.0], Family::Weibull).unwrap();
        assert!(mle_fit(Family::Weibull, &d, &FitOptions::default()).is_err());
        let opts = FitOptions::default().with_level(1.0);
        let d = Dataset::new(vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0], Family::Weibull).unwrap();
        assert!(mle_fit(Family::Weibull, &d, &opts).is_err());
    }
}
