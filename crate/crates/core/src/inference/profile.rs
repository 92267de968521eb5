//! Modified profile likelihood for `theta`.
//!
//! Each observation gets its own plug-in `lambda_i(theta) = (dG . U*) / (dG . dG)`,
//! and `theta` solves `V_n(theta) = sum_i V_i(theta) = 0` where
//! `V_i = mean_transformed(lambda_i) d lambda_i + U* - d lambda_i G - lambda_i dG`.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::fit::{mle_fit, FitOptions};
use super::Dataset;
use crate::base::{BaseDistribution, Family};
use crate::error::{Error, Result};
use crate::quadrature::fd_jacobian;
use crate::transform::{log_rate_constant, mean_transformed};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProfileVariant {
    /// `d lambda_i` is the true gradient of the ratio.
    #[default]
    Exact,
    /// `d lambda_i` built from the Hessian diagonals, applied elementwise.
    Printed,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProfileObservation {
    pub lambda: f64,
    pub grad_lambda: Vec<f64>,
    /// Contribution to the estimating function.
    pub v: Vec<f64>,
    /// `log rate(lambda_i) + log g - lambda_i G`.
    pub loglik: f64,
}

/// Plug-in `lambda` and estimating-function contribution of one observation.
pub fn profile_observation(base: &BaseDistribution, x: f64, variant: ProfileVariant) -> Result<ProfileObservation> {
    if base.is_discrete() {
        return Err(Error::Unsupported {
            op: "modified profile likelihood",
            family: base.family().name(),
        });
    }
    let u = base.score(x)?;
    let dg = base.cdf_gradient(x)?;
    let hg = base.cdf_hessian(x)?;
    let ju = base.score_jacobian(x)?;
    let g = base.cdf(x);
    let k = u.len();
    let num: f64 = dg.iter().zip(&u).map(|(a, b)| a * b).sum();
    let den: f64 = dg.iter().map(|a| a * a).sum();
    if !(den > 0.0 && den.is_finite()) {
        return Err(Error::Singular("dG/dtheta vanishes at an observation"));
    }
    let lambda = num / den;
    let grad_lambda: Vec<f64> = (0..k)
        .map(|i| match variant {
            ProfileVariant::Exact => {
                let d_num: f64 = (0..k).map(|j| hg[(i, j)] * u[j] + ju[(j, i)] * dg[j]).sum();
                let d_den: f64 = (0..k).map(|j| 2.0 * hg[(i, j)] * dg[j]).sum();
                (d_num - lambda * d_den) / den
            }
            ProfileVariant::Printed => {
                let d_num = hg[(i, i)] * u[i] + dg[i] * ju[(i, i)];
                let d_den = 2.0 * dg[i] * hg[(i, i)];
                (d_num * den - num * d_den) / (den * den)
            }
        })
        .collect();
    let dl = mean_transformed(lambda) - g;
    let v = (0..k).map(|i| dl * grad_lambda[i] + u[i] - lambda * dg[i]).collect();
    let loglik = log_rate_constant(lambda) + base.logpdf(x)? - lambda * g;
    Ok(ProfileObservation {
        lambda,
        grad_lambda,
        v,
        loglik,
    })
}

/// `(V_n(theta), sum_i lambda_i / n)`.
pub fn estimating_function(base: &BaseDistribution, data: &Dataset, variant: ProfileVariant) -> Result<(Vec<f64>, f64)> {
    let mut total = vec![0.0; base.n_params()];
    let mut lambda_sum = 0.0;
    for &x in data.values() {
        let o = profile_observation(base, x, variant)?;
        for (t, v) in total.iter_mut().zip(&o.v) {
            *t += v;
        }
        lambda_sum += o.lambda;
    }
    Ok((total, lambda_sum / data.len() as f64))
}

/// `sum_i` of the per-observation profiled log-likelihoods.
pub fn profile_loglik(base: &BaseDistribution, data: &Dataset) -> Result<f64> {
    let mut total = 0.0;
    for &x in data.values() {
        total += profile_observation(base, x, ProfileVariant::Exact)?.loglik;
    }
    Ok(total)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProfileReport {
    pub family: Family,
    pub n: usize,
    pub variant: ProfileVariant,
    pub parameters: &'static [&'static str],
    pub theta: Vec<f64>,
    /// Mean of the per-observation plug-in `lambda` at `theta`.
    pub mean_lambda: f64,
    /// Largest absolute component of `V_n` at `theta`.
    pub residual_norm: f64,
    pub converged: bool,
    pub iterations: usize,
    /// `theta` part of the full maximum likelihood fit, for comparison.
    pub mle_theta: Option<Vec<f64>>,
}

const MAX_ITER: usize = 100;

/// Solve `V_n(theta) = 0` by damped Newton in `log theta`, starting from the
/// base-model fit. The Jacobian is taken by central differences so both
/// variants share the solver.
pub fn modified_profile_fit(family: Family, data: &Dataset, variant: ProfileVariant) -> Result<ProfileReport> {
    if family.is_discrete() {
        return Err(Error::Unsupported {
            op: "modified profile likelihood",
            family: family.name(),
        });
    }
    let base_fit = mle_fit(family, data, &FitOptions::fix_lambda(0.0))?;
    let mle_theta = mle_fit(family, data, &FitOptions::default())
        .ok()
        .map(|r| r.estimates[1..].to_vec());
    let n = data.len() as f64;
    let tol = 1e-9 * n;
    let residual = |z: &[f64]| -> Result<(Vec<f64>, f64)> {
        let theta: Vec<f64> = z.iter().map(|v| v.exp()).collect();
        let base = BaseDistribution::from_params(family, &theta)?;
        estimating_function(&base, data, variant)
    };
    let norm = |v: &[f64]| v.iter().fold(0.0_f64, |a, x| a.max(x.abs()));

    let mut z: Vec<f64> = base_fit.estimates[1..].iter().map(|v| v.ln()).collect();
    let (mut r, mut mean_lambda) = residual(&z)?;
    let mut iterations = 0;
    while norm(&r) > tol && iterations < MAX_ITER {
        iterations += 1;
        let jac = fd_jacobian(|q| residual(q).map_or_else(|_| vec![f64::NAN; q.len()], |v| v.0), &z, 1e-10);
        if jac.iter().any(|v| !v.is_finite()) {
            break;
        }
        let k = z.len();
        let rhs = -DVector::from_column_slice(&r);
        let Some(step) = DMatrix::from_iterator(k, k, jac.iter().copied()).lu().solve(&rhs) else {
            return Err(Error::Singular("Jacobian of the estimating function"));
        };
        let mut t = 1.0;
        let mut accepted = false;
        while t > 1e-6 {
            let cand: Vec<f64> = z.iter().zip(step.iter()).map(|(a, s)| a + t * s).collect();
            if let Ok((rc, lc)) = residual(&cand) {
                if norm(&rc) < norm(&r) {
                    z = cand;
                    r = rc;
                    mean_lambda = lc;
                    accepted = true;
                    break;
                }
            }
            t *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    let residual_norm = norm(&r);
    Ok(ProfileReport {
        family,
        n: data.len(),
        variant,
        parameters: family.param_names(),
        theta: z.iter().map(|v| v.exp()).collect(),
        mean_lambda,
        residual_norm,
        converged: residual_norm <= tol,
        iterations,
        mle_theta,
    })
}
