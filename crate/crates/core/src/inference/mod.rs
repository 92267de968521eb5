//! Likelihood inference for exp-G models: log-likelihood, score, observed
//! and expected information, maximum likelihood fits, the likelihood-ratio,
//! Wald and score tests, and the modified profile estimator for `theta`.
//!
//! Parameter vectors are `(lambda, theta...)` with `theta` in the family's
//! canonical order.

mod fisher;
mod fit;
mod hypothesis;
mod optim;
mod profile;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::base::Family;
use crate::error::{Error, Result};
use crate::model::ExpGModel;
use crate::transform::{lambda_information, mean_transformed};

pub use fisher::{fisher_info, fisher_info_printed_weibull, FisherRoute};
pub use fit::{base_start, mle_fit, CiReport, FitOptions, FitReport, StartOutcome, GRAD_TOL, LAMBDA_SEEDS};
pub use hypothesis::{lr_from_fits, lr_test, score_from_fit, score_test, wald_from_fit, wald_test, Hypothesis, TestKind, TestReport};
pub use optim::{bfgs, BfgsOptions, BfgsResult};
pub use profile::{
    estimating_function, modified_profile_fit, profile_loglik, profile_observation, ProfileObservation, ProfileReport,
    ProfileVariant,
};

/// Observations checked against the support of a family, in ascending order.
///
/// Sorting makes every sum over the data independent of the input order.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Dataset {
    values: Vec<f64>,
    family: Family,
}

impl Dataset {
    pub fn new(values: Vec<f64>, family: Family) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::EmptyData);
        }
        let probe = family_probe(family);
        for (index, &value) in values.iter().enumerate() {
            if !value.is_finite() || !probe.base().in_support(value) {
                return Err(Error::Data {
                    index,
                    value,
                    family: family.name(),
                });
            }
        }
        let mut values = values;
        values.sort_by(f64::total_cmp);
        Ok(Dataset { values, family })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn family(&self) -> Family {
        self.family
    }
}

/// A model of the family with arbitrary valid parameters; support only.
fn family_probe(family: Family) -> ExpGModel {
    let theta: &[f64] = match family {
        Family::Bernoulli => &[0.5],
        _ => &[1.0, 1.0],
    };
    let mut p = vec![0.0];
    p.extend_from_slice(theta);
    ExpGModel::from_params(family, &p).expect("probe parameters are valid")
}

fn check_family(m: &ExpGModel, data: &Dataset) -> Result<()> {
    if m.family() != data.family() {
        return Err(Error::Unsupported {
            op: "likelihood of data checked against another family",
            family: m.family().name(),
        });
    }
    Ok(())
}

/// Log-likelihood of one observation.
pub fn loglik_observation(m: &ExpGModel, x: f64) -> Result<f64> {
    if m.base().is_discrete() {
        return Ok(m.pmf(x)?.ln());
    }
    m.logpdf(x)
}

/// `sum_i [log rate(lambda) + log g(x_i) - lambda G(x_i)]`.
pub fn loglik(m: &ExpGModel, data: &Dataset) -> Result<f64> {
    check_family(m, data)?;
    let mut total = 0.0;
    for &x in data.values() {
        total += loglik_observation(m, x)?;
    }
    Ok(total)
}

/// Per-observation score `(mean_transformed(lambda) - G, U* - lambda dG/dtheta)`.
///
/// `mean_transformed(0) = 1/2`, so the `lambda` component is `1/2 - G(x)` at
/// `lambda = 0`.
pub fn score_observation(m: &ExpGModel, x: f64) -> Result<Vec<f64>> {
    let base = m.base();
    let l = m.lambda();
    let u = base.score(x)?;
    let dg = base.cdf_gradient(x)?;
    let mut s = Vec::with_capacity(1 + u.len());
    s.push(mean_transformed(l) - base.cdf(x));
    s.extend(u.iter().zip(&dg).map(|(ui, gi)| ui - l * gi));
    Ok(s)
}

pub fn score(m: &ExpGModel, data: &Dataset) -> Result<Vec<f64>> {
    check_family(m, data)?;
    let mut total = vec![0.0; 1 + m.base().n_params()];
    for &x in data.values() {
        for (t, s) in total.iter_mut().zip(score_observation(m, x)?) {
            *t += s;
        }
    }
    Ok(total)
}

/// Per-observation Hessian of the log-likelihood:
///
/// `[[-lambda_information(lambda), -dG^T], [-dG, dU* - lambda d2G]]`.
pub fn hessian_observation(m: &ExpGModel, x: f64) -> Result<DMatrix<f64>> {
    let base = m.base();
    let l = m.lambda();
    let k = base.n_params();
    let dg = base.cdf_gradient(x)?;
    let ju = base.score_jacobian(x)?;
    let hg = base.cdf_hessian(x)?;
    let mut h = DMatrix::zeros(k + 1, k + 1);
    h[(0, 0)] = -lambda_information(l);
    for i in 0..k {
        h[(0, i + 1)] = -dg[i];
        h[(i + 1, 0)] = -dg[i];
        for j in 0..k {
            h[(i + 1, j + 1)] = ju[(i, j)] - l * hg[(i, j)];
        }
    }
    Ok(h)
}

/// Observed Hessian of the total log-likelihood.
pub fn hessian(m: &ExpGModel, data: &Dataset) -> Result<DMatrix<f64>> {
    check_family(m, data)?;
    let k = m.base().n_params();
    let mut total = DMatrix::zeros(k + 1, k + 1);
    for &x in data.values() {
        total += hessian_observation(m, x)?;
    }
    Ok(total)
}

/// Maximum absolute component.
pub(crate) fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |acc: f64, x| acc.max(x.abs()))
}

/// Inverse of a symmetric positive definite matrix, `None` if it is not.
pub(crate) fn spd_inverse(m: &DMatrix<f64>) -> Option<DMatrix<f64>> {
    let chol = m.clone().cholesky()?;
    let inv = chol.inverse();
    inv.iter().all(|v| v.is_finite()).then_some(inv)
}

pub(crate) fn quad_form(v: &DVector<f64>, m: &DMatrix<f64>) -> f64 {
    (v.transpose() * m * v)[(0, 0)]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fatigue::FATIGUE_LIFE;
    use crate::quadrature::{fd_gradient, fd_hessian};

    fn data(values: &[f64], family: Family) -> Dataset {
        Dataset::new(values.to_vec(), family).unwrap()
    }

    #[test]
    fn dataset_validation_names_the_index() {
        let e = Dataset::new(vec![0.5, 0.2, 1.5], Family::Beta).unwrap_err();
        assert!(matches!(e, Error::Data { index: 2, .. }), "{e:?}");
        assert!(matches!(Dataset::new(vec![], Family::Weibull), Err(Error::EmptyData)));
        assert!(Dataset::new(vec![1.0, -1.0], Family::Weibull).is_err());
        assert!(Dataset::new(vec![0.0, 1.0, 1.0], Family::Bernoulli).is_ok());
        let d = data(&[3.0, 1.0, 2.0], Family::Weibull);
        assert_eq!(d.values(), &[1.0, 2.0, 3.0]);
    }

    #[test]
    fn fatigue_weibull_loglik() {
        let d = data(&FATIGUE_LIFE, Family::Weibull);
        let m = ExpGModel::from_params(Family::Weibull, &[0.0, 5.9790, 143.3150]).unwrap();
        assert!((loglik(&m, &d).unwrap() + 459.0999).abs() < 5e-4);
        let m = ExpGModel::from_params(Family::Weibull, &[-41.645738, 1.642486, 55.670932]).unwrap();
        assert!((loglik(&m, &d).unwrap() + 454.3272).abs() < 5e-4);
    }

    #[test]
    fn score_and_hessian_match_finite_differences() {
        let cases: [(Family, &[f64], &[f64]); 4] = [
            (Family::Weibull, &[0.7, 1.3, 2.1, 0.4], &[1.5, 1.2]),
            (Family::Frechet, &[0.7, 1.3, 2.1, 0.4], &[2.5, 0.9]),
            (Family::Beta, &[0.1, 0.35, 0.6, 0.92], &[2.0, 3.0]),
            (Family::Weibull, &[70.0, 120.0, 212.0], &[5.0, 140.0]),
        ];
        for (family, xs, theta) in cases {
            let d = data(xs, family);
            for l in [-5.0, 0.0, 5.0] {
                let mut p = vec![l];
                p.extend_from_slice(theta);
                let m = ExpGModel::from_params(family, &p).unwrap();
                let f = |q: &[f64]| loglik(&ExpGModel::from_params(family, q).unwrap(), &d).unwrap();
                let s = score(&m, &d).unwrap();
                let fd = fd_gradient(f, &p, 1e-12);
                for (a, b) in s.iter().zip(&fd) {
                    assert!((a - b).abs() <= 1e-6 * b.abs().max(1.0), "{family} l={l}: {s:?} {fd:?}");
                }
                let h = hessian(&m, &d).unwrap();
                let fh = fd_hessian(f, &p, 1e-10);
                for (a, b) in h.iter().zip(fh.iter()) {
                    assert!((a - b).abs() <= 1e-4 * b.abs().max(1.0), "{family} l={l}: {h} {fh}");
                }
            }
        }
    }

    #[test]
    fn lambda_zero_branch() {
        let d = data(&[0.3, 1.1, 2.4], Family::Weibull);
        let m = ExpGModel::from_params(Family::Weibull, &[0.0, 1.5, 1.2]).unwrap();
        let s = score(&m, &d).unwrap();
        let expected: f64 = d.values().iter().map(|&x| 0.5 - m.base().cdf(x)).sum();
        assert_eq!(s[0], expected);
        let base: f64 = d.values().iter().map(|&x| m.base().logpdf(x).unwrap()).sum();
        assert_eq!(loglik(&m, &d).unwrap(), base);
        for eps in [-1e-7, 1e-7] {
            let n = m.with_lambda(eps).unwrap();
            assert!((loglik(&n, &d).unwrap() - base).abs() < 1e-4);
            let sn = score(&n, &d).unwrap();
            assert!(sn.iter().zip(&s).all(|(a, b)| (a - b).abs() < 1e-4));
        }
    }

    #[test]
    fn bernoulli_loglik() {
        let d = data(&[0.0, 1.0, 1.0], Family::Bernoulli);
        let m = ExpGModel::from_params(Family::Bernoulli, &[1.0, 0.5]).unwrap();
        let expected = m.pmf(0.0).unwrap().ln() + 2.0 * m.pmf(1.0).unwrap().ln();
        assert!((loglik(&m, &d).unwrap() - expected).abs() < 1e-14);
    }
}
