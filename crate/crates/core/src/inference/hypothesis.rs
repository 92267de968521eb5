//! Likelihood-ratio, Wald and score tests of nested hypotheses.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use super::fit::{mle_fit, FitOptions, FitReport};
use super::{fisher_info, quad_form, score, spd_inverse, Dataset};
use crate::base::Family;
use crate::error::{Error, Result};
use crate::quadrature::chi2_sf;

/// A null hypothesis pinning some components of `(lambda, theta...)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Hypothesis {
    fixed: Vec<(usize, f64)>,
}

impl Hypothesis {
    /// Pins `params[index] = value` for each pair. Indices must be distinct.
    pub fn new(fixed: Vec<(usize, f64)>) -> Result<Self> {
        if fixed.is_empty() {
            return Err(Error::Hypothesis("the null must pin at least one parameter"));
        }
        let mut seen: Vec<usize> = fixed.iter().map(|p| p.0).collect();
        seen.sort_unstable();
        seen.dedup();
        if seen.len() != fixed.len() {
            return Err(Error::Hypothesis("a parameter is pinned twice"));
        }
        let mut fixed = fixed;
        fixed.sort_by_key(|p| p.0);
        Ok(Hypothesis { fixed })
    }

    /// `H0: lambda = 0`, the base model.
    pub fn lambda_zero() -> Self {
        Hypothesis {
            fixed: vec![(0, 0.0)],
        }
    }

    pub fn fixed(&self) -> &[(usize, f64)] {
        &self.fixed
    }

    pub fn df(&self) -> usize {
        self.fixed.len()
    }

    fn indices(&self) -> Vec<usize> {
        self.fixed.iter().map(|p| p.0).collect()
    }

    fn check(&self, family: Family) -> Result<()> {
        let k = 1 + family.n_params();
        if self.fixed.len() >= k {
            return Err(Error::Hypothesis("the null must leave a parameter free"));
        }
        if self.fixed.iter().any(|&(i, _)| i >= k) {
            return Err(Error::Hypothesis("parameter index out of range"));
        }
        Ok(())
    }

    fn restricted_options(&self) -> FitOptions {
        FitOptions {
            fixed: self.fixed.clone(),
            ..FitOptions::default()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum TestKind {
    Lr,
    Wald,
    Score,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TestReport {
    pub kind: TestKind,
    pub statistic: f64,
    pub df: usize,
    pub p_value: f64,
}

impl TestReport {
    fn new(kind: TestKind, statistic: f64, df: usize) -> Result<Self> {
        Ok(TestReport {
            kind,
            statistic,
            df,
            p_value: chi2_sf(statistic, df as f64)?,
        })
    }
}

/// `w = 2 (l(full) - l(restricted))`.
///
/// A restricted maximum above the unrestricted one means the free fit
/// missed the global maximum; the statistic is then reported as 0.
pub fn lr_test(family: Family, data: &Dataset, null: &Hypothesis) -> Result<TestReport> {
    null.check(family)?;
    let full = mle_fit(family, data, &FitOptions::default())?;
    let restricted = mle_fit(family, data, &null.restricted_options())?;
    lr_from_fits(&full, &restricted, null)
}

pub fn lr_from_fits(full: &FitReport, restricted: &FitReport, null: &Hypothesis) -> Result<TestReport> {
    let w = (2.0 * (full.loglik - restricted.loglik)).max(0.0);
    TestReport::new(TestKind::Lr, w, null.df())
}

/// `W = (Theta1_hat - Theta1_0)^T [(n K(Theta_hat))^{-1}]_{11}^{-1} (Theta1_hat - Theta1_0)`.
pub fn wald_test(family: Family, data: &Dataset, null: &Hypothesis) -> Result<TestReport> {
    null.check(family)?;
    let full = mle_fit(family, data, &FitOptions::default())?;
    wald_from_fit(&full, null)
}

pub fn wald_from_fit(full: &FitReport, null: &Hypothesis) -> Result<TestReport> {
    let idx = null.indices();
    let n = full.n as f64;
    let cov = spd_inverse(&(full.info() * n)).ok_or(Error::Singular("information at the unrestricted estimate"))?;
    let block = DMatrix::from_fn(idx.len(), idx.len(), |a, b| cov[(idx[a], idx[b])]);
    let prec = spd_inverse(&block).ok_or(Error::Singular("covariance block of the tested parameters"))?;
    let d = DVector::from_iterator(idx.len(), null.fixed.iter().map(|&(i, v)| full.estimates[i] - v));
    TestReport::new(TestKind::Wald, quad_form(&d, &prec).max(0.0), null.df())
}

/// `S = U1^T [(n K(Theta_tilde))^{-1}]_{11} U1` at the restricted estimate.
///
/// At `lambda = 0` the score's `lambda` component is `sum(1/2 - G)` and the
/// information's is `1/12`, both supplied by the `lambda = 0` branches.
pub fn score_test(family: Family, data: &Dataset, null: &Hypothesis) -> Result<TestReport> {
    null.check(family)?;
    let restricted = mle_fit(family, data, &null.restricted_options())?;
    score_from_fit(&restricted, data, null)
}

pub fn score_from_fit(restricted: &FitReport, data: &Dataset, null: &Hypothesis) -> Result<TestReport> {
    let idx = null.indices();
    let m = restricted.model()?;
    let u = score(&m, data)?;
    let n = data.len() as f64;
    let cov = spd_inverse(&(fisher_info(&m)? * n)).ok_or(Error::Singular("information at the restricted estimate"))?;
    let block = DMatrix::from_fn(idx.len(), idx.len(), |a, b| cov[(idx[a], idx[b])]);
    let u1 = DVector::from_iterator(idx.len(), idx.iter().map(|&i| u[i]));
    TestReport::new(TestKind::Score, quad_form(&u1, &block).max(0.0), null.df())
}
