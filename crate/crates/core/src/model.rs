use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::base::{BaseDistribution, Family};
use crate::error::{Error, Result};
use crate::transform::{
    log_rate_constant, rate_constant_raw, texp_cdf_raw, texp_quantile_raw, Lambda, UnitValue,
};

/// `exp-G(lambda, theta)`: the cdf `F_lambda(G(x; theta))`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExpGModel {
    lambda: Lambda,
    base: BaseDistribution,
}

impl ExpGModel {
    pub fn new(lambda: f64, base: BaseDistribution) -> Result<Self> {
        Ok(ExpGModel {
            lambda: Lambda::new(lambda)?,
            base,
        })
    }

    /// Build from `(lambda, theta...)` in canonical order.
    pub fn from_params(family: Family, params: &[f64]) -> Result<Self> {
        let (&lambda, theta) = params.split_first().ok_or(Error::Parameter {
            name: "lambda",
            value: f64::NAN,
            reason: "parameter vector is empty",
        })?;
        Self::new(lambda, BaseDistribution::from_params(family, theta)?)
    }

    /// `(lambda, theta...)`.
    pub fn params(&self) -> Vec<f64> {
        let mut p = Vec::with_capacity(1 + self.base.n_params());
        p.push(self.lambda.get());
        p.extend(self.base.params());
        p
    }

    pub fn with_lambda(&self, lambda: f64) -> Result<Self> {
        Self::new(lambda, self.base)
    }

    pub fn lambda(&self) -> f64 {
        self.lambda.get()
    }

    pub fn base(&self) -> &BaseDistribution {
        &self.base
    }

    pub fn family(&self) -> Family {
        self.base.family()
    }

    pub fn cdf(&self, x: f64) -> f64 {
        texp_cdf_raw(self.lambda(), self.base.cdf(x))
    }

    /// `1 - F(x)`, via `1 - F_lambda(u) = F_{-lambda}(1 - u)`.
    pub fn survival(&self, x: f64) -> f64 {
        texp_cdf_raw(-self.lambda(), self.base.sf(x))
    }

    pub fn pdf(&self, x: f64) -> Result<f64> {
        let g = self.base.pdf(x)?;
        if g == 0.0 {
            return Ok(0.0);
        }
        Ok(self.logpdf(x)?.exp())
    }

    /// `log rate(lambda) + log g(x) - lambda G(x)`.
    pub fn logpdf(&self, x: f64) -> Result<f64> {
        let lg = self.base.logpdf(x)?;
        let l = self.lambda();
        Ok(log_rate_constant(l) + lg - l * self.base.cdf(x))
    }

    /// `f / (1 - F)`, computed as `(g/S) * rate(lambda S)`.
    ///
    /// At and beyond the upper support endpoint the survival function is zero
    /// and the hazard is undefined.
    pub fn hazard(&self, x: f64) -> Result<f64> {
        let g = self.base.pdf(x)?;
        let s = self.base.sf(x);
        if s <= 0.0 {
            return Err(Error::ZeroSurvival { x });
        }
        Ok(g / s * rate_constant_raw(self.lambda() * s))
    }

    pub fn quantile(&self, u: f64) -> Result<f64> {
        let u = UnitValue::new(u)?.get();
        Ok(self.base.quantile(texp_quantile_raw(self.lambda(), u)))
    }

    /// `n` inverse-transform draws, reproducible from `seed`.
    pub fn sample(&self, n: usize, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n)
            .map(|_| {
                let u = open_unit(rng.next_u64());
                self.base.quantile(texp_quantile_raw(self.lambda(), u))
            })
            .collect()
    }

    /// Mass at a support point of a discrete base:
    /// `F_lambda(G(x_i)) - F_lambda(G(x_{i-1}))` with `G(x_0) = 0`.
    pub fn pmf(&self, x: f64) -> Result<f64> {
        let points = self.base.support_points()?;
        let Some(i) = points.iter().position(|&p| p == x) else {
            return Ok(0.0);
        };
        let l = self.lambda();
        let upper = texp_cdf_raw(l, self.base.cdf(points[i]));
        let lower = if i == 0 {
            0.0
        } else {
            texp_cdf_raw(l, self.base.cdf(points[i - 1]))
        };
        Ok(upper - lower)
    }
}

/// Map the top 52 random bits to the open interval `(0, 1)`.
///
/// With 52 bits, `k + 0.5` is exact for every `k`, so neither endpoint is reachable.
pub(crate) fn open_unit(bits: u64) -> f64 {
    ((bits >> 12) as f64 + 0.5) * (1.0 / (1u64 << 52) as f64)
}

impl std::fmt::Display for ExpGModel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "exp-{} with lambda={}", self.base, self.lambda)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn weibull(l: f64, shape: f64, scale: f64) -> ExpGModel {
        ExpGModel::new(l, BaseDistribution::weibull(shape, scale).unwrap()).unwrap()
    }

    #[test]
    fn lambda_zero_is_the_base() {
        let m = weibull(0.0, 2.0, 1.5);
        for x in [0.1, 1.0, 3.0] {
            assert_eq!(m.cdf(x), m.base().cdf(x));
            assert!((m.pdf(x).unwrap() - m.base().pdf(x).unwrap()).abs() < 1e-15);
        }
    }

    #[test]
    fn composed_values() {
        // mpmath: (1 - exp(-(1 - e^-1))) / (1 - e^-1)
        let m = weibull(1.0, 1.0, 1.0);
        assert!((m.cdf(1.0) - 0.741_213_662_598_908_9).abs() < 1e-14);
        // mpmath: e/(e-1) * exp(-1) * exp(-(1 - e^-1))
        assert!((m.pdf(1.0).unwrap() - 0.309_299_438_883_801_8).abs() < 1e-14);
        assert_eq!(m.cdf(-1.0), 0.0);
    }

    #[test]
    fn hazard_agrees_with_closed_form() {
        let m = weibull(1.0, 1.0, 1.0);
        let x = 1.0;
        let g = m.base().pdf(x).unwrap();
        let s = m.base().sf(x);
        let printed = 1.0 * g / (1.0 - (-s).exp());
        let ratio = m.pdf(x).unwrap() / m.survival(x);
        assert!((m.hazard(x).unwrap() - printed).abs() < 1e-12);
        assert!((ratio - printed).abs() < 1e-12);
    }

    #[test]
    fn exponential_base_has_constant_hazard() {
        let m = weibull(0.0, 1.0, 2.5);
        for x in [0.1, 1.0, 7.0] {
            assert!((m.hazard(x).unwrap() - 0.4).abs() < 1e-13);
        }
    }

    #[test]
    fn hazard_at_upper_endpoint_is_an_error() {
        let m = ExpGModel::new(2.0, BaseDistribution::beta(2.0, 2.0).unwrap()).unwrap();
        assert!(matches!(m.hazard(1.0), Err(Error::ZeroSurvival { .. })));
    }

    #[test]
    fn sampling_is_deterministic() {
        let m = weibull(1.5, 2.0, 1.0);
        assert_eq!(m.sample(50, 7), m.sample(50, 7));
        assert_ne!(m.sample(50, 7), m.sample(50, 8));
    }

    #[test]
    fn open_unit_never_hits_endpoints() {
        assert!(open_unit(0) > 0.0);
        assert!(open_unit(u64::MAX) < 1.0);
    }

    #[test]
    fn bernoulli_pmf() {
        let m = ExpGModel::new(1.0, BaseDistribution::bernoulli(0.5).unwrap()).unwrap();
        let p0 = m.pmf(0.0).unwrap();
        assert!((p0 - 0.622_459_331_201_854_6).abs() < 1e-14);
        assert!((p0 + m.pmf(1.0).unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(m.pmf(0.5).unwrap(), 0.0);
        let tiny = m.with_lambda(1e-12).unwrap();
        assert!((tiny.pmf(1.0).unwrap() - 0.5).abs() < 1e-11);
        assert!(m.pdf(0.0).is_err());
        let cont = weibull(1.0, 1.0, 1.0);
        assert!(cont.pmf(1.0).is_err());
    }
}
