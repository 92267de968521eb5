use statrs::distribution::{ChiSquared, ContinuousCDF, Normal};

use crate::error::{Error, Result};

/// Upper tail `P(Q > x)` for `Q ~ chi^2_q`.
pub fn chi2_sf(x: f64, q: f64) -> Result<f64> {
    if !(q >= 1.0 && q.is_finite()) {
        return Err(Error::Parameter {
            name: "q",
            value: q,
            reason: "degrees of freedom must be at least 1",
        });
    }
    if x.is_nan() {
        return Err(Error::Parameter {
            name: "x",
            value: x,
            reason: "statistic is NaN",
        });
    }
    if x <= 0.0 {
        return Ok(1.0);
    }
    let dist = ChiSquared::new(q).map_err(|_| Error::Parameter {
        name: "q",
        value: q,
        reason: "invalid degrees of freedom",
    })?;
    Ok(dist.sf(x))
}

/// Standard normal quantile.
pub fn normal_quantile(p: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::OutsideUnitInterval { value: p });
    }
    if p == 0.5 {
        return Ok(0.0);
    }
    let n = Normal::standard();
    Ok(n.inverse_cdf(p))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn chi2_reference_values() {
        // scipy.stats.chi2.sf
        assert!((chi2_sf(3.841458820694124, 1.0).unwrap() - 0.05).abs() < 1e-10);
        assert!((chi2_sf(2.0, 2.0).unwrap() - (-1.0f64).exp()).abs() < 1e-12);
        assert!((chi2_sf(9.5453, 1.0).unwrap() - 2.0e-3).abs() < 1e-4);
        assert_eq!(chi2_sf(0.0, 3.0).unwrap(), 1.0);
        assert!(chi2_sf(1.0, 0.5).is_err());
    }

    #[test]
    fn normal_reference_values() {
        assert_eq!(normal_quantile(0.5).unwrap(), 0.0);
        assert!((normal_quantile(0.975).unwrap() - 1.959963984540054).abs() < 1e-9);
        assert!((normal_quantile(0.025).unwrap() + 1.959963984540054).abs() < 1e-9);
        assert!(normal_quantile(1.0).is_err());
        assert!(normal_quantile(0.0).is_err());
    }
}
