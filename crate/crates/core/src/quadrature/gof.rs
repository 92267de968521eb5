//! One-sample Kolmogorov-Smirnov test.

use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KsResult {
    pub statistic: f64,
    pub p_value: f64,
    pub n: usize,
}

/// `sup_x |F_n(x) - F(x)|`. The sample need not be sorted.
pub fn ks_statistic<F: Fn(f64) -> f64>(sample: &[f64], cdf: F) -> f64 {
    let mut xs = sample.to_vec();
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    xs.iter().enumerate().fold(0.0, |d, (i, &x)| {
        let f = cdf(x);
        let above = (i + 1) as f64 / n - f;
        let below = f - i as f64 / n;
        d.max(above).max(below)
    })
}

/// Asymptotic Kolmogorov tail `P(K > t)`.
pub fn kolmogorov_sf(t: f64) -> f64 {
    if t <= 0.0 {
        return 1.0;
    }
    if t < 1.0 {
        // Jacobi-theta form, fast for small t
        let c = -std::f64::consts::PI.powi(2) / (8.0 * t * t);
        let s: f64 = (1..=6).map(|k| ((2 * k - 1) as f64).powi(2) * c).map(f64::exp).sum();
        return (1.0 - (2.0 * std::f64::consts::PI).sqrt() / t * s).clamp(0.0, 1.0);
    }
    let mut s = 0.0;
    for k in 1..=100 {
        let term = (-2.0 * (k * k) as f64 * t * t).exp();
        s += if k % 2 == 1 { term } else { -term };
        if term < 1e-17 {
            break;
        }
    }
    (2.0 * s).clamp(0.0, 1.0)
}

/// KS test with Stephens' finite-sample correction of the statistic.
pub fn ks_test<F: Fn(f64) -> f64>(sample: &[f64], cdf: F) -> KsResult {
    let d = ks_statistic(sample, cdf);
    let n = sample.len();
    let rn = (n as f64).sqrt();
    let p_value = kolmogorov_sf(d * (rn + 0.12 + 0.11 / rn));
    KsResult {
        statistic: d,
        p_value,
        n,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kolmogorov_branches_meet() {
        for t in [0.5, 0.9, 0.99, 1.0, 1.01, 1.3] {
            let small = {
                let c = -std::f64::consts::PI.powi(2) / (8.0 * t * t);
                let s: f64 = (1..=6).map(|k| (((2 * k - 1) as f64).powi(2) * c).exp()).sum();
                1.0 - (2.0 * std::f64::consts::PI).sqrt() / t * s
            };
            let large: f64 = 2.0 * (1..=100).map(|k| {
                let v = (-2.0 * (k * k) as f64 * t * t).exp();
                if k % 2 == 1 { v } else { -v }
            }).sum::<f64>();
            assert!((small - large).abs() < 1e-12, "t={t}");
        }
        // scipy.special.kolmogorov(1.36)
        assert!((kolmogorov_sf(1.36) - 0.04946).abs() < 1e-4);
    }

    #[test]
    fn uniform_grid_has_small_statistic() {
        let xs: Vec<f64> = (0..1000).map(|i| (i as f64 + 0.5) / 1000.0).collect();
        let r = ks_test(&xs, |x| x);
        assert!((r.statistic - 0.0005).abs() < 1e-12);
        assert!(r.p_value > 0.99);
    }

    #[test]
    fn wrong_distribution_is_rejected() {
        let xs: Vec<f64> = (0..1000).map(|i| ((i as f64 + 0.5) / 1000.0).powi(2)).collect();
        assert!(ks_test(&xs, |x| x).p_value < 1e-6);
    }
}
