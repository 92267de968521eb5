//! Expected (unit) Fisher information.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::base::BaseDistribution;
use crate::error::{Error, Result};
use crate::model::ExpGModel;
use crate::quadrature::{expectation, QuadOptions};
use crate::transform::lambda_information;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FisherRoute {
    /// `K_ll = lambda_information`, `K_lt = E[dG]`,
    /// `K_tt = lambda E[d2G] - E[dU*]`, expectations by quadrature.
    #[default]
    Generic,
    /// Closed-form-plus-expectation entries of the exp-Weibull information
    /// as printed; for comparison only.
    PrintedWeibull,
}

fn options() -> QuadOptions {
    QuadOptions {
        abs_tol: 1e-10,
        rel_tol: 1e-10,
        max_intervals: 2000,
    }
}

fn expect<H: Fn(f64) -> f64>(m: &ExpGModel, h: H) -> Result<f64> {
    expectation(m, h, &options())?.into_result()
}

/// Unit information matrix of `(lambda, theta...)` under `m`.
pub fn fisher_info(m: &ExpGModel) -> Result<DMatrix<f64>> {
    let base = *m.base();
    if base.is_discrete() {
        return Err(Error::Unsupported {
            op: "expected information",
            family: base.family().name(),
        });
    }
    let l = m.lambda();
    let k = base.n_params();
    let mut info = DMatrix::zeros(k + 1, k + 1);
    info[(0, 0)] = lambda_information(l);
    for i in 0..k {
        let v = expect(m, |x| base.cdf_gradient(x).map_or(0.0, |g| g[i]))?;
        info[(0, i + 1)] = v;
        info[(i + 1, 0)] = v;
        for j in i..k {
            let v = expect(m, |x| {
                let hg = base.cdf_hessian(x).map_or(0.0, |h| h[(i, j)]);
                let ju = base.score_jacobian(x).map_or(0.0, |h| h[(i, j)]);
                l * hg - ju
            })?;
            info[(i + 1, j + 1)] = v;
            info[(j + 1, i + 1)] = v;
        }
    }
    Ok(info)
}

/// The exp-Weibull information entries in their printed form, arranged in
/// the `(lambda, alpha, beta)` order used elsewhere. Undefined at `lambda = 0`.
pub fn fisher_info_printed_weibull(m: &ExpGModel) -> Result<DMatrix<f64>> {
    let BaseDistribution::Weibull { shape: a, scale: b } = *m.base() else {
        return Err(Error::Unsupported {
            op: "printed exp-Weibull information",
            family: m.family().name(),
        });
    };
    let l = m.lambda();
    if l == 0.0 {
        return Err(Error::Parameter {
            name: "lambda",
            value: l,
            reason: "the printed entries divide by lambda",
        });
    }
    let z = |x: f64| (x / b).powf(a);
    let lg = |x: f64| (x / b).ln();
    let e_z = expect(m, z)?;
    let e_zl = expect(m, |x| z(x) * lg(x))?;
    let e_log = expect(m, f64::ln)?;
    let e_ez2 = expect(m, |x| (-z(x)).exp() * z(x) * z(x))?;
    let e_ez2l = expect(m, |x| (-z(x)).exp() * z(x) * z(x) * lg(x))?;
    let e_aa = expect(m, |x| {
        let (zz, ll) = (z(x), lg(x));
        let e = (-zz).exp();
        zz * ll * ll * (1.0 - l * e * zz + l * e)
    })?;
    let k_lb = a / (b * l) * (e_z - 1.0);
    let k_la = (e_zl - 1.0 / a + b.ln() - e_log) / l;
    let k_bb = a / b.powi(3) * (1.0 - a * l * e_ez2);
    let k_ba = a * (l * e_ez2l - 1.0 / a + b.ln() - e_log);
    let k_aa = 1.0 / (a * a) + e_aa;
    Ok(DMatrix::from_row_slice(
        3,
        3,
        &[
            lambda_information(l),
            k_la,
            k_lb,
            k_la,
            k_aa,
            k_ba,
            k_lb,
            k_ba,
            k_bb,
        ],
    ))
}
