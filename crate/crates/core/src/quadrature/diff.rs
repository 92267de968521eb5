//! Central finite differences with steps `h_i = tol^(1/3) * max(1, |x_i|)`.

use nalgebra::DMatrix;

fn step(tol: f64, xi: f64) -> f64 {
    tol.cbrt() * xi.abs().max(1.0)
}

/// Gradient of a scalar function.
pub fn fd_gradient<F>(f: F, x: &[f64], tol: f64) -> Vec<f64>
where
    F: Fn(&[f64]) -> f64,
{
    let mut p = x.to_vec();
    (0..x.len())
        .map(|i| {
            let h = step(tol, x[i]);
            p[i] = x[i] + h;
            let up = f(&p);
            p[i] = x[i] - h;
            let down = f(&p);
            p[i] = x[i];
            (up - down) / (2.0 * h)
        })
        .collect()
}

/// Hessian of a scalar function; symmetric by construction.
pub fn fd_hessian<F>(f: F, x: &[f64], tol: f64) -> DMatrix<f64>
where
    F: Fn(&[f64]) -> f64,
{
    let k = x.len();
    let h: Vec<f64> = x.iter().map(|&xi| step(tol, xi)).collect();
    let mut out = DMatrix::zeros(k, k);
    let mut p = x.to_vec();
    let f0 = f(x);
    for i in 0..k {
        p[i] = x[i] + h[i];
        let up = f(&p);
        p[i] = x[i] - h[i];
        let down = f(&p);
        p[i] = x[i];
        out[(i, i)] = (up - 2.0 * f0 + down) / (h[i] * h[i]);
        for j in 0..i {
            let mut corner = |si: f64, sj: f64| {
                p[i] = x[i] + si * h[i];
                p[j] = x[j] + sj * h[j];
                let v = f(&p);
                p[i] = x[i];
                p[j] = x[j];
                v
            };
            let v = (corner(1.0, 1.0) - corner(1.0, -1.0) - corner(-1.0, 1.0) + corner(-1.0, -1.0))
                / (4.0 * h[i] * h[j]);
            out[(i, j)] = v;
            out[(j, i)] = v;
        }
    }
    out
}

/// Jacobian of a vector function; row `r` holds the derivatives of output `r`.
pub fn fd_jacobian<F>(f: F, x: &[f64], tol: f64) -> DMatrix<f64>
where
    F: Fn(&[f64]) -> Vec<f64>,
{
    let k = x.len();
    let mut p = x.to_vec();
    let mut columns: Vec<Vec<f64>> = Vec::with_capacity(k);
    for i in 0..k {
        let h = step(tol, x[i]);
        p[i] = x[i] + h;
        let up = f(&p);
        p[i] = x[i] - h;
        let down = f(&p);
        p[i] = x[i];
        columns.push(up.iter().zip(&down).map(|(u, d)| (u - d) / (2.0 * h)).collect());
    }
    let m = columns.first().map_or(0, Vec::len);
    DMatrix::from_fn(m, k, |r, c| columns[c][r])
}
