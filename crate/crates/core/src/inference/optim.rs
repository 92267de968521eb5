//! BFGS minimization with a strong-Wolfe line search.
//!
//! The objective returns `None` outside its domain; such points are treated
//! as infinitely bad and the line search backs off.

use nalgebra::{DMatrix, DVector};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BfgsOptions {
    pub max_iter: usize,
    /// Stop when the largest gradient component is at most this.
    pub grad_tol: f64,
}

impl Default for BfgsOptions {
    fn default() -> Self {
        BfgsOptions {
            max_iter: 1000,
            grad_tol: 1e-9,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BfgsResult {
    pub x: Vec<f64>,
    pub value: f64,
    pub gradient: Vec<f64>,
    pub iterations: usize,
    pub evaluations: usize,
    pub converged: bool,
}

const C1: f64 = 1e-4;
const C2: f64 = 0.9;

struct Counted<F> {
    f: F,
    evaluations: usize,
}

impl<F> Counted<F>
where
    F: FnMut(&[f64]) -> Option<(f64, Vec<f64>)>,
{
    fn eval(&mut self, x: &DVector<f64>) -> Option<(f64, DVector<f64>)> {
        self.evaluations += 1;
        let (v, g) = (self.f)(x.as_slice())?;
        (v.is_finite() && g.iter().all(|c| c.is_finite())).then(|| (v, DVector::from_vec(g)))
    }
}

fn inf_norm(v: &DVector<f64>) -> f64 {
    v.amax()
}

/// Minimize `f` from `x0`. `f` returns the value and gradient.
pub fn bfgs<F>(f: F, x0: &[f64], opts: &BfgsOptions) -> Option<BfgsResult>
where
    F: FnMut(&[f64]) -> Option<(f64, Vec<f64>)>,
{
    let n = x0.len();
    let mut obj = Counted { f, evaluations: 0 };
    let mut x = DVector::from_column_slice(x0);
    let (mut fx, mut g) = obj.eval(&x)?;
    let mut h = DMatrix::<f64>::identity(n, n);
    let mut first = true;
    let mut iterations = 0;
    let mut converged = inf_norm(&g) <= opts.grad_tol;

    while !converged && iterations < opts.max_iter {
        iterations += 1;
        let mut p = -(&h * &g);
        let mut slope = g.dot(&p);
        if slope >= 0.0 {
            // not a descent direction: restart from steepest descent
            h = DMatrix::identity(n, n);
            p = -g.clone();
            slope = g.dot(&p);
        }
        if first {
            // scale the first step to a modest length
            let scale = 1.0 / inf_norm(&p).max(1.0);
            p *= scale;
            slope *= scale;
        }
        let Some((alpha, x_new, f_new, g_new)) = line_search(&mut obj, &x, fx, &p, slope) else {
            if first {
                break;
            }
            h = DMatrix::identity(n, n);
            first = true;
            continue;
        };
        let s = &x_new - &x;
        let y = &g_new - &g;
        let sy = s.dot(&y);
        if sy > 1e-12 * s.norm() * y.norm() {
            if first {
                // Shanno scaling of the initial inverse Hessian
                h = DMatrix::identity(n, n) * (sy / y.dot(&y));
            }
            let rho = 1.0 / sy;
            let hy = &h * &y;
            let yhy = y.dot(&hy);
            // H+ = H - rho (s hy^T + hy s^T) + (rho^2 yHy + rho) s s^T
            h -= (&s * hy.transpose() + &hy * s.transpose()) * rho;
            h += (&s * s.transpose()) * (rho * rho * yhy + rho);
            first = false;
        }
        let stalled = alpha * inf_norm(&p) <= 1e-15 * inf_norm(&x).max(1.0) && (fx - f_new).abs() <= 0.0;
        x = x_new;
        fx = f_new;
        g = g_new;
        converged = inf_norm(&g) <= opts.grad_tol;
        if stalled {
            break;
        }
    }
    Some(BfgsResult {
        x: x.as_slice().to_vec(),
        value: fx,
        gradient: g.as_slice().to_vec(),
        iterations,
        evaluations: obj.evaluations,
        converged,
    })
}

type Point = (f64, DVector<f64>, f64, DVector<f64>);

/// Strong-Wolfe line search (bracketing then zoom by bisection-safeguarded
/// cubic interpolation).
fn line_search<F>(
    obj: &mut Counted<F>,
    x: &DVector<f64>,
    f0: f64,
    p: &DVector<f64>,
    slope0: f64,
) -> Option<Point>
where
    F: FnMut(&[f64]) -> Option<(f64, Vec<f64>)>,
{
    let mut eval = |a: f64| -> Option<(f64, DVector<f64>, f64)> {
        let xa = x + p * a;
        let (v, g) = obj.eval(&xa)?;
        let d = g.dot(p);
        Some((v, g, d))
    };
    let mut a_prev = 0.0;
    let mut f_prev = f0;
    let mut d_prev = slope0;
    let mut a = 1.0;
    let mut backtracks = 0;
    for i in 0..60 {
        let Some((fa, ga, da)) = eval(a) else {
            // outside the domain: shrink towards the last good point
            a = a_prev + 0.1 * (a - a_prev);
            backtracks += 1;
            if backtracks > 60 {
                return None;
            }
            continue;
        };
        if fa > f0 + C1 * a * slope0 || (i > 0 && fa >= f_prev) {
            return zoom(&mut eval, x, p, f0, slope0, (a_prev, f_prev, d_prev), (a, fa, da));
        }
        if da.abs() <= -C2 * slope0 {
            return Some((a, x + p * a, fa, ga));
        }
        if da >= 0.0 {
            return zoom(&mut eval, x, p, f0, slope0, (a, fa, da), (a_prev, f_prev, d_prev));
        }
        a_prev = a;
        f_prev = fa;
        d_prev = da;
        a *= 2.0;
    }
    None
}

fn zoom<E>(
    eval: &mut E,
    x: &DVector<f64>,
    p: &DVector<f64>,
    f0: f64,
    slope0: f64,
    mut lo: (f64, f64, f64),
    mut hi: (f64, f64, f64),
) -> Option<Point>
where
    E: FnMut(f64) -> Option<(f64, DVector<f64>, f64)>,
{
    let mut best: Option<Point> = None;
    for _ in 0..60 {
        let a = interpolate(lo, hi);
        let Some((fa, ga, da)) = eval(a) else {
            hi = (a, f64::INFINITY, 0.0);
            continue;
        };
        if fa > f0 + C1 * a * slope0 || fa >= lo.1 {
            hi = (a, fa, da);
        } else {
            if da.abs() <= -C2 * slope0 {
                return Some((a, x + p * a, fa, ga));
            }
            best = Some((a, x + p * a, fa, ga.clone()));
            if da * (hi.0 - lo.0) >= 0.0 {
                hi = lo;
            }
            lo = (a, fa, da);
        }
        if (hi.0 - lo.0).abs() <= 1e-16 * lo.0.abs().max(1.0) {
            break;
        }
    }
    // sufficient decrease without the curvature condition is still progress
    best.filter(|b| b.2 < f0)
}

/// Minimizer of the cubic through two points with derivatives, kept inside
/// the middle 80% of the bracket; bisection when the cubic is unusable.
fn interpolate(lo: (f64, f64, f64), hi: (f64, f64, f64)) -> f64 {
    let (a0, f0, d0) = lo;
    let (a1, f1, d1) = hi;
    let mid = 0.5 * (a0 + a1);
    if !f1.is_finite() {
        return mid;
    }
    let d = a1 - a0;
    let t1 = d0 + d1 - 3.0 * (f1 - f0) / d;
    let disc = t1 * t1 - d0 * d1;
    if disc < 0.0 {
        return mid;
    }
    let t2 = disc.sqrt() * d.signum();
    let a = a1 - d * (d1 + t2 - t1) / (d1 - d0 + 2.0 * t2);
    let (low, high) = if a0 < a1 { (a0, a1) } else { (a1, a0) };
    let margin = 0.1 * (high - low);
    if a.is_finite() && a > low + margin && a < high - margin {
        a
    } else {
        mid
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rosenbrock() {
        let f = |x: &[f64]| {
            let (a, b) = (x[0], x[1]);
            let v = (1.0 - a).powi(2) + 100.0 * (b - a * a).powi(2);
            let g = vec![-2.0 * (1.0 - a) - 400.0 * a * (b - a * a), 200.0 * (b - a * a)];
            Some((v, g))
        };
        let r = bfgs(f, &[-1.2, 1.0], &BfgsOptions::default()).unwrap();
        assert!(r.converged, "{r:?}");
        assert!((r.x[0] - 1.0).abs() < 1e-8 && (r.x[1] - 1.0).abs() < 1e-8);
    }

    #[test]
    fn respects_domain() {
        // minimum of x - log x at 1, undefined for x <= 0
        let f = |x: &[f64]| (x[0] > 0.0).then(|| (x[0] - x[0].ln(), vec![1.0 - 1.0 / x[0]]));
        let r = bfgs(f, &[20.0], &BfgsOptions::default()).unwrap();
        assert!(r.converged && (r.x[0] - 1.0).abs() < 1e-9, "{r:?}");
    }

    #[test]
    fn quadratic_is_deterministic() {
        let f = |x: &[f64]| {
            let v = 3.0 * x[0] * x[0] + x[0] * x[1] + 2.0 * x[1] * x[1] - x[0];
            Some((v, vec![6.0 * x[0] + x[1] - 1.0, x[0] + 4.0 * x[1]]))
        };
        let a = bfgs(f, &[5.0, -3.0], &BfgsOptions::default()).unwrap();
        let b = bfgs(f, &[5.0, -3.0], &BfgsOptions::default()).unwrap();
        assert_eq!(a, b);
        assert!(a.converged);
    }
}
