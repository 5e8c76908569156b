//! Quadrature rules: Gauss-Legendre nodes for the iterated simplex integrals
//! and adaptive Simpson for the transport-equation time integral.

use crate::error::CoreError;
use crate::C64;

/// Gauss-Legendre nodes and weights on `[0, 1]`.
///
/// Computed by Newton iteration on the Legendre polynomial; deterministic to
/// machine precision for the small orders used here.
pub fn gauss_legendre_unit(order: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(order >= 1);
    let n = order;
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n {
        // initial guess on [-1, 1]
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        for _ in 0..100 {
            let (p, dp) = legendre(n, x);
            let dx = p / dp;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        let (_, dp) = legendre(n, x);
        nodes[n - 1 - i] = 0.5 * (x + 1.0);
        weights[n - 1 - i] = 1.0 / ((1.0 - x * x) * dp * dp);
    }
    (nodes, weights)
}

/// Legendre `P_n(x)` and its derivative.
fn legendre(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}

/// Iterate over the tuples `(t_1, ..., t_m)` of the time simplex
/// `0 <= t_m <= ... <= t_1 <= t` with tensorized Gauss-Legendre weights,
/// calling `f(times, weight)` for each node.
///
/// The nesting maps level `j` onto `[0, t_{j-1}]`, so the combined weight
/// already contains the simplex Jacobian.
pub fn simplex_quadrature<F: FnMut(&[f64], f64)>(t: f64, m: usize, order: usize, mut f: F) {
    if m == 0 {
        f(&[], 1.0);
        return;
    }
    let (nodes, weights) = gauss_legendre_unit(order);
    let mut times = vec![0.0; m];
    recurse(t, 0, m, &nodes, &weights, 1.0, &mut times, &mut f);
}

#[allow(clippy::too_many_arguments)]
fn recurse<F: FnMut(&[f64], f64)>(
    upper: f64,
    level: usize,
    m: usize,
    nodes: &[f64],
    weights: &[f64],
    w_acc: f64,
    times: &mut Vec<f64>,
    f: &mut F,
) {
    for (x, w) in nodes.iter().zip(weights) {
        let tj = upper * x;
        times[level] = tj;
        let w_next = w_acc * w * upper;
        if level + 1 == m {
            f(times, w_next);
        } else {
            recurse(tj, level + 1, m, nodes, weights, w_next, times, f);
        }
    }
}

/// Adaptive Simpson integration of a complex-valued function on `[a, b]`.
pub fn adaptive_simpson<F: Fn(f64) -> C64>(
    f: &F,
    a: f64,
    b: f64,
    tol: f64,
) -> Result<C64, CoreError> {
    let fa = f(a);
    let fb = f(b);
    let fm = f(0.5 * (a + b));
    let whole = simpson(a, b, fa, fm, fb);
    step(f, a, b, fa, fm, fb, whole, tol, 40)
}

fn simpson(a: f64, b: f64, fa: C64, fm: C64, fb: C64) -> C64 {
    (fa + fm * 4.0 + fb) * ((b - a) / 6.0)
}

#[allow(clippy::too_many_arguments)]
fn step<F: Fn(f64) -> C64>(
    f: &F,
    a: f64,
    b: f64,
    fa: C64,
    fm: C64,
    fb: C64,
    whole: C64,
    tol: f64,
    depth: u32,
) -> Result<C64, CoreError> {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = simpson(a, m, fa, flm, fm);
    let right = simpson(m, b, fm, frm, fb);
    let err = (left + right - whole).norm();
    if err <= 15.0 * tol || (b - a).abs() < 1e-14 {
        return Ok(left + right + (left + right - whole) / 15.0);
    }
    if depth == 0 {
        return Err(CoreError::QuadratureFailure {
            tol,
            estimate: err / 15.0,
        });
    }
    let l = step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)?;
    let r = step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)?;
    Ok(l + r)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_legendre_integrates_polynomials_exactly() {
        let (nodes, weights) = gauss_legendre_unit(6);
        // degree 11 monomial is exact for 6-point GL
        for k in 0..=11u32 {
            let approx: f64 = nodes
                .iter()
                .zip(&weights)
                .map(|(x, w)| w * x.powi(k as i32))
                .sum();
            let exact = 1.0 / (k as f64 + 1.0);
            assert!((approx - exact).abs() < 1e-14, "k={k}");
        }
    }

    #[test]
    fn simplex_volume() {
        for m in 1..=4usize {
            let mut vol = 0.0;
            simplex_quadrature(0.7, m, 8, |_, w| vol += w);
            let mut fact = 1.0;
            for j in 1..=m {
                fact *= j as f64;
            }
            let exact = 0.7f64.powi(m as i32) / fact;
            assert!((vol - exact).abs() < 1e-12, "m={m}");
        }
    }

    #[test]
    fn adaptive_simpson_oscillatory() {
        let f = |s: f64| C64::new(0.0, 3.0 * s).exp();
        let got = adaptive_simpson(&f, 0.0, 2.0, 1e-12).unwrap();
        let exact = (C64::new(0.0, 6.0).exp() - C64::new(1.0, 0.0)) / C64::new(0.0, 3.0);
        assert!((got - exact).norm() < 1e-10);
    }
}
