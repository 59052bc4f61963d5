//! Composite Gauss-Legendre panels in `x` times the periodic trapezoid rule in `y`.
//!
//! The trapezoid rule with `m` nodes integrates trigonometric polynomials of degree
//! below `m` exactly on the unit circle, so integrands built from products of two
//! Fourier series truncated at `n_max` only need `m > 2 n_max`.

use gauss_quad::legendre::GaussLegendre;
use std::sync::OnceLock;

const GL_DEGREE: usize = 24;
const MAX_DOUBLINGS: u32 = 12;

fn rule() -> &'static [(f64, f64)] {
    static RULE: OnceLock<Vec<(f64, f64)>> = OnceLock::new();
    RULE.get_or_init(|| {
        let gl = GaussLegendre::new(GL_DEGREE.try_into().expect("nonzero degree"));
        gl.as_node_weight_pairs().to_vec()
    })
}

fn panels(f: &mut impl FnMut(f64) -> f64, a: f64, b: f64, count: usize) -> f64 {
    let h = (b - a) / count as f64;
    let mut total = 0.0;
    for p in 0..count {
        let lo = a + h * p as f64;
        let mid = lo + 0.5 * h;
        let mut s = 0.0;
        for &(x, w) in rule() {
            s += w * f(mid + 0.5 * h * x);
        }
        total += 0.5 * h * s;
    }
    total
}

/// Integrates a smooth function on `[a, b]`, doubling the panel count until two
/// successive estimates agree to `rel_tol` (relative to the larger magnitude, with
/// an absolute fallback of `rel_tol * scale` when the integral cancels to zero).
pub fn integrate_1d(mut f: impl FnMut(f64) -> f64, a: f64, b: f64, rel_tol: f64, scale: f64) -> f64 {
    if b <= a {
        return 0.0;
    }
    let mut count = 1;
    let mut prev = panels(&mut f, a, b, count);
    for _ in 0..MAX_DOUBLINGS {
        count *= 2;
        let next = panels(&mut f, a, b, count);
        let mag = next.abs().max(prev.abs()).max(scale.abs());
        if (next - prev).abs() <= rel_tol * mag {
            return next;
        }
        prev = next;
    }
    prev
}

/// Mean over `y` in `[0, 1)` of a periodic function, using `m` equispaced nodes.
pub fn periodic_mean(mut f: impl FnMut(f64) -> f64, m: usize) -> f64 {
    let mut s = 0.0;
    for k in 0..m {
        s += f(k as f64 / m as f64);
    }
    s / m as f64
}

/// Integral over `[x0, x1] x S^1` of a function that is a trigonometric polynomial of
/// degree below `m` in `y` for each fixed `x`.
pub fn integrate_cylinder(mut f: impl FnMut(f64, f64) -> f64, x0: f64, x1: f64, m: usize, rel_tol: f64, scale: f64) -> f64 {
    integrate_1d(|x| periodic_mean(|y| f(x, y), m), x0, x1, rel_tol, scale)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponential_integral() {
        let v = integrate_1d(|x| (3.0 * x).exp(), -1.0, 2.0, 1e-13, 0.0);
        let exact = ((6.0f64).exp() - (-3.0f64).exp()) / 3.0;
        assert!((v - exact).abs() <= 1e-12 * exact);
    }

    #[test]
    fn trapezoid_exact_for_low_degree() {
        let m = 16;
        let v = periodic_mean(|y| (2.0 * std::f64::consts::PI * 7.0 * y).cos().powi(2), m);
        assert!((v - 0.5).abs() < 1e-15);
    }

    #[test]
    fn empty_interval() {
        assert_eq!(integrate_1d(|x| x, 1.0, 1.0, 1e-12, 0.0), 0.0);
    }
}
