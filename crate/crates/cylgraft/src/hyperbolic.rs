//! Closed-form collar, cusp and Y-piece quantities of hyperbolic surfaces.
//!
//! A simple closed geodesic of length `ℓ` has a standard collar of half-width
//! `cl(ℓ)`; in Fermi coordinates `(ρ, t)` its metric is `dρ² + ℓ² cosh²ρ dt²` and the
//! map `(ρ, t) ↦ (F(ρ), t)` sends it conformally onto the flat cylinder
//! `(-M, M) x S^1`.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::f64::consts::{LN_2, PI};

/// Half-width of the standard collar, `arcsinh(1 / sinh(s/2))`.
pub fn collar_width(s: f64) -> Result<f64> {
    if !(s > 0.0) || !s.is_finite() {
        return Err(Error::DomainError(format!("collar width needs a positive length, got {s}")));
    }
    Ok((1.0 / (0.5 * s).sinh()).asinh())
}

/// `F(ρ) = (2/ℓ) arctan(tanh(ρ/2))`, the flat coordinate of the Fermi distance `ρ`.
pub fn fermi_to_flat(ell: f64, rho: f64) -> Result<f64> {
    check_length(ell)?;
    Ok(2.0 / ell * (0.5 * rho).tanh().atan())
}

/// The `arccos` and `arcsin` forms of `F`, in that order. Their agreement with
/// [`fermi_to_flat`] is a consistency check on the three expressions.
pub fn fermi_to_flat_branches(ell: f64, rho: f64) -> Result<(f64, f64)> {
    check_length(ell)?;
    let s = if rho < 0.0 {
        -1.0
    } else if rho > 0.0 {
        1.0
    } else {
        0.0
    };
    let sech = 1.0 / rho.cosh();
    Ok((s / ell * sech.acos(), s / ell * (0.5 * PI - sech.asin())))
}

/// Flat coordinate `e^r` of the cusp point at horocycle coordinate `r`.
pub fn cusp_map(r: f64) -> Result<f64> {
    if !(r > -LN_2) {
        return Err(Error::DomainError(format!("cusp neighbourhood needs r > -ln 2, got {r}")));
    }
    Ok(r.exp())
}

fn check_length(ell: f64) -> Result<()> {
    if !(ell > 0.0) || !ell.is_finite() {
        return Err(Error::DomainError(format!("geodesic length must be positive, got {ell}")));
    }
    Ok(())
}

/// Flat half-length `M(ℓ) = (π/2 - arcsin tanh(ℓ/2)) / ℓ` of the standard collar.
pub fn collar_half_modulus(ell: f64) -> Result<f64> {
    check_length(ell)?;
    Ok((0.5 * PI - (0.5 * ell).tanh().asin()) / ell)
}

/// `L_t = π/t - 2 arcsin(t)/t`: the modulus of the cylinder between the two parallel
/// curves of length 1 in a collar of length `t <= 1`.
pub fn inserted_modulus(t: f64) -> Result<f64> {
    check_length(t)?;
    if t > 1.0 {
        return Err(Error::DomainError(format!("arcsin needs t <= 1, got {t}")));
    }
    Ok(PI / t - 2.0 * t.asin() / t)
}

/// `μ(ℓ) = exp(-2π²(1/ℓ - 1/2))`.
pub fn decay_constant(ell: f64) -> Result<f64> {
    check_length(ell)?;
    Ok((-2.0 * PI * PI * (1.0 / ell - 0.5)).exp())
}

/// `exp(-4π²(1/ℓ - 1/2))`, written out independently of [`decay_constant`].
pub fn decay_constant_squared(ell: f64) -> Result<f64> {
    check_length(ell)?;
    Ok((-4.0 * PI * PI * (1.0 / ell - 0.5)).exp())
}

/// Scalar invariants of the standard collar of a geodesic of length `ell`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CollarQuantities {
    pub ell: f64,
    pub cl: f64,
    #[serde(rename = "M")]
    pub m: f64,
    #[serde(rename = "L")]
    pub l: f64,
    pub d: f64,
    pub mu: f64,
}

/// Collar quantities for `0 < ell <= 1` (the unit-length parallel curve must exist).
///
/// `d` is computed as `F(cl) - F(ρ₁)` with `ρ₁` the distance of the unit-length
/// parallel curve, so `M = L/2 + d` is a genuine check rather than a definition.
pub fn collar(ell: f64) -> Result<CollarQuantities> {
    let cl = collar_width(ell)?;
    let m = collar_half_modulus(ell)?;
    let l = inserted_modulus(ell)?;
    let rho_one = (1.0 / ell).acosh();
    let d = fermi_to_flat(ell, cl)? - fermi_to_flat(ell, rho_one)?;
    let mu = decay_constant(ell)?;
    Ok(CollarQuantities { ell, cl, m, l, d, mu })
}

impl CollarQuantities {
    /// Inequalities and the identity that hold for `ell <= 1/2`, as `(name, holds)` pairs.
    pub fn checks(&self) -> Vec<(&'static str, bool)> {
        let e = self.ell;
        vec![
            ("collar.width-exceeds-log", self.cl > (4.0 / e).ln()),
            ("collar.half-modulus-lower", self.m >= PI / (2.0 * e) - 0.5),
            ("collar.inserted-modulus-above-4", self.l > 4.0),
            ("collar.ring-modulus-at-least-half", self.d >= 0.5),
            ("collar.half-modulus-split", (self.m - (0.5 * self.l + self.d)).abs() <= 1e-12 * self.m),
        ]
    }
}

/// Reduced-collar quantities for a boundary geodesic of length `eps < 2`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReducedCollarQuantities {
    pub eps: f64,
    pub w_hat: f64,
    #[serde(rename = "M_hat")]
    pub m_hat: f64,
    pub eps_hat: f64,
}

pub fn reduced_collar(eps: f64) -> Result<ReducedCollarQuantities> {
    if !(eps > 0.0 && eps < 2.0) {
        return Err(Error::DomainError(format!("reduced collar needs 0 < eps < 2, got {eps}")));
    }
    let w_hat = (2.0 / eps).ln();
    let arg = eps / (1.0 + 0.25 * eps * eps);
    debug_assert!(arg <= 1.0);
    let m_hat = (0.5 * PI - arg.asin()) / eps;
    Ok(ReducedCollarQuantities { eps, w_hat, m_hat, eps_hat: 1.0 / (m_hat + 1.0) })
}

impl ReducedCollarQuantities {
    /// Length `eps cosh(w_hat)` of the inner boundary of the reduced collar.
    pub fn inner_length(&self) -> f64 {
        self.eps * self.w_hat.cosh()
    }

    pub fn checks(&self) -> Result<Vec<(&'static str, bool)>> {
        let e = self.eps;
        let cl = collar_width(e)?;
        Ok(vec![
            ("reduced.width-below-collar", self.w_hat < cl - LN_2),
            ("reduced.inner-length", (self.inner_length() - (1.0 + 0.25 * e * e)).abs() <= 1e-12),
            ("reduced.half-modulus-lower", self.m_hat > PI / (2.0 * e) - 1.0),
        ])
    }

    /// `M̂` evaluated through `F` at `ŵ`, for comparison with the closed form.
    pub fn m_hat_via_fermi(&self) -> Result<f64> {
        fermi_to_flat(self.eps, self.w_hat)
    }
}

/// Dilatation bound `(1 + 2ε₂²)(1 + 2ε₃²)` of the Y-piece maps; pass 0 to drop a factor.
pub fn y_piece_dilatation(eps2: f64, eps3: f64) -> Result<f64> {
    for e in [eps2, eps3] {
        if !(e == 0.0 || (e > 0.0 && e <= 0.5)) {
            return Err(Error::DomainError(format!("boundary lengths must lie in (0, 1/2] or be 0, got {e}")));
        }
    }
    Ok((1.0 + 2.0 * eps2 * eps2) * (1.0 + 2.0 * eps3 * eps3))
}

/// Geometric sandwich `(ρ/d, min(4π(g-1)/d², 1))` for the capacity of the main part.
pub fn capacity_bounds(d_m: f64, rho_m: f64, g: u32) -> Result<(f64, f64)> {
    if !(d_m > 0.0) {
        return Err(Error::DomainError(format!("boundary distance must be positive, got {d_m}")));
    }
    if !(rho_m > 0.0 && rho_m <= 0.25) {
        return Err(Error::DomainError(format!("ribbon width must lie in (0, 1/4], got {rho_m}")));
    }
    if g < 2 {
        return Err(Error::DomainError(format!("genus must be at least 2, got {g}")));
    }
    let lower = rho_m / d_m;
    let upper = (4.0 * PI * (g as f64 - 1.0) / (d_m * d_m)).min(1.0);
    if !(lower < upper) {
        return Err(Error::InconsistentGeometry { lower, upper });
    }
    Ok((lower, upper))
}

/// Constants `(μ_L, ν_L, ρ_L)` comparing essential energies across a `q`-quasiconformal map.
pub fn transport_constants(l: f64, q_phi: f64) -> Result<(f64, f64, f64)> {
    if !(l > 0.0) {
        return Err(Error::DomainError(format!("modulus must be positive, got {l}")));
    }
    if !(q_phi >= 1.0) {
        return Err(Error::DomainError(format!("dilatation must be at least 1, got {q_phi}")));
    }
    let mu = (-2.0 * PI * l).exp();
    let nu = mu * q_phi / 12.0 + q_phi - 1.0;
    let rho = (q_phi * (1.0 + mu / 12.0)).powi(2) - 1.0;
    Ok((mu, nu, rho))
}

/// `min(1/4, sys/4, widths...)`, the width entering the energy bound for `σ₂`.
pub fn homology_width(sys_m: f64, collar_widths: &[f64]) -> Result<f64> {
    if !(sys_m > 0.0) {
        return Err(Error::DomainError(format!("systole must be positive, got {sys_m}")));
    }
    if let Some(w) = collar_widths.iter().find(|w| !(**w > 0.0)) {
        return Err(Error::DomainError(format!("collar widths must be positive, got {w}")));
    }
    Ok(collar_widths.iter().fold(0.25f64.min(0.25 * sys_m), |a, &w| a.min(w)))
}

/// Upper bound `ℓ / (π - 2 arcsin tanh(ℓ/2))` for a diagonal Gram entry crossed by a
/// curve of length `ℓ`.
pub fn diagonal_entry_bound(ell: f64) -> Result<f64> {
    check_length(ell)?;
    Ok(ell / (PI - 2.0 * (0.5 * ell).tanh().asin()))
}

/// Upper bound `L + πg / w²` for the energy of the form dual to the core loop.
pub fn core_dual_energy_bound(l: f64, g: u32, w_a: f64) -> Result<f64> {
    if !(w_a > 0.0) {
        return Err(Error::DomainError(format!("width must be positive, got {w_a}")));
    }
    Ok(l + PI * g as f64 / (w_a * w_a))
}

/// Log-spaced grid of `n` lengths in `(0, max]`, the largest equal to `max`.
pub fn length_grid(min: f64, max: f64, n: usize) -> Result<Vec<f64>> {
    if !(min > 0.0 && min <= max) || n == 0 {
        return Err(Error::InvalidInput(format!("bad length grid [{min}, {max}] with {n} points")));
    }
    if n == 1 {
        return Ok(vec![max]);
    }
    let (a, b) = (min.ln(), max.ln());
    Ok((0..n).map(|i| if i == n - 1 { max } else { (a + (b - a) * i as f64 / (n - 1) as f64).exp() }).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn half_collar_modulus_matches_fermi_image() {
        let q = collar(0.5).unwrap();
        assert!((fermi_to_flat(0.5, q.cl).unwrap() - q.m).abs() < 1e-13);
    }

    #[test]
    fn domain_errors() {
        assert!(collar(0.0).is_err());
        assert!(collar(1.5).is_err());
        assert!(cusp_map(-LN_2).is_err());
        assert!(reduced_collar(2.0).is_err());
    }
}
