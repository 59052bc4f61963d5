//! The limit package `(𝔪, κ, π₂₂, q)` and the matrix family `P(λ)` it generates.
//!
//! `p_ij(λ) = q_ij + κ_i κ_j / λ` except `p₂₂(λ) = π₂₂ + λ + κ₂²/λ`, with `κ₁ = 1` and
//! `q_1j = 0`. Extraction inverts these relations at `λ = 1/P₁₁` exactly.

use crate::error::{Error, Result};
use crate::family::FamilySample;
use crate::homology::j_matrix;
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LimitPackage {
    pub g: usize,
    pub m: f64,
    /// `κ₁ = 1, κ₂, …, κ_{2g}`.
    pub kappa: Vec<f64>,
    pub pi22: f64,
    /// `q_ij` for all index pairs; row and column 1 are zero and the `(2, 2)` slot is
    /// unused (it is `π₂₂`).
    pub q: Vec<Vec<f64>>,
}

fn check_spd(p: &DMatrix<f64>) -> Result<()> {
    if p.nrows() != p.ncols() || p.nrows() < 2 || !p.nrows().is_multiple_of(2) {
        return Err(Error::DegenerateP(format!("matrix is {}x{}, need even square size", p.nrows(), p.ncols())));
    }
    if !(p[(0, 0)] > 0.0) {
        return Err(Error::DegenerateP(format!("P11 = {} is not positive", p[(0, 0)])));
    }
    if p.clone().cholesky().is_none() {
        return Err(Error::DegenerateP("matrix is not positive definite".into()));
    }
    Ok(())
}

/// Package with `P = assemble(package, 1/P₁₁)` for a Gram matrix sampled at modulus `l`.
pub fn extract_package(p: &DMatrix<f64>, l: f64) -> Result<LimitPackage> {
    check_spd(p)?;
    if !(l > 0.0) {
        return Err(Error::DomainError(format!("modulus must be positive, got {l}")));
    }
    let n = p.nrows();
    let p11 = p[(0, 0)];
    let kappa: Vec<f64> = (0..n).map(|j| if j == 0 { 1.0 } else { p[(0, j)] / p11 }).collect();
    let mut q = vec![vec![0.0; n]; n];
    for i in 1..n {
        for j in 1..n {
            if (i, j) != (1, 1) {
                q[i][j] = p[(i, j)] - p[(0, i)] * p[(0, j)] / p11;
            }
        }
    }
    let pi22 = p[(1, 1)] - 1.0 / p11 - p[(0, 1)] * p[(0, 1)] / p11;
    Ok(LimitPackage { g: n / 2, m: 1.0 / p11 - l, kappa, pi22, q })
}

impl LimitPackage {
    pub fn size(&self) -> usize {
        2 * self.g
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.size();
        if self.g < 1 || self.kappa.len() != n || self.q.len() != n || self.q.iter().any(|r| r.len() != n) {
            return Err(Error::InvalidInput("package arrays do not match the genus".into()));
        }
        if self.kappa[0] != 1.0 {
            return Err(Error::InvalidInput("package needs κ₁ = 1".into()));
        }
        if self.q[0].iter().any(|x| *x != 0.0) || self.q.iter().any(|r| r[0] != 0.0) {
            return Err(Error::InvalidInput("package needs q_1j = 0".into()));
        }
        Ok(())
    }

    /// `P(λ)`.
    pub fn assemble(&self, lambda: f64) -> Result<DMatrix<f64>> {
        if !(lambda > 0.0) || !lambda.is_finite() {
            return Err(Error::DomainError(format!("λ must be positive and finite, got {lambda}")));
        }
        self.validate()?;
        let n = self.size();
        Ok(DMatrix::from_fn(n, n, |i, j| {
            let k = self.kappa[i] * self.kappa[j] / lambda;
            if (i, j) == (1, 1) {
                self.pi22 + lambda + k
            } else {
                self.q[i][j] + k
            }
        }))
    }

    /// `‖P(λ) J P(λ) - J‖∞`, evaluated through the Laurent coefficients of `P(λ) J P(λ)`.
    /// Forming `P(λ)` first would round the `λ`-sized entry and leave a residual of
    /// order `λ ε` even for an exactly symplectic package.
    pub fn defect_at(&self, lambda: f64) -> Result<f64> {
        if !(lambda > 0.0) || !lambda.is_finite() {
            return Err(Error::DomainError(format!("λ must be positive and finite, got {lambda}")));
        }
        self.validate()?;
        let n = self.size();
        let a = DMatrix::from_fn(n, n, |i, j| if (i, j) == (1, 1) { self.pi22 } else { self.q[i][j] });
        let e = DMatrix::from_fn(n, n, |i, j| if (i, j) == (1, 1) { 1.0 } else { 0.0 });
        let k = DMatrix::from_fn(n, n, |i, j| self.kappa[i] * self.kappa[j]);
        let jm = j_matrix(self.g);
        let j = DMatrix::from_fn(n, n, |r, c| jm[r][c] as f64);
        let prod = |x: &DMatrix<f64>, y: &DMatrix<f64>| x * &j * y;
        let c0 = prod(&a, &a) + prod(&e, &k) + prod(&k, &e) - &j;
        let c1 = prod(&a, &e) + prod(&e, &a);
        let c2 = prod(&e, &e);
        let cm1 = prod(&a, &k) + prod(&k, &a);
        let cm2 = prod(&k, &k);
        let total = c0 + c1 * lambda + c2 * (lambda * lambda) + cm1 / lambda + cm2 / (lambda * lambda);
        Ok(total.abs().max())
    }

    /// Same package with indices `3..2g` permuted: new index `k` takes old `perm[k]`
    /// (0-based, fixing 0 and 1).
    pub fn relabeled(&self, perm: &[usize]) -> Result<LimitPackage> {
        let n = self.size();
        if perm.len() != n || perm[0] != 0 || perm[1] != 1 {
            return Err(Error::InvalidInput("permutation must fix the first two indices".into()));
        }
        let mut seen = vec![false; n];
        for &p in perm {
            if p >= n || seen[p] {
                return Err(Error::InvalidInput("not a permutation".into()));
            }
            seen[p] = true;
        }
        Ok(LimitPackage {
            g: self.g,
            m: self.m,
            kappa: perm.iter().map(|&p| self.kappa[p]).collect(),
            pi22: self.pi22,
            q: perm.iter().map(|&a| perm.iter().map(|&b| self.q[a][b]).collect()).collect(),
        })
    }
}

/// `‖P J P - J‖∞` (entrywise maximum).
pub fn symplectic_defect(p: &DMatrix<f64>) -> f64 {
    let g = p.nrows() / 2;
    let jm = j_matrix(g);
    let j = DMatrix::from_fn(2 * g, 2 * g, |a, b| jm[a][b] as f64);
    (p * &j * p - j).abs().max()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SymplecticReport {
    pub lambdas: Vec<f64>,
    pub residuals: Vec<f64>,
    /// `(max - min) / max` over the residuals; zero when all vanish.
    pub relative_spread: f64,
}

impl SymplecticReport {
    pub fn max_residual(&self) -> f64 {
        self.residuals.iter().copied().fold(0.0, f64::max)
    }
}

pub fn symplectic_residual(pkg: &LimitPackage, lambdas: &[f64]) -> Result<SymplecticReport> {
    if lambdas.is_empty() {
        return Err(Error::InsufficientSamples { needed: 1, got: 0 });
    }
    let residuals = lambdas.iter().map(|&l| pkg.defect_at(l)).collect::<Result<Vec<_>>>()?;
    let max = residuals.iter().copied().fold(0.0, f64::max);
    let min = residuals.iter().copied().fold(f64::INFINITY, f64::min);
    let relative_spread = if max > 0.0 { (max - min) / max } else { 0.0 };
    Ok(SymplecticReport { lambdas: lambdas.to_vec(), residuals, relative_spread })
}

/// Expected decay exponent of the error of entry `(i, j)` (0-based): `2π` except on
/// row and column 2, where it is `π`.
pub fn rate_class(i: usize, j: usize) -> f64 {
    if i == 1 || j == 1 {
        PI
    } else {
        2.0 * PI
    }
}

/// A measured slope `s` matches the rate `r` when `s ≤ -0.75 r`.
pub const RATE_WINDOW: f64 = 0.25;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EntryRate {
    pub i: usize,
    pub j: usize,
    /// `|P_ij(S_L) - P(m̂ + L)_ij|` for each sample, in increasing `L`.
    pub residuals: Vec<f64>,
    /// Fitted slope of `ln residual` against `L` over the samples above the floor,
    /// excluding the reference sample.
    pub slope: Option<f64>,
    pub expected_rate: f64,
    pub matches_rate: Option<bool>,
    /// Residuals never increase by more than the floor.
    pub monotone: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RateReport {
    #[serde(rename = "L")]
    pub l: Vec<f64>,
    pub m_hat: f64,
    pub floor: f64,
    /// `|P₁₁(S_L)(m̂ + L) - 1|` per sample.
    pub p11_defect: Vec<f64>,
    pub entries: Vec<EntryRate>,
    pub reference: LimitPackage,
}

fn fit_slope(x: &[f64], y: &[f64]) -> Option<f64> {
    if x.len() < 2 {
        return None;
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let my = ly.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    let sxy: f64 = x.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    Some(sxy / sxx)
}

/// Compares each sample with `P(m̂ + L)` of the package taken at the largest modulus,
/// `m̂` being the mean of `1/P₁₁ - L` over the two largest moduli. Residuals at or
/// below `floor` are excluded from slope fits.
pub fn fit_asymptotics(samples: &[FamilySample], floor: f64) -> Result<RateReport> {
    if samples.len() < 4 {
        return Err(Error::InsufficientSamples { needed: 4, got: samples.len() });
    }
    let mut s: Vec<&FamilySample> = samples.iter().collect();
    s.sort_by(|a, b| a.l.total_cmp(&b.l));
    if s.windows(2).any(|w| w[0].l == w[1].l) {
        return Err(Error::InvalidInput("samples must have distinct moduli".into()));
    }
    let last = s[s.len() - 1];
    let prev = s[s.len() - 2];
    let m_of = |x: &FamilySample| 1.0 / x.p[0][0] - x.l;
    let m_hat = 0.5 * (m_of(last) + m_of(prev));
    let mut reference = extract_package(&last.p_matrix(), last.l)?;
    reference.m = m_hat;
    let n = reference.size();
    let models = s.iter().map(|x| reference.assemble(m_hat + x.l)).collect::<Result<Vec<_>>>()?;
    let p11_defect = s.iter().map(|x| (x.p[0][0] * (m_hat + x.l) - 1.0).abs()).collect();
    let mut entries = Vec::new();
    for i in 0..n {
        for j in i..n {
            let residuals: Vec<f64> = s.iter().zip(&models).map(|(x, m)| (x.p[i][j] - m[(i, j)]).abs()).collect();
            let (xs, ys): (Vec<f64>, Vec<f64>) =
                s[..s.len() - 1].iter().zip(&residuals).filter(|(_, r)| **r > floor).map(|(x, r)| (x.l, *r)).unzip();
            let slope = fit_slope(&xs, &ys);
            let expected_rate = rate_class(i, j);
            let matches_rate = slope.map(|v| v <= -(1.0 - RATE_WINDOW) * expected_rate);
            let monotone = residuals.windows(2).all(|w| w[1] <= w[0] + floor);
            entries.push(EntryRate { i, j, residuals, slope, expected_rate, matches_rate, monotone });
        }
    }
    Ok(RateReport { l: s.iter().map(|x| x.l).collect(), m_hat, floor, p11_defect, entries, reference })
}

/// Cross-modulus agreement of `q_ij`, `i, j ≥ 3`, between consecutive samples:
/// `(L, i, j, |Δq|)` for each consecutive pair in increasing `L`.
pub fn q_stability(samples: &[FamilySample]) -> Result<Vec<(f64, usize, usize, f64)>> {
    let mut s: Vec<&FamilySample> = samples.iter().collect();
    s.sort_by(|a, b| a.l.total_cmp(&b.l));
    let pk = s.iter().map(|x| extract_package(&x.p_matrix(), x.l)).collect::<Result<Vec<_>>>()?;
    let mut out = Vec::new();
    for k in 0..pk.len().saturating_sub(1) {
        let n = pk[k].size();
        for i in 2..n {
            for j in i..n {
                out.push((s[k].l, i, j, (pk[k].q[i][j] - pk[k + 1].q[i][j]).abs()));
            }
        }
    }
    Ok(out)
}

/// Off-diagonal and remainder blocks of a separating Gram matrix.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SplitReport {
    pub half_modulus: f64,
    /// `max |ω_ij| / √(p_ii p_jj)` over the off-diagonal block.
    pub omega_normalized: f64,
    /// `max |r_ij| / √(p_ii p_jj)` over both diagonal remainders.
    pub remainder_normalized: f64,
    /// Flat analogue `e^{-4π(M - 1)}` of the off-diagonal bound.
    pub omega_bound: f64,
    /// Its square, for the remainders.
    pub remainder_bound: f64,
}

pub fn separating_split(
    p: &DMatrix<f64>,
    g1: usize,
    limit1: &DMatrix<f64>,
    limit2: &DMatrix<f64>,
    half_modulus: f64,
) -> Result<SplitReport> {
    let n = p.nrows();
    let k = 2 * g1;
    if k == 0 || k >= n || limit1.nrows() != k || limit2.nrows() != n - k {
        return Err(Error::InvalidInput("block sizes do not match the split".into()));
    }
    let norm = |i: usize, j: usize, v: f64| v.abs() / (p[(i, i)] * p[(j, j)]).sqrt();
    let mut omega: f64 = 0.0;
    let mut rem: f64 = 0.0;
    for i in 0..n {
        for j in 0..n {
            let (a, b) = (i < k, j < k);
            if a != b {
                omega = omega.max(norm(i, j, p[(i, j)]));
            } else if a {
                rem = rem.max(norm(i, j, p[(i, j)] - limit1[(i, j)]));
            } else {
                rem = rem.max(norm(i, j, p[(i, j)] - limit2[(i - k, j - k)]));
            }
        }
    }
    let omega_bound = (-4.0 * PI * (half_modulus - 1.0)).exp();
    Ok(SplitReport {
        half_modulus,
        omega_normalized: omega,
        remainder_normalized: rem,
        omega_bound,
        remainder_bound: omega_bound * omega_bound,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_small() {
        let p = DMatrix::from_row_slice(2, 2, &[2.0, 1.0, 1.0, 3.0]);
        let pkg = extract_package(&p, 0.25).unwrap();
        assert!((pkg.m - 0.25).abs() < 1e-15);
        let back = pkg.assemble(0.5).unwrap();
        assert!((back - p).abs().max() < 1e-14);
    }
}
