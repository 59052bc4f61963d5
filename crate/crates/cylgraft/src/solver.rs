//! Weighted graph Laplacians and a Jacobi-preconditioned conjugate gradient solver.

use crate::error::{Error, Result};
use crate::mesh::SurfaceMesh;
use nalgebra_sparse::{CooMatrix, CsrMatrix};
use serde::{Deserialize, Serialize};

/// Stopping rule for [`pcg`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverOptions {
    /// Stop once `||b - Ax|| <= rel_tol * ||b||`.
    pub rel_tol: f64,
    /// Iteration cap; `None` means `50 sqrt(n)`.
    pub max_iter: Option<usize>,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions { rel_tol: 1e-10, max_iter: None }
    }
}

impl SolverOptions {
    pub fn with_tol(rel_tol: f64) -> Self {
        SolverOptions { rel_tol, ..Self::default() }
    }

    fn cap(&self, n: usize) -> usize {
        self.max_iter.unwrap_or_else(|| (50.0 * (n as f64).sqrt()).ceil() as usize).max(1)
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SolveStats {
    pub iterations: usize,
    pub residual: f64,
}

fn matvec(a: &CsrMatrix<f64>, x: &[f64], y: &mut [f64]) {
    let (off, col, val) = (a.row_offsets(), a.col_indices(), a.values());
    for (i, yi) in y.iter_mut().enumerate() {
        let mut s = 0.0;
        for k in off[i]..off[i + 1] {
            s += val[k] * x[col[k]];
        }
        *yi = s;
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Solves `A x = b` for symmetric positive definite `A`, starting from zero.
pub fn pcg(a: &CsrMatrix<f64>, b: &[f64], opts: &SolverOptions) -> Result<(Vec<f64>, SolveStats)> {
    let n = b.len();
    if a.nrows() != n || a.ncols() != n {
        return Err(Error::InvalidInput(format!("matrix is {}x{}, right-hand side has {n} rows", a.nrows(), a.ncols())));
    }
    let mut x = vec![0.0; n];
    let bnorm = dot(b, b).sqrt();
    if bnorm == 0.0 {
        return Ok((x, SolveStats::default()));
    }
    let mut inv_diag = vec![0.0; n];
    for (i, d) in inv_diag.iter_mut().enumerate() {
        let row = a.row(i);
        let diag = row.col_indices().iter().zip(row.values()).find(|(c, _)| **c == i).map_or(0.0, |(_, v)| *v);
        if !(diag > 0.0) {
            return Err(Error::InvalidInput(format!("diagonal entry {i} is not positive")));
        }
        *d = 1.0 / diag;
    }
    let mut r = b.to_vec();
    let mut z: Vec<f64> = r.iter().zip(&inv_diag).map(|(r, d)| r * d).collect();
    let mut p = z.clone();
    let mut q = vec![0.0; n];
    let mut rz = dot(&r, &z);
    let cap = opts.cap(n);
    let target = opts.rel_tol * bnorm;
    for it in 1..=cap {
        matvec(a, &p, &mut q);
        let alpha = rz / dot(&p, &q);
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * q[i];
        }
        let rnorm = dot(&r, &r).sqrt();
        if rnorm <= target {
            return Ok((x, SolveStats { iterations: it, residual: rnorm / bnorm }));
        }
        for i in 0..n {
            z[i] = r[i] * inv_diag[i];
        }
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    Err(Error::SolverDivergence { iterations: cap, residual: dot(&r, &r).sqrt() / bnorm })
}

/// The mesh Laplacian `dᵀ W d` restricted to the vertices not listed in `fixed`.
#[derive(Clone, Debug)]
pub struct ReducedLaplacian {
    matrix: CsrMatrix<f64>,
    /// Position of each vertex among the unknowns.
    index: Vec<Option<usize>>,
    unknowns: usize,
}

impl ReducedLaplacian {
    pub fn new(mesh: &SurfaceMesh, fixed: &[usize]) -> Self {
        let nv = mesh.n_vertices();
        let mut is_fixed = vec![false; nv];
        for &v in fixed {
            is_fixed[v] = true;
        }
        let mut index = vec![None; nv];
        let mut unknowns = 0;
        for (v, slot) in index.iter_mut().enumerate() {
            if !is_fixed[v] {
                *slot = Some(unknowns);
                unknowns += 1;
            }
        }
        let mut coo = CooMatrix::new(unknowns, unknowns);
        for (e, w) in mesh.edges().iter().zip(mesh.weights()) {
            let (a, b) = (index[e[0]], index[e[1]]);
            if let Some(a) = a {
                coo.push(a, a, *w);
            }
            if let Some(b) = b {
                coo.push(b, b, *w);
            }
            if let (Some(a), Some(b)) = (a, b) {
                coo.push(a, b, -*w);
                coo.push(b, a, -*w);
            }
        }
        ReducedLaplacian { matrix: CsrMatrix::from(&coo), index, unknowns }
    }

    pub fn matrix(&self) -> &CsrMatrix<f64> {
        &self.matrix
    }

    pub fn unknowns(&self) -> usize {
        self.unknowns
    }

    /// Solves for the free vertex values given a full-length right-hand side; fixed
    /// vertices get `fixed_value(v)` in the returned full vector.
    pub fn solve(&self, rhs: &[f64], fixed_value: impl Fn(usize) -> f64, opts: &SolverOptions) -> Result<(Vec<f64>, SolveStats)> {
        let mut b = vec![0.0; self.unknowns];
        for (v, i) in self.index.iter().enumerate() {
            if let Some(i) = i {
                b[*i] = rhs[v];
            }
        }
        let (x, stats) = pcg(&self.matrix, &b, opts)?;
        let full = self.index.iter().enumerate().map(|(v, i)| i.map_or_else(|| fixed_value(v), |i| x[i])).collect();
        Ok((full, stats))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_spd_system() {
        let mut coo = CooMatrix::new(3, 3);
        for (i, j, v) in [(0, 0, 4.0), (0, 1, 1.0), (1, 0, 1.0), (1, 1, 3.0), (1, 2, -1.0), (2, 1, -1.0), (2, 2, 2.0)] {
            coo.push(i, j, v);
        }
        let a = CsrMatrix::from(&coo);
        let (x, stats) = pcg(&a, &[1.0, 2.0, 3.0], &SolverOptions::with_tol(1e-14)).unwrap();
        let mut y = vec![0.0; 3];
        matvec(&a, &x, &mut y);
        for (yi, bi) in y.iter().zip([1.0, 2.0, 3.0]) {
            assert!((yi - bi).abs() < 1e-12);
        }
        assert!(stats.iterations <= 3);
    }

    #[test]
    fn divergence_reported() {
        let mut coo = CooMatrix::new(2, 2);
        coo.push(0, 0, 1.0);
        coo.push(1, 1, 1e6);
        coo.push(0, 1, 0.5);
        coo.push(1, 0, 0.5);
        let a = CsrMatrix::from(&coo);
        let opts = SolverOptions { rel_tol: 1e-30, max_iter: Some(1) };
        assert!(matches!(pcg(&a, &[1.0, 1.0], &opts), Err(Error::SolverDivergence { .. })));
    }
}
