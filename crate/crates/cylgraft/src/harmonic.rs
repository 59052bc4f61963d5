//! Discrete harmonic representatives, Gram period matrices and capacities.
//!
//! The harmonic form in the cohomology class of a closed cochain `c` is `c - df` with
//! `dᵀW d f = dᵀW c`; its energy `⟨σ, σ⟩_W` is the minimum over the class. On a closed
//! surface the Laplacian has the constants as kernel, removed by grounding vertex 0.

use crate::cochain::{wedge, Cochain1};
use crate::error::{Error, Result};
use crate::homology::{HomologyBasis, IntMatrix};
use crate::mesh::{CylinderBlock, SurfaceMesh};
use crate::solver::{ReducedLaplacian, SolveStats, SolverOptions};
use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Harmonic forms `σ_k` with `∫_{α_i} σ_k = δ_ik`, and their Gram matrix.
#[derive(Clone, Debug)]
pub struct HarmonicBasis {
    pub forms: Vec<Cochain1>,
    /// `gram[(i, j)] = ⟨σ_i, σ_j⟩`, symmetric positive definite.
    pub gram: DMatrix<f64>,
    pub stats: Vec<SolveStats>,
    /// Largest deviation of the period matrix `∫_{α_i} σ_k` from the identity before
    /// correction.
    pub period_defect: f64,
}

impl HarmonicBasis {
    pub fn genus(&self) -> usize {
        self.forms.len() / 2
    }

    pub fn energy(&self, k: usize) -> f64 {
        self.gram[(k, k)]
    }
}

/// `dᵀ W c`, the right-hand side for the projection of `c`.
fn codifferential_rhs(mesh: &SurfaceMesh, c: &Cochain1) -> Vec<f64> {
    c.divergence(mesh).into_iter().map(|d| -d).collect()
}

/// Harmonic representative of a closed cochain on a closed mesh.
pub fn harmonic_projection(
    mesh: &SurfaceMesh,
    lap: &ReducedLaplacian,
    c: &Cochain1,
    opts: &SolverOptions,
) -> Result<(Cochain1, SolveStats)> {
    let rhs = codifferential_rhs(mesh, c);
    let (f, stats) = lap.solve(&rhs, |_| 0.0, opts)?;
    let mut sigma = c.clone();
    sigma.axpy(-1.0, &Cochain1::exact(mesh, &f));
    Ok((sigma, stats))
}

/// The Gram matrix, checked for symmetric positive definiteness.
pub fn gram_matrix(mesh: &SurfaceMesh, forms: &[Cochain1]) -> Result<DMatrix<f64>> {
    let n = forms.len();
    let mut p = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            let v = forms[i].inner(mesh, &forms[j]);
            p[(i, j)] = v;
            p[(j, i)] = v;
        }
    }
    if p.clone().cholesky().is_none() {
        return Err(Error::DegenerateP("gram matrix has a nonpositive pivot".into()));
    }
    Ok(p)
}

/// Harmonic forms dual to `basis`: each dual cochain is projected, and the period
/// matrix is inverted once more to remove rounding in the periods.
pub fn harmonic_dual_basis(mesh: &SurfaceMesh, basis: &HomologyBasis, opts: &SolverOptions) -> Result<HarmonicBasis> {
    if !mesh.is_closed() {
        return Err(Error::InvalidInput("harmonic dual basis needs a closed mesh".into()));
    }
    let lap = ReducedLaplacian::new(mesh, &[0]);
    let solved: Vec<(Cochain1, SolveStats)> =
        basis.duals.par_iter().map(|c| harmonic_projection(mesh, &lap, c, opts)).collect::<Result<_>>()?;
    let (raw, stats): (Vec<Cochain1>, Vec<SolveStats>) = solved.into_iter().unzip();
    let n = raw.len();
    let periods = DMatrix::from_fn(n, n, |i, k| raw[k].pair(&basis.cycles[i]));
    let period_defect = (&periods - DMatrix::<f64>::identity(n, n)).abs().max();
    let inv =
        periods.try_inverse().ok_or_else(|| Error::SingularPeriodSystem("period matrix of the projected basis is singular".into()))?;
    let forms: Vec<Cochain1> = (0..n)
        .map(|k| {
            let mut s = Cochain1::zeros(mesh.n_edges());
            for (m, r) in raw.iter().enumerate() {
                s.axpy(inv[(m, k)], r);
            }
            s
        })
        .collect();
    let gram = gram_matrix(mesh, &forms)?;
    Ok(HarmonicBasis { forms, gram, stats, period_defect })
}

/// `W_ij = ∫ c_i ∧ c_j` rounded to integers, with the largest rounding distance.
pub fn wedge_matrix(mesh: &SurfaceMesh, cochains: &[Cochain1]) -> (IntMatrix, f64) {
    let n = cochains.len();
    let mut w = vec![vec![0i64; n]; n];
    let mut dev: f64 = 0.0;
    for i in 0..n {
        for j in 0..n {
            let v = wedge(mesh, &cochains[i], &cochains[j]);
            w[i][j] = v.round() as i64;
            dev = dev.max((v - v.round()).abs());
        }
    }
    (w, dev)
}

/// `‖dᵀWσ‖_∞ / max_e w_e |σ_e|`: zero for harmonic forms.
pub fn harmonicity_residual(mesh: &SurfaceMesh, form: &Cochain1) -> f64 {
    let scale = mesh.weights().iter().zip(form.values()).map(|(w, v)| (w * v).abs()).fold(0.0, f64::max);
    if scale == 0.0 {
        return 0.0;
    }
    form.divergence(mesh).iter().map(|d| d.abs()).fold(0.0, f64::max) / scale
}

/// Energy of `form` on faces carrying one of `tags`. Face contributions partition
/// the total energy exactly.
pub fn region_energy(mesh: &SurfaceMesh, form: &Cochain1, tags: &[&str]) -> Result<f64> {
    let ids: Vec<usize> = tags.iter().map(|t| mesh.tag_id(t)).collect::<Result<_>>()?;
    let v = form.values();
    Ok(mesh
        .faces()
        .iter()
        .filter(|f| ids.contains(&f.tag))
        .map(|f| f.edges.iter().zip(&f.contrib).map(|(e, c)| c * v[*e] * v[*e]).sum::<f64>())
        .sum())
}

/// Solution of the Dirichlet problem `u = 0` on the first boundary loop and `u = 1` on
/// the second.
#[derive(Clone, Debug)]
pub struct Capacity {
    pub capacity: f64,
    pub potential: Vec<f64>,
    pub stats: SolveStats,
}

/// Capacity of a mesh with exactly two boundary loops: the energy of the harmonic
/// function that is 0 on one and 1 on the other.
pub fn dirichlet_capacity(mesh: &SurfaceMesh, opts: &SolverOptions) -> Result<Capacity> {
    let loops = mesh.boundary_loops();
    if loops.len() != 2 {
        return Err(Error::BoundaryCountError(loops.len()));
    }
    let mut value = vec![None; mesh.n_vertices()];
    for v in &loops[0].vertices {
        value[*v] = Some(0.0);
    }
    for v in &loops[1].vertices {
        if value[*v].is_some() {
            return Err(Error::InvalidInput("boundary loops share a vertex".into()));
        }
        value[*v] = Some(1.0);
    }
    let fixed: Vec<usize> = (0..mesh.n_vertices()).filter(|v| value[*v].is_some()).collect();
    let lap = ReducedLaplacian::new(mesh, &fixed);
    let mut rhs = vec![0.0; mesh.n_vertices()];
    for (e, w) in mesh.edges().iter().zip(mesh.weights()) {
        if let (None, Some(b)) = (value[e[0]], value[e[1]]) {
            rhs[e[0]] += w * b;
        }
        if let (Some(a), None) = (value[e[0]], value[e[1]]) {
            rhs[e[1]] += w * a;
        }
    }
    let (u, stats) = lap.solve(&rhs, |v| value[v].unwrap_or(0.0), opts)?;
    let capacity = Cochain1::exact(mesh, &u).energy(mesh);
    Ok(Capacity { capacity, potential: u, stats })
}

/// Kind and orientation of the edges of a cylinder block relative to its rings.
struct BlockEdges {
    /// `(edge, sign)` of the along-edges of each slab, ring `i` to ring `i + 1`.
    along: Vec<Vec<(usize, f64)>>,
    /// `(edge, sign)` of the around-edges of each ring, in increasing ring position.
    around: Vec<Vec<(usize, f64)>>,
}

fn block_edges(mesh: &SurfaceMesh, block: &CylinderBlock) -> Result<BlockEdges> {
    let lookup = |u: usize, v: usize| {
        mesh.edge_between(u, v)
            .map(|(e, s)| (e, s as f64))
            .ok_or_else(|| Error::InvalidInput(format!("cylinder block {} is missing edge {u}-{v}", block.name)))
    };
    let mut along = Vec::new();
    for w in block.rings.windows(2) {
        along.push(w[0].iter().zip(&w[1]).map(|(a, b)| lookup(*a, *b)).collect::<Result<Vec<_>>>()?);
    }
    let mut around = Vec::new();
    for r in &block.rings {
        let n = r.len();
        around.push((0..n).map(|j| lookup(r[j], r[(j + 1) % n])).collect::<Result<Vec<_>>>()?);
    }
    Ok(BlockEdges { along, around })
}

/// The translation-invariant part `a dx + b dy` of a form on a cylinder block, in the
/// block's flat coordinates (`x` along, `y` around).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinearPart {
    pub along: f64,
    pub around: f64,
    /// Energy of the linear part over the whole block.
    pub energy: f64,
}

/// Per-slab energies of a form on a cylinder block.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SlabEnergy {
    pub slab: usize,
    /// Distance of the slab centre from ring 0 in normalized units (circumference 1).
    pub position: f64,
    pub total: f64,
    /// Energy of the form minus its linear part.
    pub nonlinear: f64,
}

fn edge_values(block: &CylinderBlock, be: &BlockEdges, form: &Cochain1) -> (f64, f64) {
    let v = form.values();
    let mean = |lists: &[Vec<(usize, f64)>]| {
        let (s, n) = lists.iter().flatten().fold((0.0, 0usize), |(s, n), (e, sg)| (s + sg * v[*e], n + 1));
        s / n as f64
    };
    let hy = block.circumference / block.rings[0].len() as f64;
    (mean(&be.along) / block.slab_width, mean(&be.around) / hy)
}

/// Linear part of `form` on `block`: the mean along-edge value over the block and the
/// mean around-edge value over all rings. For harmonic forms both are exact because
/// flux and ring periods are conserved along a flat cylinder.
pub fn linear_part(mesh: &SurfaceMesh, form: &Cochain1, block: &CylinderBlock) -> Result<LinearPart> {
    let be = block_edges(mesh, block)?;
    let (a, b) = edge_values(block, &be, form);
    let area = block.circumference * block.slab_width * block.slab_faces.len() as f64;
    Ok(LinearPart { along: a, around: b, energy: (a * a + b * b) * area })
}

/// Energy of `form` minus the energy of its linear part on each listed block.
pub fn essential_energy(mesh: &SurfaceMesh, form: &Cochain1, blocks: &[&CylinderBlock]) -> Result<f64> {
    let mut e = form.energy(mesh);
    for b in blocks {
        e -= linear_part(mesh, form, b)?.energy;
    }
    Ok(e)
}

/// Slab-by-slab energy of `form` and of its nonlinear part on `block`.
pub fn slab_profile(mesh: &SurfaceMesh, form: &Cochain1, block: &CylinderBlock) -> Result<Vec<SlabEnergy>> {
    let be = block_edges(mesh, block)?;
    let (a, b) = edge_values(block, &be, form);
    let hy = block.circumference / block.rings[0].len() as f64;
    let mut lin = std::collections::HashMap::new();
    for (e, s) in be.along.iter().flatten() {
        lin.insert(*e, s * a * block.slab_width);
    }
    for (e, s) in be.around.iter().flatten() {
        lin.insert(*e, s * b * hy);
    }
    let v = form.values();
    let mut out = Vec::with_capacity(block.slab_faces.len());
    for (i, faces) in block.slab_faces.iter().enumerate() {
        let (mut total, mut nonlinear) = (0.0, 0.0);
        for &f in faces {
            let face = &mesh.faces()[f];
            for (e, c) in face.edges.iter().zip(&face.contrib) {
                let x = v[*e];
                let l = lin.get(e).copied().unwrap_or(0.0);
                total += c * x * x;
                nonlinear += c * (x - l) * (x - l);
            }
        }
        let position = (i as f64 + 0.5) * block.normalized_slab_width();
        out.push(SlabEnergy { slab: i, position, total, nonlinear });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::homology::{homology_basis, j_matrix, Pins};
    use crate::mesh::rectangle_torus;

    #[test]
    fn flat_torus_periods() {
        let m = rectangle_torus(2.0, 8, 6).unwrap();
        let pins = Pins::none().pair(0, Some(m.path_chain("x-loop").unwrap()), Some(m.path_chain("y-loop").unwrap()));
        let hb = homology_basis(&m, &pins).unwrap();
        assert_eq!(hb.intersection, j_matrix(1));
        let h = harmonic_dual_basis(&m, &hb, &SolverOptions::with_tol(1e-13)).unwrap();
        assert!((h.gram[(0, 0)] - 0.5).abs() < 1e-10);
        assert!((h.gram[(1, 1)] - 2.0).abs() < 1e-10);
        assert!(h.gram[(0, 1)].abs() < 1e-10);
        assert_eq!(wedge_matrix(&m, &hb.duals).0, j_matrix(1));
    }
}
