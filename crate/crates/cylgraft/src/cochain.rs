//! Real 1-cochains on a [`SurfaceMesh`]: one value per oriented edge.

use crate::mesh::SurfaceMesh;
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Cochain1 {
    values: Vec<f64>,
}

impl Cochain1 {
    pub fn zeros(n_edges: usize) -> Self {
        Cochain1 { values: vec![0.0; n_edges] }
    }

    pub fn from_values(values: Vec<f64>) -> Self {
        Cochain1 { values }
    }

    /// Coboundary `df` of a vertex function.
    pub fn exact(mesh: &SurfaceMesh, f: &[f64]) -> Self {
        Cochain1 { values: mesh.edges().iter().map(|e| f[e[1]] - f[e[0]]).collect() }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Integral over an integer chain.
    pub fn pair(&self, chain: &[i64]) -> f64 {
        self.values.iter().zip(chain).filter(|(_, c)| **c != 0).map(|(v, c)| v * *c as f64).sum()
    }

    /// `self += s * other`.
    pub fn axpy(&mut self, s: f64, other: &Cochain1) {
        for (a, b) in self.values.iter_mut().zip(&other.values) {
            *a += s * b;
        }
    }

    pub fn scaled(&self, s: f64) -> Cochain1 {
        Cochain1 { values: self.values.iter().map(|v| s * v).collect() }
    }

    /// Signed sum around face `f`.
    pub fn face_sum(&self, mesh: &SurfaceMesh, f: usize) -> f64 {
        let face = &mesh.faces()[f];
        face.edges.iter().zip(&face.signs).map(|(e, s)| *s as f64 * self.values[*e]).sum()
    }

    /// Largest face sum in absolute value; zero for closed cochains.
    pub fn closedness_defect(&self, mesh: &SurfaceMesh) -> f64 {
        (0..mesh.n_faces()).map(|f| self.face_sum(mesh, f).abs()).fold(0.0, f64::max)
    }

    /// Weighted divergence `sum_e w_e c(e)` over edges leaving each vertex, taken with
    /// the sign of the edge's orientation.
    pub fn divergence(&self, mesh: &SurfaceMesh) -> Vec<f64> {
        let mut d = vec![0.0; mesh.n_vertices()];
        for ((e, w), c) in mesh.edges().iter().zip(mesh.weights()).zip(&self.values) {
            d[e[0]] += w * c;
            d[e[1]] -= w * c;
        }
        d
    }

    /// Energy inner product `sum_e w_e a(e) b(e)`.
    pub fn inner(&self, mesh: &SurfaceMesh, other: &Cochain1) -> f64 {
        mesh.weights().iter().zip(&self.values).zip(&other.values).map(|((w, a), b)| w * a * b).sum()
    }

    pub fn energy(&self, mesh: &SurfaceMesh) -> f64 {
        self.inner(mesh, self)
    }

    pub fn l2_norm(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>().sqrt()
    }
}

/// Discrete `∫ a ∧ b`: each face is split into a fan of triangles from its first
/// vertex and each triangle `(0, 1, 2)` contributes `½ (a₀₁ b₁₂ - a₁₂ b₀₁)`.
///
/// For closed cochains this is the antisymmetrized cup product evaluated on the
/// fundamental class, so integer cochains give integer intersection numbers.
pub fn wedge(mesh: &SurfaceMesh, a: &Cochain1, b: &Cochain1) -> f64 {
    let mut total = 0.0;
    for face in mesh.faces() {
        let (mut pa, mut pb) = (0.0, 0.0);
        let m = face.edges.len();
        let mut s = 0.0;
        for i in 0..m - 1 {
            let sign = face.signs[i] as f64;
            let (ai, bi) = (sign * a.values[face.edges[i]], sign * b.values[face.edges[i]]);
            if i >= 1 {
                s += pa * bi - ai * pb;
            }
            pa += ai;
            pb += bi;
        }
        total += 0.5 * s;
    }
    total
}
