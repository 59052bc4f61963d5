//! Canonical homology bases from a tree-cotree decomposition.
//!
//! A breadth-first spanning tree `T` of the vertices and a breadth-first spanning tree
//! of the faces across the remaining edges leave `2g` generator edges. Each generator
//! edge closed up through `T` is a cycle `γ_k`, and the closed cochain `ζ_k` that is 1
//! on generator `k`, 0 on the other generators and on `T` is dual to it. The
//! intersection form in the `γ` basis is `Q = -W⁻¹` with `W_ij = ∫ ζ_i ∧ ζ_j`. An
//! integer symplectic reduction of `Q` then yields a basis with intersection matrix `J`.

use crate::cochain::{wedge, Cochain1};
use crate::error::{Error, Result};
use crate::mesh::{Chain, SurfaceMesh};
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use std::collections::VecDeque;

/// Integer square matrix stored by rows.
pub type IntMatrix = Vec<Vec<i64>>;

/// A pin slot with only one of its two cycles given.
type HalfPin = (usize, Option<Vec<i64>>, Option<Vec<i64>>);

/// The block diagonal matrix of `[[0, 1], [-1, 0]]` blocks.
pub fn j_matrix(g: usize) -> IntMatrix {
    let mut j = vec![vec![0; 2 * g]; 2 * g];
    for k in 0..g {
        j[2 * k][2 * k + 1] = 1;
        j[2 * k + 1][2 * k] = -1;
    }
    j
}

/// Generator cycles `γ_k` and their dual cochains `ζ_k`.
#[derive(Clone, Debug)]
pub struct TreeCotree {
    pub generators: Vec<usize>,
    pub cycles: Vec<Chain>,
    pub duals: Vec<Cochain1>,
}

/// Two faces per edge on a closed mesh, as `(face, position in face)`.
fn edge_faces(mesh: &SurfaceMesh) -> Result<Vec<[(usize, usize); 2]>> {
    let mut ef = vec![[(usize::MAX, 0); 2]; mesh.n_edges()];
    let mut count = vec![0usize; mesh.n_edges()];
    for (f, face) in mesh.faces().iter().enumerate() {
        for (i, &e) in face.edges.iter().enumerate() {
            if count[e] < 2 {
                ef[e][count[e]] = (f, i);
            }
            count[e] += 1;
        }
    }
    if count.iter().any(|c| *c != 2) {
        return Err(Error::InvalidInput("homology needs a closed mesh (every edge on two faces)".into()));
    }
    Ok(ef)
}

pub fn tree_cotree(mesh: &SurfaceMesh) -> Result<TreeCotree> {
    if !mesh.is_closed() {
        return Err(Error::InvalidInput("homology needs a closed mesh".into()));
    }
    let nv = mesh.n_vertices();
    let ne = mesh.n_edges();
    let ef = edge_faces(mesh)?;
    // adjacency lists are in edge-index order, which fixes the BFS tie-breaking
    let mut adj: Vec<Vec<(usize, usize)>> = vec![Vec::new(); nv];
    for (e, ed) in mesh.edges().iter().enumerate() {
        adj[ed[0]].push((e, ed[1]));
        adj[ed[1]].push((e, ed[0]));
    }
    let mut parent_edge: Vec<Option<usize>> = vec![None; nv];
    let mut seen = vec![false; nv];
    let mut in_tree = vec![false; ne];
    let mut queue = VecDeque::from([0usize]);
    seen[0] = true;
    while let Some(v) = queue.pop_front() {
        for &(e, w) in &adj[v] {
            if !seen[w] {
                seen[w] = true;
                parent_edge[w] = Some(e);
                in_tree[e] = true;
                queue.push_back(w);
            }
        }
    }
    if seen.iter().any(|s| !s) {
        return Err(Error::InvalidInput("mesh is not connected".into()));
    }
    let nf = mesh.n_faces();
    let mut face_parent: Vec<Option<usize>> = vec![None; nf];
    let mut face_seen = vec![false; nf];
    let mut in_cotree = vec![false; ne];
    let mut order = Vec::with_capacity(nf);
    let mut queue = VecDeque::from([0usize]);
    face_seen[0] = true;
    while let Some(f) = queue.pop_front() {
        order.push(f);
        let mut nbrs: Vec<(usize, usize)> = mesh.faces()[f]
            .edges
            .iter()
            .filter(|e| !in_tree[**e])
            .map(|&e| {
                let [(f0, _), (f1, _)] = ef[e];
                (e, if f0 == f { f1 } else { f0 })
            })
            .collect();
        nbrs.sort_unstable();
        for (e, g) in nbrs {
            if !face_seen[g] {
                face_seen[g] = true;
                face_parent[g] = Some(e);
                in_cotree[e] = true;
                queue.push_back(g);
            }
        }
    }
    let generators: Vec<usize> = (0..ne).filter(|e| !in_tree[*e] && !in_cotree[*e]).collect();
    if generators.is_empty() {
        return Err(Error::GenusZero);
    }
    let to_root = |mut v: usize| {
        let mut c = vec![0i64; ne];
        while let Some(e) = parent_edge[v] {
            let [a, b] = mesh.edges()[e];
            let (up, sign) = if b == v { (a, -1) } else { (b, 1) };
            c[e] += sign;
            v = up;
        }
        c
    };
    let mut cycles = Vec::with_capacity(generators.len());
    let mut duals = Vec::with_capacity(generators.len());
    for (k, &g) in generators.iter().enumerate() {
        let [u, v] = mesh.edges()[g];
        let mut c = to_root(v);
        for (x, y) in c.iter_mut().zip(to_root(u)) {
            *x -= y;
        }
        c[g] += 1;
        cycles.push(c);
        let mut z = vec![0.0; ne];
        for (j, &h) in generators.iter().enumerate() {
            z[h] = if j == k { 1.0 } else { 0.0 };
        }
        for &f in order.iter().rev() {
            if let Some(pe) = face_parent[f] {
                let face = &mesh.faces()[f];
                let mut s = 0.0;
                let mut own = 0.0;
                for (e, sg) in face.edges.iter().zip(&face.signs) {
                    if *e == pe {
                        own = *sg as f64;
                    } else {
                        s += *sg as f64 * z[*e];
                    }
                }
                z[pe] = -s / own;
            }
        }
        duals.push(Cochain1::from_values(z));
    }
    Ok(TreeCotree { generators, cycles, duals })
}

fn round_integer(x: f64, what: &str) -> Result<i64> {
    let r = x.round();
    if (x - r).abs() > 1e-6 {
        return Err(Error::SingularPeriodSystem(format!("{what} {x} is not an integer")));
    }
    Ok(r as i64)
}

fn form(q: &IntMatrix, a: &[i64], b: &[i64]) -> i64 {
    let mut s = 0;
    for (i, ai) in a.iter().enumerate() {
        if *ai != 0 {
            for (j, bj) in b.iter().enumerate() {
                s += ai * q[i][j] * bj;
            }
        }
    }
    s
}

fn combine(a: &[i64], s: i64, b: &[i64]) -> Vec<i64> {
    a.iter().zip(b).map(|(x, y)| x + s * y).collect()
}

/// Row echelon form over the integers; returns the nonzero rows, a basis of the
/// lattice spanned by the input.
fn integer_echelon(mut rows: Vec<Vec<i64>>) -> Vec<Vec<i64>> {
    let n = rows.first().map_or(0, Vec::len);
    let mut top = 0;
    for col in 0..n {
        loop {
            let pivot = (top..rows.len()).filter(|&r| rows[r][col] != 0).min_by_key(|&r| (rows[r][col].abs(), r));
            let Some(p) = pivot else { break };
            rows.swap(top, p);
            let mut done = true;
            for r in top + 1..rows.len() {
                if rows[r][col] != 0 {
                    let q = rows[r][col] / rows[top][col];
                    rows[r] = combine(&rows[r], -q, &rows[top]);
                    if rows[r][col] != 0 {
                        done = false;
                    }
                }
            }
            if done {
                top += 1;
                break;
            }
        }
        if top == rows.len() {
            break;
        }
    }
    rows.truncate(top);
    rows
}

/// Projects `v` onto the `Q`-orthogonal complement of the pair `(a, b)` with `Q(a, b) = 1`.
fn project_out(q: &IntMatrix, v: &[i64], a: &[i64], b: &[i64]) -> Vec<i64> {
    let (va, vb) = (form(q, v, a), form(q, v, b));
    combine(&combine(v, -vb, a), va, b)
}

/// Finds `f` in the span of `basis` with `Q(e, f) = 1` by Euclid steps on the basis.
fn partner(q: &IntMatrix, e: &[i64], basis: &mut [Vec<i64>]) -> Result<usize> {
    loop {
        let vals: Vec<i64> = basis.iter().map(|b| form(q, e, b)).collect();
        let Some(j) = (0..basis.len()).filter(|&j| vals[j] != 0).min_by_key(|&j| (vals[j].abs(), j)) else {
            return Err(Error::SingularPeriodSystem("cycle pairs trivially with the whole lattice".into()));
        };
        let mut reduced = true;
        for k in 0..basis.len() {
            if k != j && vals[k] != 0 {
                let s = vals[k] / vals[j];
                basis[k] = combine(&basis[k], -s, &basis[j].clone());
                if vals[k] - s * vals[j] != 0 {
                    reduced = false;
                }
            }
        }
        if reduced {
            return match vals[j] {
                1 => Ok(j),
                -1 => {
                    basis[j] = basis[j].iter().map(|x| -x).collect();
                    Ok(j)
                }
                v => Err(Error::SingularPeriodSystem(format!("intersection form is not unimodular (gcd {v})"))),
            };
        }
    }
}

/// Which basis slots are prescribed: pairs `(α_{2k-1}, α_{2k})` with one or both
/// cycles given.
#[derive(Clone, Debug, Default)]
pub struct Pins {
    pub pairs: Vec<(usize, Option<Chain>, Option<Chain>)>,
}

impl Pins {
    pub fn none() -> Self {
        Pins::default()
    }

    /// Prescribes `α_{2k+1}` (first) and `α_{2k+2}` (second), counting pairs from 0.
    pub fn pair(mut self, k: usize, first: Option<Chain>, second: Option<Chain>) -> Self {
        self.pairs.push((k, first, second));
        self
    }
}

/// A canonical basis `α₁, …, α_{2g}` with its dual closed cochains.
#[derive(Clone, Debug)]
pub struct HomologyBasis {
    /// Cycles as edge chains.
    pub cycles: Vec<Chain>,
    /// Coordinates of each cycle in the tree-cotree generator basis.
    pub coords: IntMatrix,
    /// `intersection[i][j]` is the intersection number of `α_i` with `α_j`.
    pub intersection: IntMatrix,
    /// Closed cochains with `∫_{α_i} c_k = δ_ik`.
    pub duals: Vec<Cochain1>,
}

impl HomologyBasis {
    pub fn genus(&self) -> usize {
        self.cycles.len() / 2
    }
}

/// Intersection form of the generator cycles and the tree-cotree data.
pub fn generator_form(mesh: &SurfaceMesh) -> Result<(TreeCotree, IntMatrix)> {
    let tc = tree_cotree(mesh)?;
    let n = tc.generators.len();
    let w = DMatrix::from_fn(n, n, |i, j| wedge(mesh, &tc.duals[i], &tc.duals[j]));
    let inv = w.try_inverse().ok_or_else(|| Error::SingularPeriodSystem("cup product matrix is singular".into()))?;
    let mut q = vec![vec![0; n]; n];
    for i in 0..n {
        for j in 0..n {
            q[i][j] = round_integer(-inv[(i, j)], "intersection number")?;
        }
    }
    Ok((tc, q))
}

/// Matrix of intersection numbers of the given cycles.
pub fn intersection_numbers(mesh: &SurfaceMesh, cycles: &[Chain]) -> Result<IntMatrix> {
    let (tc, q) = generator_form(mesh)?;
    let coords = cycles
        .iter()
        .map(|c| tc.duals.iter().map(|z| round_integer(z.pair(c), "cycle coordinate")).collect::<Result<Vec<_>>>())
        .collect::<Result<Vec<_>>>()?;
    Ok(coords.iter().map(|a| coords.iter().map(|b| form(&q, a, b)).collect()).collect())
}

/// Builds a canonical basis honoring `pins`; fully pinned pairs must already
/// intersect once positively and be orthogonal to each other.
pub fn homology_basis(mesh: &SurfaceMesh, pins: &Pins) -> Result<HomologyBasis> {
    let (tc, q) = generator_form(mesh)?;
    let n = q.len();
    if n % 2 != 0 {
        return Err(Error::SingularPeriodSystem(format!("odd number {n} of generators")));
    }
    let g = n / 2;
    let coords_of = |c: &Chain| -> Result<Vec<i64>> {
        if mesh.chain_boundary(c).iter().any(|b| *b != 0) {
            return Err(Error::InvalidInput("pinned chain is not a cycle".into()));
        }
        tc.duals.iter().map(|z| round_integer(z.pair(c), "cycle coordinate")).collect()
    };
    let mut slots: Vec<Option<(Vec<i64>, Vec<i64>)>> = vec![None; g];
    let mut pinned_chain: Vec<Option<Chain>> = vec![None; n];
    let mut basis: Vec<Vec<i64>> = (0..n).map(|i| (0..n).map(|j| i64::from(i == j)).collect()).collect();
    let mut half: Vec<HalfPin> = Vec::new();
    for (k, a, b) in &pins.pairs {
        if *k >= g || slots[*k].is_some() || half.iter().any(|h| h.0 == *k) {
            return Err(Error::InvalidInput(format!("pin slot {k} is out of range or repeated")));
        }
        let ca = a.as_ref().map(coords_of).transpose()?;
        let cb = b.as_ref().map(coords_of).transpose()?;
        pinned_chain[2 * k] = a.clone();
        pinned_chain[2 * k + 1] = b.clone();
        match (ca, cb) {
            (Some(x), Some(y)) => {
                if form(&q, &x, &y) != 1 {
                    return Err(Error::InvalidInput(format!("pinned pair {k} has intersection number {} (expected 1)", form(&q, &x, &y))));
                }
                slots[*k] = Some((x, y));
            }
            (x, y) => half.push((*k, x, y)),
        }
    }
    if half.len() > 1 {
        return Err(Error::InvalidInput("at most one pair may be pinned on one side only".into()));
    }
    let full: Vec<(Vec<i64>, Vec<i64>)> = slots.iter().flatten().cloned().collect();
    for (i, (a, b)) in full.iter().enumerate() {
        for (c, d) in &full[i + 1..] {
            if [form(&q, a, c), form(&q, a, d), form(&q, b, c), form(&q, b, d)].iter().any(|v| *v != 0) {
                return Err(Error::InvalidInput("pinned pairs must not intersect each other".into()));
            }
        }
        basis = integer_echelon(basis.iter().map(|v| project_out(&q, v, a, b)).collect());
    }
    for (k, a, b) in half {
        let fixed_first = a.is_some();
        let p = a.or(b).unwrap_or_default();
        if p.is_empty() {
            continue;
        }
        for (x, y) in &full {
            if form(&q, &p, x) != 0 || form(&q, &p, y) != 0 {
                return Err(Error::InvalidInput("half-pinned cycle meets a pinned pair".into()));
            }
        }
        let j = partner(&q, &p, &mut basis)?;
        let f = basis[j].clone();
        let pair = if fixed_first { (p, f) } else { (f.iter().map(|x| -x).collect(), p) };
        basis = integer_echelon(basis.iter().map(|v| project_out(&q, v, &pair.0, &pair.1)).collect());
        slots[k] = Some(pair);
    }
    for slot in slots.iter_mut().filter(|s| s.is_none()) {
        if basis.len() < 2 {
            return Err(Error::SingularPeriodSystem("symplectic reduction ran out of vectors".into()));
        }
        let e = basis.remove(0);
        let j = partner(&q, &e, &mut basis)?;
        let f = basis.remove(j);
        basis = basis.iter().map(|v| project_out(&q, v, &e, &f)).collect();
        *slot = Some((e, f));
    }
    let mut coords = Vec::with_capacity(n);
    for (a, b) in slots.into_iter().flatten() {
        coords.push(a);
        coords.push(b);
    }
    let intersection: IntMatrix = coords.iter().map(|a| coords.iter().map(|b| form(&q, a, b)).collect()).collect();
    if intersection != j_matrix(g) {
        return Err(Error::SingularPeriodSystem("reduced basis does not have the standard intersection matrix".into()));
    }
    // B Q Bᵀ = J gives B⁻¹ = -Q Bᵀ J
    let jm = j_matrix(g);
    let mut qbt = vec![vec![0i64; n]; n];
    for (i, row) in qbt.iter_mut().enumerate() {
        for (k, slot) in row.iter_mut().enumerate() {
            *slot = (0..n).map(|m| q[i][m] * coords[k][m]).sum();
        }
    }
    let binv: IntMatrix = (0..n).map(|i| (0..n).map(|k| -(0..n).map(|m| qbt[i][m] * jm[m][k]).sum::<i64>()).collect()).collect();
    let ne = mesh.n_edges();
    let mut duals = Vec::with_capacity(n);
    for k in 0..n {
        let mut c = Cochain1::zeros(ne);
        for (m, z) in tc.duals.iter().enumerate() {
            if binv[m][k] != 0 {
                c.axpy(binv[m][k] as f64, z);
            }
        }
        duals.push(c);
    }
    let cycles = (0..n)
        .map(|i| {
            pinned_chain[i].clone().unwrap_or_else(|| {
                let mut c = vec![0i64; ne];
                for (m, gm) in tc.cycles.iter().enumerate() {
                    if coords[i][m] != 0 {
                        for (x, y) in c.iter_mut().zip(gm) {
                            *x += coords[i][m] * y;
                        }
                    }
                }
                c
            })
        })
        .collect();
    Ok(HomologyBasis { cycles, coords, intersection, duals })
}

/// Serializable summary of a basis for reports.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BasisSummary {
    pub genus: usize,
    pub coords: IntMatrix,
    pub cycle_lengths: Vec<i64>,
}

impl From<&HomologyBasis> for BasisSummary {
    fn from(b: &HomologyBasis) -> Self {
        BasisSummary {
            genus: b.genus(),
            coords: b.coords.clone(),
            cycle_lengths: b.cycles.iter().map(|c| c.iter().map(|x| x.abs()).sum()).collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn echelon_of_dependent_rows() {
        let rows = vec![vec![2, 4], vec![3, 6], vec![0, 1]];
        let e = integer_echelon(rows);
        assert_eq!(e.len(), 2);
        assert_eq!(e[0][0].abs(), 1);
    }

    #[test]
    fn j_squares_to_minus_identity() {
        let j = j_matrix(2);
        for i in 0..4 {
            for k in 0..4 {
                let s: i64 = (0..4).map(|m| j[i][m] * j[m][k]).sum();
                assert_eq!(s, if i == k { -1 } else { 0 });
            }
        }
    }
}
