//! Oriented 2-complexes with conformal edge weights, assembled from flat pieces.
//!
//! Faces are triangles (cotangent weights) or rectangles (dual-over-primal length
//! weights, which equal the cotangent weights of either diagonal split since the
//! diagonal then carries weight `cot(π/2) = 0`). Every face stores the weight it
//! contributes to each of its edges, so energies split exactly over face tags.
//!
//! A [`MeshBuilder`] collects pieces with their own vertices, identifies vertices with
//! a union-find (periodic closure, gluing of boundary loops) and compacts them in
//! first-appearance order when the mesh is built.

use crate::error::{Error, Result};
use std::collections::BTreeMap;
use std::fmt::Write as _;

/// Integer 1-chain: one coefficient per edge, relative to the edge's orientation.
pub type Chain = Vec<i64>;

#[derive(Clone, Debug, PartialEq)]
struct RawFace {
    verts: Vec<usize>,
    contrib: Vec<f64>,
    tag: usize,
}

#[derive(Clone, Debug, PartialEq)]
struct RawCylinder {
    name: String,
    circumference: f64,
    slab_width: f64,
    rings: Vec<Vec<usize>>,
    slab_faces: Vec<Vec<usize>>,
}

/// A structured cylinder block: vertex rings `0..=k` around the cylinder and the faces
/// of each slab between consecutive rings. Ring `j` vertex `i` is joined to ring `j+1`
/// vertex `i` by an along-edge.
#[derive(Clone, Debug, PartialEq)]
pub struct CylinderBlock {
    pub name: String,
    /// Length of each ring in the flat metric of the piece.
    pub circumference: f64,
    /// Distance between consecutive rings in the same metric.
    pub slab_width: f64,
    pub rings: Vec<Vec<usize>>,
    pub slab_faces: Vec<Vec<usize>>,
}

impl CylinderBlock {
    /// Conformal modulus `length / circumference` of the block.
    pub fn modulus(&self) -> f64 {
        self.slab_width * self.slab_faces.len() as f64 / self.circumference
    }

    /// Slab width in units where the circumference is 1.
    pub fn normalized_slab_width(&self) -> f64 {
        self.slab_width / self.circumference
    }
}

/// Disjoint-set forest over builder vertex ids.
#[derive(Clone, Debug, Default, PartialEq)]
struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    fn push(&mut self) -> usize {
        self.parent.push(self.parent.len());
        self.parent.len() - 1
    }

    fn find(&self, mut v: usize) -> usize {
        while self.parent[v] != v {
            v = self.parent[v];
        }
        v
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            // keep the smaller id as root so compaction order does not depend on call order
            let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
            self.parent[hi] = lo;
        }
    }
}

/// Vertex ids of a rectangular grid of a builder.
#[derive(Clone, Debug, PartialEq)]
pub struct Grid {
    pub nx: usize,
    pub ny: usize,
    ids: Vec<usize>,
    faces: Vec<Option<usize>>,
}

impl Grid {
    /// Vertex at column `i in 0..=nx`, row `j in 0..=ny`.
    pub fn id(&self, i: usize, j: usize) -> usize {
        self.ids[i * (self.ny + 1) + j]
    }

    /// Builder face index of cell `(i, j)`, if the cell was kept.
    pub fn face(&self, i: usize, j: usize) -> Option<usize> {
        self.faces[i * self.ny + j]
    }
}

/// Collects faces, identifications and annotations before compaction.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct MeshBuilder {
    uf: UnionFind,
    faces: Vec<RawFace>,
    tags: Vec<String>,
    boundary: Vec<(String, Vec<usize>)>,
    paths: Vec<(String, Vec<usize>)>,
    cylinders: Vec<RawCylinder>,
}

fn cross(a: [f64; 2], b: [f64; 2]) -> f64 {
    a[0] * b[1] - a[1] * b[0]
}

fn dot(a: [f64; 2], b: [f64; 2]) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

fn sub(a: [f64; 2], b: [f64; 2]) -> [f64; 2] {
    [a[0] - b[0], a[1] - b[1]]
}

/// Weight contributions of a flat face to its edges `v_i -> v_{i+1}`.
fn face_weights(pos: &[[f64; 2]]) -> Result<Vec<f64>> {
    match pos.len() {
        3 => {
            let mut w = Vec::with_capacity(3);
            for i in 0..3 {
                let (p, q, o) = (pos[i], pos[(i + 1) % 3], pos[(i + 2) % 3]);
                let (a, b) = (sub(p, o), sub(q, o));
                let c = cross(a, b);
                if !(c > 0.0) {
                    return Err(Error::InvalidInput("triangle must be positively oriented and nondegenerate".into()));
                }
                w.push(0.5 * dot(a, b) / c);
            }
            Ok(w)
        }
        4 => {
            let e: Vec<[f64; 2]> = (0..4).map(|i| sub(pos[(i + 1) % 4], pos[i])).collect();
            let len: Vec<f64> = e.iter().map(|v| dot(*v, *v).sqrt()).collect();
            for i in 0..4 {
                let j = (i + 1) % 4;
                if !(cross(e[i], e[j]) > 0.0) || dot(e[i], e[j]).abs() > 1e-12 * len[i] * len[j] {
                    return Err(Error::InvalidInput("quadrilateral faces must be positively oriented rectangles".into()));
                }
            }
            Ok((0..4).map(|i| 0.5 * len[(i + 1) % 4] / len[i]).collect())
        }
        n => Err(Error::InvalidInput(format!("faces must have 3 or 4 vertices, got {n}"))),
    }
}

impl MeshBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn vertex(&mut self) -> usize {
        self.uf.push()
    }

    fn tag_index(&mut self, tag: &str) -> usize {
        match self.tags.iter().position(|t| t == tag) {
            Some(i) => i,
            None => {
                self.tags.push(tag.to_string());
                self.tags.len() - 1
            }
        }
    }

    /// Adds a flat face, listed counterclockwise with its local coordinates.
    pub fn face(&mut self, verts: &[usize], pos: &[[f64; 2]], tag: &str) -> Result<usize> {
        if verts.len() != pos.len() {
            return Err(Error::InvalidInput("face needs one position per vertex".into()));
        }
        let contrib = face_weights(pos)?;
        self.face_with_weights(verts, contrib, tag)
    }

    /// Adds a face with explicit per-edge weight contributions.
    pub fn face_with_weights(&mut self, verts: &[usize], contrib: Vec<f64>, tag: &str) -> Result<usize> {
        if verts.len() < 3 || contrib.len() != verts.len() {
            return Err(Error::InvalidInput("face needs at least 3 vertices and one weight per edge".into()));
        }
        if let Some(v) = verts.iter().find(|v| **v >= self.uf.parent.len()) {
            return Err(Error::InvalidInput(format!("face refers to unknown vertex {v}")));
        }
        let tag = self.tag_index(tag);
        self.faces.push(RawFace { verts: verts.to_vec(), contrib, tag });
        Ok(self.faces.len() - 1)
    }

    pub fn identify(&mut self, a: usize, b: usize) {
        self.uf.union(a, b);
    }

    /// Declares a boundary loop, traversed with the surface on its left.
    pub fn boundary_loop(&mut self, name: &str, verts: Vec<usize>) {
        self.boundary.push((name.to_string(), verts));
    }

    /// Declares a named closed vertex path. Consecutive vertices that end up identified
    /// are merged when the mesh is built.
    pub fn path(&mut self, name: &str, verts: Vec<usize>) {
        self.paths.push((name.to_string(), verts));
    }

    pub fn loop_vertices(&self, name: &str) -> Result<&[usize]> {
        self.boundary
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, v)| v.as_slice())
            .ok_or_else(|| Error::InvalidInput(format!("no boundary loop named {name:?}")))
    }

    pub fn path_vertices(&self, name: &str) -> Option<&[usize]> {
        self.paths.iter().find(|(n, _)| n == name).map(|(_, v)| v.as_slice())
    }

    /// Number of builder vertex ids handed out so far.
    pub fn vertex_count(&self) -> usize {
        self.uf.parent.len()
    }

    /// Whether two builder vertices have been identified.
    pub fn same_vertex(&self, a: usize, b: usize) -> bool {
        self.uf.find(a) == self.uf.find(b)
    }

    /// Vertex rings of a cylinder block, in builder ids.
    pub fn cylinder_rings(&self, name: &str) -> Result<&[Vec<usize>]> {
        self.cylinders
            .iter()
            .find(|c| c.name == name)
            .map(|c| c.rings.as_slice())
            .ok_or_else(|| Error::InvalidInput(format!("no cylinder block named {name:?}")))
    }

    pub fn boundary_names(&self) -> Vec<&str> {
        self.boundary.iter().map(|(n, _)| n.as_str()).collect()
    }

    /// Axis-aligned grid of `nx x ny` rectangular cells of size `hx x hy`; cells with
    /// `keep(i, j) == false` are left out.
    pub fn grid(&mut self, nx: usize, ny: usize, hx: f64, hy: f64, tag: &str, keep: impl Fn(usize, usize) -> bool) -> Result<Grid> {
        let ids: Vec<usize> = (0..(nx + 1) * (ny + 1)).map(|_| self.vertex()).collect();
        let mut grid = Grid { nx, ny, ids, faces: vec![None; nx * ny] };
        let pos = [[0.0, 0.0], [hx, 0.0], [hx, hy], [0.0, hy]];
        for i in 0..nx {
            for j in 0..ny {
                if keep(i, j) {
                    let v = [grid.id(i, j), grid.id(i + 1, j), grid.id(i + 1, j + 1), grid.id(i, j + 1)];
                    grid.faces[i * ny + j] = Some(self.face(&v, &pos, tag)?);
                }
            }
        }
        Ok(grid)
    }

    fn cylinder_block(&mut self, raw: RawCylinder) {
        self.cylinders.push(raw);
    }

    /// Prefixes every loop, path and cylinder-block name.
    pub fn prefixed(mut self, prefix: &str) -> Self {
        for (n, _) in self.boundary.iter_mut().chain(self.paths.iter_mut()) {
            *n = format!("{prefix}{n}");
        }
        for c in &mut self.cylinders {
            c.name = format!("{prefix}{}", c.name);
        }
        self
    }

    /// Moves all pieces of `other` into `self`. Names must not collide.
    pub fn append(&mut self, other: MeshBuilder) -> Result<()> {
        for (n, _) in other.boundary.iter().chain(other.paths.iter()) {
            if self.loop_vertices(n).is_ok() || self.path_vertices(n).is_some() {
                return Err(Error::InvalidInput(format!("name {n:?} already used")));
            }
        }
        let off = self.uf.parent.len();
        let face_off = self.faces.len();
        self.uf.parent.extend(other.uf.parent.iter().map(|p| p + off));
        for f in other.faces {
            let tag = self.tag_index(&other.tags[f.tag]);
            self.faces.push(RawFace { verts: f.verts.iter().map(|v| v + off).collect(), contrib: f.contrib, tag });
        }
        let shift = |v: Vec<usize>| v.into_iter().map(|x| x + off).collect::<Vec<_>>();
        for (n, v) in other.boundary {
            self.boundary.push((n, shift(v)));
        }
        for (n, v) in other.paths {
            self.paths.push((n, shift(v)));
        }
        for c in other.cylinders {
            self.cylinders.push(RawCylinder {
                rings: c.rings.into_iter().map(shift).collect(),
                slab_faces: c.slab_faces.into_iter().map(|s| s.into_iter().map(|f| f + face_off).collect()).collect(),
                ..c
            });
        }
        Ok(())
    }

    /// Identifies loop `a` vertex `k` with loop `b` vertex `(twist - k) mod N`, which
    /// glues the two loops with opposite directions, and removes both from the boundary.
    /// Returns the identified pairs.
    pub fn glue(&mut self, a: &str, b: &str, twist: i64) -> Result<Vec<(usize, usize)>> {
        if a == b {
            return Err(Error::GluingMismatch(format!("cannot glue loop {a:?} to itself")));
        }
        let la = self.loop_vertices(a).map_err(|_| Error::GluingMismatch(format!("no boundary loop {a:?}")))?.to_vec();
        let lb = self.loop_vertices(b).map_err(|_| Error::GluingMismatch(format!("no boundary loop {b:?}")))?.to_vec();
        if la.len() != lb.len() {
            return Err(Error::GluingMismatch(format!("loop {a:?} has {} vertices, loop {b:?} has {}", la.len(), lb.len())));
        }
        let n = la.len() as i64;
        let pairs: Vec<(usize, usize)> = (0..n).map(|k| (la[k as usize], lb[(twist - k).rem_euclid(n) as usize])).collect();
        for &(x, y) in &pairs {
            self.identify(x, y);
        }
        self.boundary.retain(|(name, _)| name != a && name != b);
        Ok(pairs)
    }

    /// Compacts vertices, derives edges and weights, and validates orientation.
    pub fn build(&self) -> Result<SurfaceMesh> {
        let mut compact: Vec<Option<usize>> = vec![None; self.uf.parent.len()];
        let mut n_vertices = 0;
        let mut map = |v: usize, compact: &mut Vec<Option<usize>>| -> usize {
            let r = self.uf.find(v);
            *compact[r].get_or_insert_with(|| {
                n_vertices += 1;
                n_vertices - 1
            })
        };
        let mut faces = Vec::with_capacity(self.faces.len());
        for f in &self.faces {
            let verts: Vec<usize> = f.verts.iter().map(|&v| map(v, &mut compact)).collect();
            faces.push(verts);
        }
        let resolve = |v: usize| compact[self.uf.find(v)];
        let mut edge_index: BTreeMap<(usize, usize), usize> = BTreeMap::new();
        let mut edges: Vec<[usize; 2]> = Vec::new();
        let mut weights: Vec<f64> = Vec::new();
        let mut uses: Vec<[u8; 2]> = Vec::new();
        let mut out_faces = Vec::with_capacity(faces.len());
        for (fi, verts) in faces.into_iter().enumerate() {
            let m = verts.len();
            let mut fe = Vec::with_capacity(m);
            let mut fs = Vec::with_capacity(m);
            for i in 0..m {
                let (u, v) = (verts[i], verts[(i + 1) % m]);
                if u == v || verts[..i].contains(&u) {
                    return Err(Error::GluingMismatch(format!("face {fi} collapses after identification")));
                }
                let key = (u.min(v), u.max(v));
                let e = *edge_index.entry(key).or_insert_with(|| {
                    edges.push([u, v]);
                    weights.push(0.0);
                    uses.push([0, 0]);
                    edges.len() - 1
                });
                let sign = if edges[e][0] == u { 1 } else { -1 };
                uses[e][if sign > 0 { 0 } else { 1 }] += 1;
                weights[e] += self.faces[fi].contrib[i];
                fe.push(e);
                fs.push(sign);
            }
            out_faces.push(Face { verts, edges: fe, signs: fs, contrib: self.faces[fi].contrib.clone(), tag: self.faces[fi].tag });
        }
        for (e, u) in uses.iter().enumerate() {
            if u[0] > 1 || u[1] > 1 {
                return Err(Error::GluingMismatch(format!(
                    "edge {:?} is traversed twice in the same direction (incoherent orientation or non-manifold gluing)",
                    edges[e]
                )));
            }
        }
        if let Some(e) = weights.iter().position(|w| !(*w > 0.0)) {
            return Err(Error::InvalidInput(format!("edge {:?} has nonpositive weight {}", edges[e], weights[e])));
        }
        let n_boundary_edges = uses.iter().filter(|u| u[0] + u[1] == 1).count();
        let mut mesh = SurfaceMesh {
            n_vertices,
            edges,
            weights,
            faces: out_faces,
            tags: self.tags.clone(),
            edge_index,
            boundary: Vec::new(),
            paths: Vec::new(),
            cylinders: Vec::new(),
        };
        let mut covered = 0;
        for (name, verts) in &self.boundary {
            let verts = verts
                .iter()
                .map(|&v| resolve(v).ok_or_else(|| Error::InvalidInput(format!("loop {name:?} leaves the mesh"))))
                .collect::<Result<Vec<_>>>()?;
            let chain = mesh.chain_of_loop(&verts)?;
            for (e, c) in chain.iter().enumerate() {
                if *c != 0 {
                    let used = uses[e];
                    let ok = used[0] + used[1] == 1 && ((*c > 0) == (used[0] == 1));
                    if !ok {
                        return Err(Error::GluingMismatch(format!(
                            "loop {name:?} does not run along the boundary with the surface on its left"
                        )));
                    }
                }
            }
            covered += verts.len();
            mesh.boundary.push(NamedLoop { name: name.clone(), vertices: verts });
        }
        if covered != n_boundary_edges {
            return Err(Error::InvalidInput(format!("declared boundary loops cover {covered} of {n_boundary_edges} boundary edges")));
        }
        for (name, verts) in &self.paths {
            let mut verts = verts
                .iter()
                .map(|&v| resolve(v).ok_or_else(|| Error::InvalidInput(format!("path {name:?} leaves the mesh"))))
                .collect::<Result<Vec<_>>>()?;
            verts.dedup();
            while verts.len() > 1 && verts.first() == verts.last() {
                verts.pop();
            }
            mesh.chain_of_loop(&verts)?;
            mesh.paths.push(NamedLoop { name: name.clone(), vertices: verts });
        }
        for c in &self.cylinders {
            let rings = c
                .rings
                .iter()
                .map(|r| {
                    r.iter()
                        .map(|&v| resolve(v).ok_or_else(|| Error::InvalidInput(format!("cylinder {:?} leaves the mesh", c.name))))
                        .collect::<Result<Vec<_>>>()
                })
                .collect::<Result<Vec<_>>>()?;
            mesh.cylinders.push(CylinderBlock {
                name: c.name.clone(),
                circumference: c.circumference,
                slab_width: c.slab_width,
                rings,
                slab_faces: c.slab_faces.clone(),
            });
        }
        Ok(mesh)
    }
}

/// One face of a built mesh.
#[derive(Clone, Debug, PartialEq)]
pub struct Face {
    pub verts: Vec<usize>,
    /// Edge `i` joins `verts[i]` to `verts[i+1]`.
    pub edges: Vec<usize>,
    /// `+1` when the face traverses edge `i` along its orientation.
    pub signs: Vec<i8>,
    /// Weight this face contributes to edge `i`.
    pub contrib: Vec<f64>,
    pub tag: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct NamedLoop {
    pub name: String,
    pub vertices: Vec<usize>,
}

/// Oriented surface mesh with positive edge weights and tagged faces.
#[derive(Clone, Debug, PartialEq)]
pub struct SurfaceMesh {
    n_vertices: usize,
    edges: Vec<[usize; 2]>,
    weights: Vec<f64>,
    faces: Vec<Face>,
    tags: Vec<String>,
    edge_index: BTreeMap<(usize, usize), usize>,
    boundary: Vec<NamedLoop>,
    paths: Vec<NamedLoop>,
    cylinders: Vec<CylinderBlock>,
}

impl SurfaceMesh {
    pub fn n_vertices(&self) -> usize {
        self.n_vertices
    }

    pub fn n_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn n_faces(&self) -> usize {
        self.faces.len()
    }

    pub fn euler_characteristic(&self) -> i64 {
        self.n_vertices as i64 - self.edges.len() as i64 + self.faces.len() as i64
    }

    /// Genus of the surface, counting each boundary loop as a removed disk.
    pub fn genus(&self) -> i64 {
        (2 - self.euler_characteristic() - self.boundary.len() as i64) / 2
    }

    pub fn is_closed(&self) -> bool {
        self.boundary.is_empty()
    }

    pub fn edges(&self) -> &[[usize; 2]] {
        &self.edges
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn faces(&self) -> &[Face] {
        &self.faces
    }

    pub fn tags(&self) -> &[String] {
        &self.tags
    }

    pub fn tag_id(&self, tag: &str) -> Result<usize> {
        self.tags.iter().position(|t| t == tag).ok_or_else(|| Error::UnknownTag(tag.to_string()))
    }

    pub fn boundary_loops(&self) -> &[NamedLoop] {
        &self.boundary
    }

    pub fn paths(&self) -> &[NamedLoop] {
        &self.paths
    }

    pub fn path(&self, name: &str) -> Result<&NamedLoop> {
        self.paths.iter().find(|p| p.name == name).ok_or_else(|| Error::InvalidInput(format!("no path named {name:?}")))
    }

    pub fn cylinders(&self) -> &[CylinderBlock] {
        &self.cylinders
    }

    pub fn cylinder(&self, name: &str) -> Result<&CylinderBlock> {
        self.cylinders.iter().find(|c| c.name == name).ok_or_else(|| Error::InvalidInput(format!("no cylinder block named {name:?}")))
    }

    /// Index and sign of the edge joining `u` to `v`.
    pub fn edge_between(&self, u: usize, v: usize) -> Option<(usize, i64)> {
        let e = *self.edge_index.get(&(u.min(v), u.max(v)))?;
        Some((e, if self.edges[e][0] == u { 1 } else { -1 }))
    }

    /// Chain of the closed vertex path `v0 -> v1 -> ... -> v0`.
    pub fn chain_of_loop(&self, verts: &[usize]) -> Result<Chain> {
        if verts.len() < 2 {
            return Err(Error::InvalidInput("a loop needs at least two vertices".into()));
        }
        let mut chain = vec![0; self.edges.len()];
        for i in 0..verts.len() {
            let (u, v) = (verts[i], verts[(i + 1) % verts.len()]);
            let (e, s) =
                self.edge_between(u, v).ok_or_else(|| Error::InvalidInput(format!("vertices {u} and {v} are not joined by an edge")))?;
            chain[e] += s;
        }
        Ok(chain)
    }

    /// Chain of a named path.
    pub fn path_chain(&self, name: &str) -> Result<Chain> {
        self.chain_of_loop(&self.path(name)?.vertices)
    }

    /// Vertex boundary of a chain; zero for cycles.
    pub fn chain_boundary(&self, chain: &[i64]) -> Vec<i64> {
        let mut b = vec![0; self.n_vertices];
        for (e, &c) in chain.iter().enumerate() {
            b[self.edges[e][1]] += c;
            b[self.edges[e][0]] -= c;
        }
        b
    }

    /// Sum of face weight contributions per edge, restricted to faces with the given tags.
    pub fn tagged_weights(&self, tags: &[usize]) -> Vec<f64> {
        let mut w = vec![0.0; self.edges.len()];
        for f in self.faces.iter().filter(|f| tags.contains(&f.tag)) {
            for (e, c) in f.edges.iter().zip(&f.contrib) {
                w[*e] += c;
            }
        }
        w
    }

    /// Line-oriented text form; see [`SurfaceMesh::from_text`].
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "cylgraft-mesh 1");
        let _ = writeln!(s, "vertices {}", self.n_vertices);
        let _ = writeln!(s, "tags {}", self.tags.len());
        for t in &self.tags {
            let _ = writeln!(s, "{t}");
        }
        let _ = writeln!(s, "edges {}", self.edges.len());
        for (e, w) in self.edges.iter().zip(&self.weights) {
            let _ = writeln!(s, "{} {} {:.16e}", e[0], e[1], w);
        }
        let _ = writeln!(s, "faces {}", self.faces.len());
        for f in &self.faces {
            let _ = write!(s, "{} {}", f.tag, f.verts.len());
            for v in &f.verts {
                let _ = write!(s, " {v}");
            }
            for c in &f.contrib {
                let _ = write!(s, " {c:.16e}");
            }
            s.push('\n');
        }
        for (kind, loops) in [("boundary", &self.boundary), ("paths", &self.paths)] {
            let _ = writeln!(s, "{kind} {}", loops.len());
            for l in loops {
                let _ = write!(s, "{} {}", l.name, l.vertices.len());
                for v in &l.vertices {
                    let _ = write!(s, " {v}");
                }
                s.push('\n');
            }
        }
        let _ = writeln!(s, "cylinders {}", self.cylinders.len());
        for c in &self.cylinders {
            let _ = writeln!(
                s,
                "{} {:.16e} {:.16e} {} {}",
                c.name,
                c.circumference,
                c.slab_width,
                c.rings.len(),
                c.rings.first().map_or(0, Vec::len)
            );
            for r in &c.rings {
                let line: Vec<String> = r.iter().map(usize::to_string).collect();
                let _ = writeln!(s, "{}", line.join(" "));
            }
            for f in &c.slab_faces {
                let line: Vec<String> = f.iter().map(usize::to_string).collect();
                let _ = writeln!(s, "{} {}", f.len(), line.join(" "));
            }
        }
        s
    }

    /// Parses the text form written by [`SurfaceMesh::to_text`]. Listed edge weights
    /// must agree with the sums of the face contributions.
    pub fn from_text(text: &str) -> Result<SurfaceMesh> {
        let mut lines = text.lines().map(str::trim).filter(|l| !l.is_empty() && !l.starts_with('#'));
        let mut next = |what: &str| lines.next().ok_or_else(|| Error::Parse(format!("unexpected end of input, expected {what}")));
        fn header(line: &str, key: &str) -> Result<usize> {
            let mut it = line.split_whitespace();
            if it.next() != Some(key) {
                return Err(Error::Parse(format!("expected section {key:?}, got {line:?}")));
            }
            num(it.next(), key)
        }
        fn num<T: std::str::FromStr>(tok: Option<&str>, what: &str) -> Result<T> {
            tok.ok_or_else(|| Error::Parse(format!("missing {what}")))?.parse().map_err(|_| Error::Parse(format!("bad number for {what}")))
        }
        if next("magic")? != "cylgraft-mesh 1" {
            return Err(Error::Parse("missing 'cylgraft-mesh 1' header".into()));
        }
        let nv = header(next("vertices")?, "vertices")?;
        let nt = header(next("tags")?, "tags")?;
        let mut tags = Vec::with_capacity(nt);
        for _ in 0..nt {
            tags.push(next("tag name")?.to_string());
        }
        let ne = header(next("edges")?, "edges")?;
        let mut listed = Vec::with_capacity(ne);
        for _ in 0..ne {
            let mut it = next("edge")?.split_whitespace();
            let (a, b, w): (usize, usize, f64) =
                (num(it.next(), "edge tail")?, num(it.next(), "edge head")?, num(it.next(), "edge weight")?);
            listed.push(([a, b], w));
        }
        let nf = header(next("faces")?, "faces")?;
        let mut b = MeshBuilder::new();
        for _ in 0..nv {
            b.vertex();
        }
        for _ in 0..nf {
            let mut it = next("face")?.split_whitespace();
            let tag: usize = num(it.next(), "face tag")?;
            let m: usize = num(it.next(), "face size")?;
            let verts = (0..m).map(|_| num(it.next(), "face vertex")).collect::<Result<Vec<usize>>>()?;
            let contrib = (0..m).map(|_| num(it.next(), "face weight")).collect::<Result<Vec<f64>>>()?;
            let name = tags.get(tag).ok_or_else(|| Error::Parse(format!("face tag {tag} out of range")))?.clone();
            b.face_with_weights(&verts, contrib, &name).map_err(|e| Error::Parse(e.to_string()))?;
        }
        for kind in ["boundary", "paths"] {
            let n = header(next(kind)?, kind)?;
            for _ in 0..n {
                let mut it = next("loop")?.split_whitespace();
                let name = it.next().ok_or_else(|| Error::Parse("missing loop name".into()))?.to_string();
                let m: usize = num(it.next(), "loop size")?;
                let verts = (0..m).map(|_| num(it.next(), "loop vertex")).collect::<Result<Vec<usize>>>()?;
                if kind == "boundary" {
                    b.boundary_loop(&name, verts);
                } else {
                    b.path(&name, verts);
                }
            }
        }
        let nc = header(next("cylinders")?, "cylinders")?;
        for _ in 0..nc {
            let mut it = next("cylinder")?.split_whitespace();
            let name = it.next().ok_or_else(|| Error::Parse("missing cylinder name".into()))?.to_string();
            let circumference: f64 = num(it.next(), "circumference")?;
            let slab_width: f64 = num(it.next(), "slab width")?;
            let nr: usize = num(it.next(), "ring count")?;
            let rl: usize = num(it.next(), "ring length")?;
            let mut rings = Vec::with_capacity(nr);
            for _ in 0..nr {
                let mut it = next("ring")?.split_whitespace();
                rings.push((0..rl).map(|_| num(it.next(), "ring vertex")).collect::<Result<Vec<usize>>>()?);
            }
            let mut slab_faces = Vec::new();
            for _ in 0..nr.saturating_sub(1) {
                let mut it = next("slab")?.split_whitespace();
                let m: usize = num(it.next(), "slab size")?;
                slab_faces.push((0..m).map(|_| num(it.next(), "slab face")).collect::<Result<Vec<usize>>>()?);
            }
            b.cylinder_block(RawCylinder { name, circumference, slab_width, rings, slab_faces });
        }
        let mesh = b.build().map_err(|e| Error::Parse(e.to_string()))?;
        if mesh.n_vertices != nv || mesh.edges.len() != ne {
            return Err(Error::Parse("vertex or edge count disagrees with the faces".into()));
        }
        for ((e, w), (le, lw)) in mesh.edges.iter().zip(&mesh.weights).zip(&listed) {
            if e != le || (w - lw).abs() > 1e-12 * w.abs().max(1.0) {
                return Err(Error::Parse(format!("edge {le:?} disagrees with the face data")));
            }
        }
        Ok(mesh)
    }
}

/// Builder for `[0, length] x (R / circumference Z)` split into `along x around`
/// rectangles. Loops `left` (at `x = 0`) and `right` (at `x = length`) have `around`
/// vertices each, vertex `k` of `right` and vertex `-k mod around` of `left` both lying
/// at height `k`. The path `core` is the middle ring (or the ring just left of it).
pub fn cylinder_builder(circumference: f64, length: f64, around: usize, along: usize, tag: &str) -> Result<MeshBuilder> {
    if !(circumference > 0.0 && length > 0.0) || !circumference.is_finite() || !length.is_finite() {
        return Err(Error::InvalidInput(format!("cylinder needs positive finite size, got {circumference} x {length}")));
    }
    if around < 3 || along < 1 {
        return Err(Error::ResolutionError(format!("cylinder needs at least 3 x 1 cells, got {around} x {along}")));
    }
    let mut b = MeshBuilder::new();
    let hx = length / along as f64;
    let hy = circumference / around as f64;
    let g = b.grid(along, around, hx, hy, tag, |_, _| true)?;
    for i in 0..=along {
        b.identify(g.id(i, around), g.id(i, 0));
    }
    let ring = |i: usize| (0..around).map(|j| g.id(i, j)).collect::<Vec<_>>();
    let left: Vec<usize> = (0..around).map(|k| g.id(0, (around - k) % around)).collect();
    b.boundary_loop("left", left);
    b.boundary_loop("right", ring(along));
    b.path("core", ring(along / 2));
    let rings = (0..=along).map(ring).collect();
    let slab_faces = (0..along).map(|i| (0..around).map(|j| g.face(i, j).expect("full grid")).collect()).collect();
    b.cylinder_block(RawCylinder { name: tag.to_string(), circumference, slab_width: hx, rings, slab_faces });
    Ok(b)
}

/// Flat cylinder `[0, modulus] x S^1` with unit circumference, tagged `cylinder`.
pub fn build_flat_cylinder(modulus: f64, circumference_divisions: usize, length_divisions: usize) -> Result<SurfaceMesh> {
    if circumference_divisions < 8 || length_divisions < 4 {
        return Err(Error::ResolutionError(format!(
            "need at least 8 circumference and 4 length divisions, got {circumference_divisions} and {length_divisions}"
        )));
    }
    if !(modulus > 0.0) {
        return Err(Error::InvalidInput(format!("modulus must be positive, got {modulus}")));
    }
    cylinder_builder(1.0, modulus, circumference_divisions, length_divisions, "cylinder")?.build()
}

/// Torus `[0, a] x [0, 1]` with `nx x ny` cells. Paths `x-loop` (along `y = 0`) and
/// `y-loop` (along `x = 0`) meet once, with intersection number `+1`.
pub fn rectangle_torus(a: f64, nx: usize, ny: usize) -> Result<SurfaceMesh> {
    if nx < 3 || ny < 3 {
        return Err(Error::ResolutionError(format!("torus needs at least 3 x 3 cells, got {nx} x {ny}")));
    }
    let mut b = cylinder_builder(1.0, a, ny, nx, "torus")?;
    let left_zero = b.loop_vertices("left")?[0];
    let pairs = b.glue("left", "right", 0)?;
    debug_assert_eq!(pairs[0].0, left_zero);
    let rows = b.cylinders[0].rings.clone();
    b.path("x-loop", (0..nx).map(|i| rows[i][0]).collect());
    b.path("y-loop", rows[0].clone());
    b.build()
}

/// A `cells x cells` square torus of unit cells, `n` grid steps per unit, with the unit
/// cells in `holes` removed.
#[derive(Clone, Debug)]
pub struct HoledTorus {
    pub builder: MeshBuilder,
    pub grid: Grid,
    pub n: usize,
    pub cells: usize,
}

impl HoledTorus {
    /// Vertex at grid point `(i, j)`, taken modulo the torus period.
    pub fn at(&self, i: usize, j: usize) -> usize {
        let p = self.n * self.cells;
        self.grid.id(i % p, j % p)
    }

    /// Vertex path along grid lines through the lattice points `corners` (in grid
    /// units), each leg horizontal or vertical and taken in the positive or negative
    /// direction as written. The last corner is not repeated.
    pub fn lattice_path(&self, corners: &[(i64, i64)]) -> Result<Vec<usize>> {
        let p = (self.n * self.cells) as i64;
        let mut out = Vec::new();
        for w in corners.windows(2) {
            let ((x0, y0), (x1, y1)) = (w[0], w[1]);
            if x0 != x1 && y0 != y1 {
                return Err(Error::InvalidInput("lattice legs must be axis-aligned".into()));
            }
            let steps = (x1 - x0).abs().max((y1 - y0).abs());
            let (dx, dy) = ((x1 - x0).signum(), (y1 - y0).signum());
            for s in 0..steps {
                let (x, y) = ((x0 + dx * s).rem_euclid(p), (y0 + dy * s).rem_euclid(p));
                out.push(self.at(x as usize, y as usize));
            }
        }
        Ok(out)
    }
}

/// Square torus of `cells x cells` unit cells with the listed unit cells removed. Hole
/// `k` gets the boundary loop `hole{k}` of `4n` vertices, starting at the hole's lower
/// left corner and running clockwise so that the surface lies on its left.
pub fn holed_torus(n: usize, cells: usize, holes: &[(usize, usize)], tag: &str) -> Result<HoledTorus> {
    if n < 1 || cells < 2 {
        return Err(Error::ResolutionError(format!("holed torus needs n >= 1 and at least 2 cells, got {n}, {cells}")));
    }
    for (a, b) in holes.iter().enumerate().flat_map(|(i, h)| holes[i + 1..].iter().map(move |g| (h, g))) {
        let (dx, dy) = ((a.0 as i64 - b.0 as i64).abs(), (a.1 as i64 - b.1 as i64).abs());
        let (dx, dy) = (dx.min(cells as i64 - dx), dy.min(cells as i64 - dy));
        if dx <= 1 && dy <= 1 {
            return Err(Error::InvalidInput("holes must not touch".into()));
        }
    }
    let p = n * cells;
    let mut b = MeshBuilder::new();
    let h = 1.0 / n as f64;
    let hole_set: Vec<(usize, usize)> = holes.to_vec();
    let grid = b.grid(p, p, h, h, tag, |i, j| !hole_set.contains(&(i / n, j / n)))?;
    for k in 0..=p {
        b.identify(grid.id(p, k), grid.id(0, k));
        b.identify(grid.id(k, p), grid.id(k, 0));
    }
    let mut t = HoledTorus { builder: b, grid, n, cells };
    for (k, &(ci, cj)) in holes.iter().enumerate() {
        let (x0, y0) = ((ci * n) as i64, (cj * n) as i64);
        let s = n as i64;
        let verts = t.lattice_path(&[(x0, y0), (x0, y0 + s), (x0 + s, y0 + s), (x0 + s, y0), (x0, y0)])?;
        t.builder.boundary_loop(&format!("hole{k}"), verts);
    }
    Ok(t)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rectangle_weights() {
        let w = face_weights(&[[0.0, 0.0], [2.0, 0.0], [2.0, 1.0], [0.0, 1.0]]).unwrap();
        assert_eq!(w, vec![0.25, 1.0, 0.25, 1.0]);
    }

    #[test]
    fn right_triangle_has_zero_hypotenuse_weight() {
        let w = face_weights(&[[0.0, 0.0], [1.0, 0.0], [1.0, 1.0]]).unwrap();
        assert!(w[2].abs() < 1e-16);
    }

    #[test]
    fn clockwise_face_rejected() {
        assert!(face_weights(&[[0.0, 0.0], [0.0, 1.0], [1.0, 1.0], [1.0, 0.0]]).is_err());
    }
}
