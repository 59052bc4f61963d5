//! Grafting families: a fixed main part with a flat cylinder of modulus `L` inserted.
//!
//! All pieces are unions of unit squares subdivided into `n x n` grid cells, with
//! cylinder circumference 4. Moduli are measured in units of the circumference, so a
//! cylinder of modulus `L` has length `4L`.

use crate::cochain::Cochain1;
use crate::error::{Error, Result};
use crate::harmonic::{
    dirichlet_capacity, essential_energy, harmonic_dual_basis, harmonicity_residual, region_energy, slab_profile, wedge_matrix,
    HarmonicBasis, SlabEnergy,
};
use crate::homology::{homology_basis, intersection_numbers, HomologyBasis, IntMatrix, Pins};
use crate::hyperbolic::core_dual_energy_bound;
use crate::mesh::{cylinder_builder, holed_torus, Chain, CylinderBlock, MeshBuilder, SurfaceMesh};
use crate::solver::SolverOptions;
use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::f64::consts::PI;

/// Circumference of every glued cylinder.
pub const CIRCUMFERENCE: f64 = 4.0;
/// Length of the collar rings between the handle torus and the inserted cylinder.
pub const RING_LENGTH: f64 = 2.0;
/// The constant `2 + 2/π²` of the capacity sandwich.
pub const ZETA: f64 = 2.0 + 2.0 / (PI * PI);

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FamilyMode {
    Nonseparating,
    Separating,
}

impl FamilyMode {
    pub fn name(self) -> &'static str {
        match self {
            FamilyMode::Nonseparating => "nonseparating",
            FamilyMode::Separating => "separating",
        }
    }
}

/// The fixed part of the family.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum MainPart {
    /// A square torus of 4 x 4 unit cells with the cells (0, 0) and (2, 2) removed; each
    /// hole is followed by a collar ring of length 2. Closing up with the cylinder gives
    /// genus 2.
    SlabWithHandle,
    /// Two square tori of 4 x 4 unit cells with cell (0, 0) removed from each, joined
    /// by the cylinder. The core curve separates.
    TwoTori,
    /// A flat cylinder of modulus `gamma`; the family consists of flat tori.
    PureCylinder { gamma: f64 },
}

impl MainPart {
    pub fn mode(self) -> FamilyMode {
        match self {
            MainPart::TwoTori => FamilyMode::Separating,
            _ => FamilyMode::Nonseparating,
        }
    }

    pub fn genus(self) -> usize {
        match self {
            MainPart::PureCylinder { .. } => 1,
            _ => 2,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FamilyConfig {
    pub main_part: MainPart,
    pub mode: FamilyMode,
    /// Inserted moduli, strictly increasing.
    pub l_values: Vec<f64>,
    /// Grid steps per unit length (the circumference is 4 units).
    pub steps_per_unit: usize,
    /// Rotation, in vertices, of the gluing at the far end of the inserted cylinder.
    pub twist_offset: i64,
}

impl FamilyConfig {
    pub fn validate(&self) -> Result<()> {
        if self.main_part.mode() != self.mode {
            return Err(Error::ModeMismatch { expected: self.main_part.mode().name() });
        }
        if self.l_values.is_empty() {
            return Err(Error::InvalidInput("family needs at least one modulus".into()));
        }
        if self.l_values.iter().any(|l| !(*l > 0.0) || !l.is_finite()) {
            return Err(Error::InvalidInput("moduli must be positive and finite".into()));
        }
        if self.l_values.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::InvalidInput("moduli must be strictly increasing".into()));
        }
        if self.steps_per_unit < 2 || !self.steps_per_unit.is_multiple_of(2) {
            return Err(Error::ResolutionError(format!("steps per unit must be even and at least 2, got {}", self.steps_per_unit)));
        }
        if let MainPart::PureCylinder { gamma } = self.main_part {
            if !(gamma > 0.0) {
                return Err(Error::InvalidInput(format!("main cylinder modulus must be positive, got {gamma}")));
            }
            divisions(gamma, self.steps_per_unit)?;
        }
        for l in &self.l_values {
            let half = if self.mode == FamilyMode::Separating { 0.5 * l } else { *l };
            divisions(half, self.steps_per_unit)?;
            if self.main_part != MainPart::TwoTori {
                divisions(0.5 * l, self.steps_per_unit)?;
            }
        }
        Ok(())
    }

    /// Same family at `k` times the resolution.
    pub fn refined(&self, k: usize) -> FamilyConfig {
        FamilyConfig { steps_per_unit: self.steps_per_unit * k, ..self.clone() }
    }
}

/// Number of grid steps along a cylinder of the given modulus.
pub fn divisions(modulus: f64, steps_per_unit: usize) -> Result<usize> {
    let x = modulus * CIRCUMFERENCE * steps_per_unit as f64;
    let r = x.round();
    if r < 1.0 || (x - r).abs() > 1e-9 * x.max(1.0) {
        return Err(Error::ResolutionError(format!(
            "modulus {modulus} is not a whole number of grid steps at {steps_per_unit} steps per unit"
        )));
    }
    Ok(r as usize)
}

/// One closed surface of the family with its pinned cycles.
#[derive(Clone, Debug)]
pub struct FamilyMember {
    pub l: f64,
    pub mesh: SurfaceMesh,
    /// Oriented cycles `α₁, …, α_{2g}` fixed by the construction.
    pub cycles: Vec<Chain>,
    /// Names of the cylinder blocks that make up the inserted cylinder.
    pub inserted: Vec<String>,
    /// `S×_L`: the main part with two half-cylinders of modulus `L/2` attached.
    pub cut: Option<SurfaceMesh>,
}

impl FamilyMember {
    pub fn inserted_blocks(&self) -> Result<Vec<&CylinderBlock>> {
        self.inserted.iter().map(|n| self.mesh.cylinder(n)).collect()
    }

    pub fn pins(&self) -> Pins {
        let mut pins = Pins::none();
        for k in 0..self.cycles.len() / 2 {
            pins = pins.pair(k, Some(self.cycles[2 * k].clone()), Some(self.cycles[2 * k + 1].clone()));
        }
        pins
    }
}

#[derive(Clone, Debug)]
pub struct Family {
    pub config: FamilyConfig,
    /// The main part with its two boundary loops, when the mode has one.
    pub main_part: Option<SurfaceMesh>,
    pub members: Vec<FamilyMember>,
}

/// Builder pieces of a main part with two boundary loops to be capped by cylinders.
struct MainPieces {
    builder: MeshBuilder,
    /// Loops to which the inserted cylinder attaches, in order.
    ends: [String; 2],
    /// Named paths of the handle pairs `(α₃, α₄), …` inside the main part.
    genus_paths: Vec<(String, String)>,
    /// Corner `(1, 1)` of hole 0, where `α₁` starts.
    corner0: usize,
    /// Boundary of hole 1, starting at its corner `(2, 2)`.
    hole1: Vec<usize>,
    /// Grid path from `(2, 2)` to just before `(1, 1)`.
    back: Vec<usize>,
}

fn position_of(b: &MeshBuilder, list: &[usize], v: usize) -> Result<usize> {
    list.iter().position(|&u| b.same_vertex(u, v)).ok_or_else(|| Error::GluingMismatch("transverse path lost its row at a gluing".into()))
}

fn slab_with_handle(n: usize) -> Result<MainPieces> {
    let mut t = holed_torus(n, 4, &[(0, 0), (2, 2)], "main")?;
    let k = n as i64;
    let y = 3 * k + k / 2;
    let x_loop = t.lattice_path(&[(0, y), (4 * k, y)])?;
    let y_loop = t.lattice_path(&[(y, 0), (y, 4 * k)])?;
    t.builder.path("x-loop", x_loop);
    t.builder.path("y-loop", y_loop);
    let corner0 = t.at(n, n);
    let back = t.lattice_path(&[(2 * k, 2 * k), (k, 2 * k), (k, k)])?;
    let hole1 = t.builder.loop_vertices("hole1")?.to_vec();
    let mut b = t.builder;
    for name in ["r1-", "r2-"] {
        b.append(
            cylinder_builder(CIRCUMFERENCE, RING_LENGTH, 4 * n, divisions(RING_LENGTH / CIRCUMFERENCE, n)?, "collar-ring")?.prefixed(name),
        )?;
    }
    b.glue("hole0", "r1-left", 0)?;
    b.glue("hole1", "r2-left", 0)?;
    Ok(MainPieces {
        builder: b,
        ends: ["r1-right".into(), "r2-right".into()],
        genus_paths: vec![("x-loop".into(), "y-loop".into())],
        corner0,
        hole1,
        back,
    })
}

fn attach_cylinder(b: &mut MeshBuilder, name: &str, modulus: f64, n: usize, tag: &str) -> Result<String> {
    b.append(cylinder_builder(CIRCUMFERENCE, CIRCUMFERENCE * modulus, 4 * n, divisions(modulus, n)?, tag)?.prefixed(name))?;
    Ok(format!("{name}{tag}"))
}

/// Row walk `rings[from..=to][j]` (either direction).
fn row(rings: &[Vec<usize>], j: usize, reverse: bool) -> Vec<usize> {
    let mut v: Vec<usize> = rings.iter().map(|r| r[j]).collect();
    if reverse {
        v.reverse();
    }
    v
}

/// `α₁` for the handle model: from hole 0's corner (1, 1) across ring 1, the cylinder and
/// ring 2, around hole 1 to its corner (2, 2), and back along grid lines.
fn handle_transversal(b: &MeshBuilder, pieces: &MainPieces, cyl: &str) -> Result<Vec<usize>> {
    let r1 = b.cylinder_rings("r1-collar-ring")?.to_vec();
    let r2 = b.cylinder_rings("r2-collar-ring")?.to_vec();
    let c = b.cylinder_rings(cyl)?.to_vec();
    let j1 = position_of(b, &r1[0], pieces.corner0)?;
    let jc = position_of(b, &c[0], r1[r1.len() - 1][j1])?;
    let j2 = position_of(b, r2.last().expect("ring"), c.last().expect("ring")[jc])?;
    let mut path = row(&r1, j1, false);
    path.extend(row(&c, jc, false));
    path.extend(row(&r2, j2, true));
    let hole = &pieces.hole1;
    let m = hole.len();
    let h = position_of(b, hole, r2[0][j2])?;
    // shorter way round the hole to its corner at index 0
    if h <= m - h {
        path.extend((0..=h).rev().map(|i| hole[i]));
    } else {
        path.extend((h..m).map(|i| hole[i]));
        path.push(hole[0]);
    }
    path.extend(pieces.back.iter().copied());
    Ok(path)
}

/// Flips cycles so that each pair meets with intersection number `+1`.
fn orient_pairs(mesh: &SurfaceMesh, cycles: &mut [Chain]) -> Result<()> {
    let q = intersection_numbers(mesh, cycles)?;
    for k in 0..cycles.len() / 2 {
        match q[2 * k][2 * k + 1] {
            1 => {}
            -1 => cycles[2 * k].iter_mut().for_each(|x| *x = -*x),
            v => return Err(Error::InvalidInput(format!("pinned pair {k} meets with intersection number {v}"))),
        }
    }
    Ok(())
}

fn build_handle_member(cfg: &FamilyConfig, l: f64) -> Result<(FamilyMember, SurfaceMesh)> {
    let n = cfg.steps_per_unit;
    let pieces = slab_with_handle(n)?;
    let main = pieces.builder.build()?;
    let mut b = pieces.builder.clone();
    let cyl = attach_cylinder(&mut b, "c-", l, n, "cylinder")?;
    b.glue(&pieces.ends[0], "c-left", 0)?;
    b.glue("c-right", &pieces.ends[1], cfg.twist_offset)?;
    let alpha1 = handle_transversal(&b, &pieces, &cyl)?;
    b.path("alpha1", alpha1);
    let mesh = b.build()?;
    let mut cycles = vec![mesh.path_chain("alpha1")?, mesh.path_chain("c-core")?];
    for (x, y) in &pieces.genus_paths {
        cycles.push(mesh.path_chain(x)?);
        cycles.push(mesh.path_chain(y)?);
    }
    orient_pairs(&mesh, &mut cycles)?;
    let cut = cut_surface(pieces.builder, &pieces.ends, l, n)?;
    Ok((FamilyMember { l, mesh, cycles, inserted: vec![cyl], cut: Some(cut) }, main))
}

fn cut_surface(mut b: MeshBuilder, ends: &[String; 2], l: f64, n: usize) -> Result<SurfaceMesh> {
    attach_cylinder(&mut b, "h1-", 0.5 * l, n, "cylinder")?;
    attach_cylinder(&mut b, "h2-", 0.5 * l, n, "cylinder")?;
    b.glue(&ends[0], "h1-left", 0)?;
    b.glue(&ends[1], "h2-left", 0)?;
    b.build()
}

fn build_pure_member(cfg: &FamilyConfig, gamma: f64, l: f64) -> Result<(FamilyMember, SurfaceMesh)> {
    let n = cfg.steps_per_unit;
    let base = cylinder_builder(CIRCUMFERENCE, CIRCUMFERENCE * gamma, 4 * n, divisions(gamma, n)?, "main")?.prefixed("m-");
    let main = base.build()?;
    let mut b = base.clone();
    let cyl = attach_cylinder(&mut b, "c-", l, n, "cylinder")?;
    b.glue("m-right", "c-left", 0)?;
    b.glue("c-right", "m-left", cfg.twist_offset)?;
    let m = b.cylinder_rings("m-main")?.to_vec();
    let c = b.cylinder_rings(&cyl)?.to_vec();
    let jc = position_of(&b, &c[0], m.last().expect("ring")[0])?;
    let mut path = row(&m, 0, false);
    path.extend(row(&c, jc, false));
    // the far end lands on ring 0 of the main part at some row; return along that ring
    let end = c[c.len() - 1][jc];
    let j_end = position_of(&b, &m[0], end)?;
    let around = m[0].len();
    let steps = if j_end <= around - j_end { (0..=j_end).rev().collect::<Vec<_>>() } else { (j_end..around).chain([0]).collect() };
    path.extend(steps.into_iter().map(|j| m[0][j]));
    b.path("alpha1", path);
    let mesh = b.build()?;
    let mut cycles = vec![mesh.path_chain("alpha1")?, mesh.path_chain("c-core")?];
    orient_pairs(&mesh, &mut cycles)?;
    let cut = cut_surface(base, &["m-left".into(), "m-right".into()], l, n)?;
    Ok((FamilyMember { l, mesh, cycles, inserted: vec![cyl], cut: Some(cut) }, main))
}

fn build_two_tori_member(cfg: &FamilyConfig, l: f64) -> Result<FamilyMember> {
    let n = cfg.steps_per_unit;
    let k = n as i64;
    let y = 3 * k + k / 2;
    let mut b = MeshBuilder::new();
    for (prefix, tag) in [("t1-", "s1"), ("t2-", "s2")] {
        let mut t = holed_torus(n, 4, &[(0, 0)], tag)?;
        let x_loop = t.lattice_path(&[(0, y), (4 * k, y)])?;
        let y_loop = t.lattice_path(&[(y, 0), (y, 4 * k)])?;
        t.builder.path("x-loop", x_loop);
        t.builder.path("y-loop", y_loop);
        b.append(t.builder.prefixed(prefix))?;
    }
    let left = attach_cylinder(&mut b, "cl-", 0.5 * l, n, "cyl-left")?;
    let right = attach_cylinder(&mut b, "cr-", 0.5 * l, n, "cyl-right")?;
    b.glue("t1-hole0", "cl-left", 0)?;
    b.glue("cl-right", "cr-left", 0)?;
    b.glue("cr-right", "t2-hole0", cfg.twist_offset)?;
    let mesh = b.build()?;
    let mut cycles = Vec::new();
    for p in ["t1-", "t2-"] {
        cycles.push(mesh.path_chain(&format!("{p}x-loop"))?);
        cycles.push(mesh.path_chain(&format!("{p}y-loop"))?);
    }
    orient_pairs(&mesh, &mut cycles)?;
    Ok(FamilyMember { l, mesh, cycles, inserted: vec![left, right], cut: None })
}

/// One closed mesh per modulus, all sharing the main part's combinatorics.
pub fn build_family(cfg: &FamilyConfig) -> Result<Family> {
    cfg.validate()?;
    let built: Vec<(FamilyMember, Option<SurfaceMesh>)> = cfg
        .l_values
        .par_iter()
        .map(|&l| match cfg.main_part {
            MainPart::SlabWithHandle => build_handle_member(cfg, l).map(|(m, main)| (m, Some(main))),
            MainPart::PureCylinder { gamma } => build_pure_member(cfg, gamma, l).map(|(m, main)| (m, Some(main))),
            MainPart::TwoTori => build_two_tori_member(cfg, l).map(|m| (m, None)),
        })
        .collect::<Result<_>>()?;
    let mut main_part = None;
    let mut members = Vec::with_capacity(built.len());
    for (m, main) in built {
        if main_part.is_none() {
            main_part = main;
        }
        members.push(m);
    }
    Ok(Family { config: cfg.clone(), main_part, members })
}

/// `Γ = 1/cap(𝔐)` from the Dirichlet problem on the main part.
pub fn main_part_modulus(main: &SurfaceMesh, opts: &SolverOptions) -> Result<f64> {
    Ok(1.0 / dirichlet_capacity(main, opts)?.capacity)
}

/// Period data of one member of the family.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FamilySample {
    #[serde(rename = "L")]
    pub l: f64,
    /// Gram period matrix, row-major.
    #[serde(rename = "P")]
    pub p: Vec<Vec<f64>>,
    pub e_sigma1: f64,
    /// Essential energy of `τ₁ = σ₁/E(σ₁)`, from the forms (not from the identity).
    pub ess_energy_tau1: f64,
    /// Essential energy of `τ₂ = σ₂ - κ₂σ₁`, from the forms.
    pub ess_energy_tau2: f64,
    /// Energy of `σ₁` per face tag.
    pub region_energies: BTreeMap<String, f64>,
    /// `cap(S×_L)` where the family has a cut surface.
    pub capacity: Option<f64>,
    /// `Γ` of the main part, when defined.
    pub gamma: Option<f64>,
    pub wedge: IntMatrix,
    pub wedge_rounding: f64,
    pub period_defect: f64,
    pub max_harmonicity_residual: f64,
    /// Largest `|⟨τ_j, σ₁⟩|` over `j ≥ 2`, relative to `E(σ₁)`.
    pub tau_orthogonality: f64,
    pub iterations: Vec<usize>,
}

impl FamilySample {
    pub fn p_matrix(&self) -> DMatrix<f64> {
        let n = self.p.len();
        DMatrix::from_fn(n, n, |i, j| self.p[i][j])
    }
}

/// Forms and homology of a sampled member, kept for profile and basis studies.
#[derive(Clone, Debug)]
pub struct SampleData {
    pub sample: FamilySample,
    pub basis: HomologyBasis,
    pub harmonic: HarmonicBasis,
}

/// Dual basis, Gram matrix, energies and capacity of one member.
pub fn sample_member(member: &FamilyMember, gamma: Option<f64>, opts: &SolverOptions) -> Result<SampleData> {
    let mesh = &member.mesh;
    let basis = homology_basis(mesh, &member.pins())?;
    let harmonic = harmonic_dual_basis(mesh, &basis, opts)?;
    let (wedge, wedge_rounding) = wedge_matrix(mesh, &basis.duals);
    let blocks = member.inserted_blocks()?;
    let s1 = &harmonic.forms[0];
    let e1 = harmonic.energy(0);
    let tau1 = s1.scaled(1.0 / e1);
    let ess_energy_tau1 = essential_energy(mesh, &tau1, &blocks)?;
    let kappa2 = harmonic.gram[(0, 1)] / e1;
    let mut tau2 = harmonic.forms[1].clone();
    tau2.axpy(-kappa2, s1);
    let ess_energy_tau2 = essential_energy(mesh, &tau2, &blocks)?;
    let mut tau_orthogonality: f64 = 0.0;
    for j in 1..harmonic.forms.len() {
        let kappa = harmonic.gram[(0, j)] / e1;
        let mut t = harmonic.forms[j].clone();
        t.axpy(-kappa, s1);
        tau_orthogonality = tau_orthogonality.max((t.inner(mesh, s1) / e1).abs());
    }
    let mut region_energies = BTreeMap::new();
    for tag in mesh.tags() {
        region_energies.insert(tag.clone(), region_energy(mesh, s1, &[tag.as_str()])?);
    }
    let capacity = member.cut.as_ref().map(|c| dirichlet_capacity(c, opts).map(|c| c.capacity)).transpose()?;
    let n = harmonic.forms.len();
    let p = (0..n).map(|i| (0..n).map(|j| harmonic.gram[(i, j)]).collect()).collect();
    let max_harmonicity_residual = harmonic.forms.iter().map(|f| harmonicity_residual(mesh, f)).fold(0.0, f64::max);
    let sample = FamilySample {
        l: member.l,
        p,
        e_sigma1: e1,
        ess_energy_tau1,
        ess_energy_tau2,
        region_energies,
        capacity,
        gamma,
        wedge,
        wedge_rounding,
        period_defect: harmonic.period_defect,
        max_harmonicity_residual,
        tau_orthogonality,
        iterations: harmonic.stats.iter().map(|s| s.iterations).collect(),
    };
    Ok(SampleData { sample, basis, harmonic })
}

/// Samples every member; failures are reported per modulus without stopping the sweep.
pub fn sample_family(family: &Family, opts: &SolverOptions) -> Result<Vec<Result<SampleData>>> {
    let gamma = family.main_part.as_ref().map(|m| main_part_modulus(m, opts)).transpose()?;
    Ok(family.members.par_iter().map(|m| sample_member(m, gamma, opts)).collect())
}

/// A named inequality `lhs ≤ rhs + floor`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub lhs: f64,
    pub rhs: f64,
    pub floor: f64,
    pub pass: bool,
}

impl Check {
    pub fn le(name: impl Into<String>, lhs: f64, rhs: f64, floor: f64) -> Self {
        Check { name: name.into(), lhs, rhs, floor, pass: lhs <= rhs + floor }
    }

    pub fn margin(&self) -> f64 {
        self.rhs + self.floor - self.lhs
    }
}

/// Checks the capacity sandwich, the essential-energy identity and its bounds on one
/// sample; `tol` is the identity tolerance.
pub fn sample_checks(s: &FamilySample, tol: f64) -> Vec<Check> {
    let mut out = Vec::new();
    out.push(Check::le("ess.identity", (s.ess_energy_tau1 + s.l - 1.0 / s.e_sigma1).abs(), tol, 0.0));
    if let Some(g) = s.gamma {
        let (lo, hi) = (1.0 / (s.l + ZETA * g), 1.0 / (s.l + g));
        // the upper bound is attained on pure cylinders, so allow solver rounding there
        let fl = 10.0 * tol * hi;
        out.push(Check::le("capacity.sandwich-energy-lower", lo, s.e_sigma1, 0.0));
        out.push(Check::le("capacity.sandwich-energy-upper", s.e_sigma1, hi, fl));
        if let Some(c) = s.capacity {
            out.push(Check::le("capacity.sandwich-cut-lower", lo, c, 0.0));
            out.push(Check::le("capacity.sandwich-cut-upper", c, hi, fl));
        }
        out.push(Check::le("ess.tau1-lower", g, s.ess_energy_tau1, tol));
        out.push(Check::le("ess.tau1-upper", s.ess_energy_tau1, ZETA * g, tol));
    }
    out
}

/// Stability of the essential energy across the sweep:
/// `|𝓔(τ₁,L) - 𝓔(τ₁,L̃)| ≤ max(e^{-2πL} min(𝓔, 𝓔̃), floor)` for `L < L̃`.
pub fn stability_checks(samples: &[FamilySample], floor: f64) -> Vec<Check> {
    let mut out = Vec::new();
    for (i, a) in samples.iter().enumerate() {
        for b in &samples[i + 1..] {
            let (lo, hi) = if a.l < b.l { (a, b) } else { (b, a) };
            let bound = (-2.0 * PI * lo.l).exp() * lo.ess_energy_tau1.min(hi.ess_energy_tau1);
            let mut c = Check::le(
                format!("ess.stability L={} vs {}", lo.l, hi.l),
                (lo.ess_energy_tau1 - hi.ess_energy_tau1).abs(),
                bound.max(floor),
                0.0,
            );
            c.floor = floor;
            out.push(c);
        }
    }
    out
}

/// Schur data of `P` relative to `σ₁`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RelaxedBasis {
    /// `κ_j = P_1j / P_11` for `j = 2..2g`.
    pub kappa: Vec<f64>,
    /// `⟨τ_i, τ_j⟩ = P_ij - P_1i P_1j / P_11` for `i, j = 2..2g`.
    pub tau_gram: Vec<Vec<f64>>,
}

pub fn relaxed_basis(p: &DMatrix<f64>) -> Result<RelaxedBasis> {
    let p11 = p[(0, 0)];
    if !(p11 > 0.0) {
        return Err(Error::DegenerateP(format!("P11 = {p11} is not positive")));
    }
    let n = p.nrows();
    let kappa = (1..n).map(|j| p[(0, j)] / p11).collect();
    let tau_gram = (1..n).map(|i| (1..n).map(|j| p[(i, j)] - p[(0, i)] * p[(0, j)] / p11).collect()).collect();
    Ok(RelaxedBasis { kappa, tau_gram })
}

/// `|κ_j| ≤ √(𝓔(τ₂) E(τ_j))` for `j ≥ 3`.
pub fn kappa_bound_checks(p: &DMatrix<f64>, ess_tau2: f64) -> Result<Vec<Check>> {
    let r = relaxed_basis(p)?;
    // kappa[i] and tau_gram[i][i] belong to index j = i + 2
    Ok((1..r.kappa.len())
        .map(|i| {
            Check::le(format!("relaxed.kappa-bound j={}", i + 2), r.kappa[i].abs(), (ess_tau2.max(0.0) * r.tau_gram[i][i]).sqrt(), 0.0)
        })
        .collect())
}

/// Gram matrix after the change of basis `α'_i = Σ_j A_ij α_j`: the dual forms are
/// `σ'_k = Σ_m σ_m (A⁻¹)_mk`, so `P' = A⁻ᵀ P A⁻¹`.
pub fn change_basis(p: &DMatrix<f64>, a: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let c = a.clone().try_inverse().ok_or_else(|| Error::InvalidInput("basis change is singular".into()))?;
    Ok(c.transpose() * p * c)
}

/// Energy profile of `σ` with all periods on the far side zero, on a separating member.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecayProfile {
    #[serde(rename = "L")]
    pub l: f64,
    /// Half of the normalized modulus of the inserted cylinder.
    pub half_modulus: f64,
    /// `E_{S₂}(σ) / E(σ)` with `S₂` the far torus plus the far half of the cylinder.
    pub far_ratio: f64,
    /// `E_{S₂∖C}(σ) / E_C(σ)`.
    pub beyond_ratio: f64,
    /// Flat single-crossing factor `e^{-4π(M - 1)}` at half-modulus `M`.
    pub single_factor: f64,
    pub slabs: Vec<SlabEnergy>,
}

/// Decay of the energy of `σ_k` through the cylinder of a separating member.
pub fn vanishing_profile(member: &FamilyMember, data: &SampleData, mode: FamilyMode, k: usize) -> Result<DecayProfile> {
    if mode != FamilyMode::Separating || member.inserted.len() != 2 {
        return Err(Error::ModeMismatch { expected: "separating" });
    }
    let mesh = &member.mesh;
    let sigma: &Cochain1 = data.harmonic.forms.get(k).ok_or_else(|| Error::InvalidInput(format!("no basis form {k}")))?;
    let total = sigma.energy(mesh);
    if !(total > 0.0) {
        return Err(Error::PreconditionUnmet("form is trivial".into()));
    }
    // periods on α₃, α₄ (the far torus) must vanish
    for c in &member.cycles[2..] {
        if sigma.pair(c).abs() > 1e-9 {
            return Err(Error::PreconditionUnmet("form has a nonzero period on the far side".into()));
        }
    }
    let far = region_energy(mesh, sigma, &["s2", "cyl-right"])?;
    let beyond = region_energy(mesh, sigma, &["s2"])?;
    let inside = region_energy(mesh, sigma, &["cyl-left", "cyl-right"])?;
    let mut slabs = Vec::new();
    let mut offset = 0.0;
    let mut index = 0;
    for b in member.inserted_blocks()? {
        for mut s in slab_profile(mesh, sigma, b)? {
            s.position += offset;
            s.slab = index;
            index += 1;
            slabs.push(s);
        }
        offset += b.modulus();
    }
    let half_modulus = 0.5 * member.l;
    Ok(DecayProfile {
        l: member.l,
        half_modulus,
        far_ratio: far / total,
        beyond_ratio: beyond / inside,
        single_factor: (-4.0 * PI * (half_modulus - 1.0)).exp(),
        slabs,
    })
}

/// Least-squares slope of `ln y` against `x`.
pub fn log_slope(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() || x.len() < 2 {
        return Err(Error::InsufficientSamples { needed: 2, got: x.len().min(y.len()) });
    }
    if y.iter().any(|v| !(*v > 0.0)) {
        return Err(Error::InvalidInput("log slope needs positive values".into()));
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    if sxx == 0.0 {
        return Err(Error::InvalidInput("log slope needs distinct abscissae".into()));
    }
    Ok(sxy / sxx)
}

/// User-supplied geometry for the energy bounds on flat models.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundInputs {
    /// Modulus (width over circumference) of an embedded flat annulus around the
    /// partner of `α_k`, for each checked `k` (1-based), avoiding every other basis curve.
    pub partner_collar_moduli: BTreeMap<usize, f64>,
    /// Width `w_A` in normalized units, for the bound on `E(σ₂)`.
    pub w_a: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundRecord {
    pub check: Check,
    pub label: String,
}

/// Flat surrogates of the diagonal-entry and core-dual energy bounds.
pub fn geometric_energy_bounds(s: &FamilySample, genus: usize, inputs: &BoundInputs) -> Result<Vec<BoundRecord>> {
    let mut out = Vec::new();
    for (&k, &m) in &inputs.partner_collar_moduli {
        if k == 0 || k > s.p.len() || !(m > 0.0) {
            return Err(Error::InvalidInput(format!("bad collar modulus entry {k} -> {m}")));
        }
        out.push(BoundRecord {
            check: Check::le(format!("bounds.diagonal-entry k={k}"), s.p[k - 1][k - 1], 1.0 / m, 0.0),
            label: "surrogate bound".into(),
        });
    }
    if s.p.len() >= 2 {
        let rhs = core_dual_energy_bound(s.l, genus as u32, inputs.w_a)?;
        out.push(BoundRecord { check: Check::le("bounds.core-dual-energy", s.p[1][1], rhs, 0.0), label: "surrogate bound".into() });
    }
    Ok(out)
}
