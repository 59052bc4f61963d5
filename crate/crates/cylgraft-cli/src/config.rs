//! Run configuration: one TOML file with a section per subcommand.

use crate::CliError;
use cylgraft::family::{BoundInputs, FamilyConfig, FamilyMode, MainPart};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::path::Path;

pub const DEFAULT_SEED: u64 = 20_240_601;
/// Tolerance for identities that hold exactly in the continuum.
pub const DEFAULT_TOL: f64 = 1e-8;
/// Relative residual of every linear solve.
pub const DEFAULT_SOLVER_TOL: f64 = 1e-12;

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub seed: Option<u64>,
    pub tol: Option<f64>,
    pub solver_tol: Option<f64>,
    pub cylinder_check: Option<CylinderCheckConfig>,
    pub collar_table: Option<CollarTableConfig>,
    pub graft_sweep: Option<SweepConfig>,
    pub pinch_verify: Option<SweepConfig>,
    pub package_fit: Option<PackageFitConfig>,
}

/// Whether the pointwise decay bounds are evaluated.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Pointwise {
    /// On every window that meets the preconditions (`l ≥ 1`, both end widths `≥ 1/2`).
    #[default]
    Auto,
    /// On every window; a window that misses the preconditions is a config error.
    On,
    Off,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CylinderCheckConfig {
    /// Random series per suite.
    pub series: usize,
    /// Largest Fourier order drawn.
    pub n_max: u32,
    pub l_min: f64,
    pub l_max: f64,
    /// Fixed half-length for every window instead of a random one.
    pub l: Option<f64>,
    pub delta_l: Option<f64>,
    pub delta_r: Option<f64>,
    pub pointwise: Pointwise,
    /// Points per direction of the pointwise sampling grid.
    pub grid: usize,
    /// Relative error allowed between closed-form and quadrature energies.
    pub quadrature_tol: f64,
    pub dampening: bool,
}

impl Default for CylinderCheckConfig {
    fn default() -> Self {
        CylinderCheckConfig {
            series: 1000,
            n_max: 8,
            l_min: 0.1,
            l_max: 2.0,
            l: None,
            delta_l: None,
            delta_r: None,
            pointwise: Pointwise::Auto,
            grid: 64,
            quadrature_tol: 1e-9,
            dampening: true,
        }
    }
}

impl CylinderCheckConfig {
    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |m: String| Err(CliError::Config(m));
        if self.series == 0 {
            return bad("cylinder_check.series must be positive".into());
        }
        if self.n_max == 0 {
            return bad("cylinder_check.n_max must be positive".into());
        }
        if !(self.l_min > 0.0 && self.l_min <= self.l_max && self.l_max.is_finite()) {
            return bad(format!("cylinder_check needs 0 < l_min <= l_max, got [{}, {}]", self.l_min, self.l_max));
        }
        if self.grid < 2 {
            return bad("cylinder_check.grid needs at least 2 points".into());
        }
        if !(self.quadrature_tol > 0.0) {
            return bad("cylinder_check.quadrature_tol must be positive".into());
        }
        if let Some(l) = self.l {
            let (dl, dr) = (self.delta_l.unwrap_or(0.25 * l), self.delta_r.unwrap_or(0.25 * l));
            cylgraft::cylinder::CylinderWindow::new(l, dl, dr).map_err(|e| CliError::Config(e.to_string()))?;
            if self.pointwise == Pointwise::On && (l < 1.0 || dl.min(dr) < 0.5) {
                return bad(format!("pointwise bounds need l >= 1 and end widths >= 1/2, got l = {l}, widths {dl}, {dr}"));
            }
        } else {
            if self.delta_l.is_some() || self.delta_r.is_some() {
                return bad("end widths can only be fixed together with l".into());
            }
            if self.pointwise == Pointwise::On && self.l_max < 1.0 {
                return bad(format!("pointwise bounds need l >= 1, but l_max = {}", self.l_max));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CollarTableConfig {
    pub ell_min: f64,
    pub ell_max: f64,
    pub steps: usize,
}

impl Default for CollarTableConfig {
    fn default() -> Self {
        CollarTableConfig { ell_min: 1e-4, ell_max: 0.5, steps: 10_000 }
    }
}

impl CollarTableConfig {
    pub fn validate(&self) -> Result<(), CliError> {
        if !(self.ell_min > 0.0 && self.ell_min < self.ell_max && self.ell_max <= 0.5) || self.steps < 2 {
            return Err(CliError::Config(format!(
                "collar table needs 0 < ell_min < ell_max <= 1/2 and steps >= 2, got [{}, {}] with {} steps",
                self.ell_min, self.ell_max, self.steps
            )));
        }
        Ok(())
    }
}

/// A family sweep as written in the config file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub main_part: MainPart,
    pub mode: FamilyMode,
    #[serde(rename = "L")]
    pub l_values: Vec<f64>,
    pub steps_per_unit: usize,
    #[serde(default = "one")]
    pub twist_offset: i64,
    /// Index (0-based) of the dual form whose decay is profiled.
    #[serde(default)]
    pub form: usize,
    /// Flat surrogate inputs for the geometric energy bounds.
    pub bounds: Option<BoundsConfig>,
}

/// [`BoundInputs`] with the 1-based basis index written as a TOML key.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundsConfig {
    pub w_a: f64,
    #[serde(default)]
    pub partner_collar_moduli: BTreeMap<String, f64>,
}

impl BoundsConfig {
    pub fn inputs(&self) -> Result<BoundInputs, CliError> {
        let mut m = BTreeMap::new();
        for (k, v) in &self.partner_collar_moduli {
            let i: usize = k.parse().map_err(|_| CliError::Config(format!("collar modulus key {k:?} is not a basis index")))?;
            m.insert(i, *v);
        }
        Ok(BoundInputs { partner_collar_moduli: m, w_a: self.w_a })
    }
}

fn one() -> i64 {
    1
}

impl SweepConfig {
    pub fn family(&self, refine: usize) -> Result<FamilyConfig, CliError> {
        let cfg = FamilyConfig {
            main_part: self.main_part,
            mode: self.mode,
            l_values: self.l_values.clone(),
            steps_per_unit: self.steps_per_unit,
            twist_offset: self.twist_offset,
        }
        .refined(refine);
        cfg.validate().map_err(|e| CliError::Config(e.to_string()))?;
        Ok(cfg)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PackageFitConfig {
    pub family: SweepConfig,
    /// `λ` values at which the assembled family is checked.
    #[serde(default = "default_lambdas")]
    pub lambdas: Vec<f64>,
    #[serde(default)]
    pub toy: ToyPackage,
}

pub fn default_lambdas() -> Vec<f64> {
    (0..=50).map(|k| 10f64.powf(-2.0 + 5.0 * k as f64 / 50.0)).collect()
}

/// Parameters of the exactly symplectic genus-2 test package.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ToyPackage {
    /// `κ₂, κ₃, κ₄`.
    pub kappa: [f64; 3],
    /// Symmetric positive definite block with determinant 1.
    pub block: [[f64; 2]; 2],
}

impl Default for ToyPackage {
    fn default() -> Self {
        ToyPackage { kappa: [0.5, -0.25, 0.75], block: [[2.0, 1.0], [1.0, 1.0]] }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<RunConfig, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<RunConfig, CliError> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        if let Some(t) = cfg.tol {
            check_tol("tol", t)?;
        }
        if let Some(t) = cfg.solver_tol {
            check_tol("solver_tol", t)?;
        }
        Ok(cfg)
    }
}

pub fn check_tol(name: &str, t: f64) -> Result<(), CliError> {
    if !(t > 0.0 && t < 1.0) {
        return Err(CliError::Config(format!("{name} must lie in (0, 1), got {t}")));
    }
    Ok(())
}
