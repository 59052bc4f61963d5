//! Harmonic functions and forms on the flat cylinder `R x S^1` with `S^1 = R/Z`.
//!
//! A harmonic function is stored through its Fourier expansion
//!
//! `h = a0 + b0 x + sum (a_n cos 2πny + b_n sin 2πny) e^{-2πnx} + sum (c_n cos 2πny + d_n sin 2πny) e^{2πnx}`
//!
//! The first sum is the decaying part `h⁻`, the second the growing part `h⁺`, and
//! together they form the nonlinear part `h^nl`. Energies over slabs `[x0, x1] x S^1`
//! have closed forms; cut-off (dampened) forms are integrated numerically.

use crate::error::{Error, Result};
use crate::quadrature;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Truncation order used when none is given.
pub const DEFAULT_N_MAX: u32 = 16;

const QUAD_TOL: f64 = 1e-12;

/// One Fourier mode of order `n` with decaying coefficients `(a, b)` and growing `(c, d)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Mode {
    pub n: u32,
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
}

impl Mode {
    pub fn new(n: u32, a: f64, b: f64, c: f64, d: f64) -> Self {
        Mode { n, a, b, c, d }
    }

    fn minus_sq(&self) -> f64 {
        self.a * self.a + self.b * self.b
    }

    fn plus_sq(&self) -> f64 {
        self.c * self.c + self.d * self.d
    }
}

/// Which piece of a harmonic function an energy refers to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Part {
    Full,
    Linear,
    Minus,
    Plus,
    Nonlinear,
}

/// Truncated Fourier representation of a harmonic function on the cylinder.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FourierHarmonic {
    a0: f64,
    b0: f64,
    modes: Vec<Mode>,
    n_max: u32,
}

/// Values and first derivatives of `h⁻` and `h⁺` at one point.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct PartsAt {
    pub minus: f64,
    pub minus_x: f64,
    pub minus_y: f64,
    pub plus: f64,
    pub plus_x: f64,
    pub plus_y: f64,
}

/// `∫_{x0}^{x1} c e^{-c x} dx = e^{-c x0} - e^{-c x1}` for `c > 0`, without cancellation.
fn decaying(c: f64, x0: f64, x1: f64) -> f64 {
    -(-c * x0).exp() * (-c * (x1 - x0)).exp_m1()
}

/// `∫_{x0}^{x1} c e^{c x} dx = e^{c x1} - e^{c x0}` for `c > 0`.
fn growing(c: f64, x0: f64, x1: f64) -> f64 {
    -(c * x1).exp() * (-c * (x1 - x0)).exp_m1()
}

impl FourierHarmonic {
    /// Builds a series; modes must have strictly increasing orders in `1..=n_max`.
    pub fn new(a0: f64, b0: f64, modes: Vec<Mode>, n_max: u32) -> Result<Self> {
        if n_max == 0 {
            return Err(Error::InvalidInput("n_max must be positive".into()));
        }
        let mut last = 0;
        for m in &modes {
            if m.n <= last {
                return Err(Error::InvalidInput(format!(
                    "mode orders must be positive and strictly increasing, got {} after {}",
                    m.n, last
                )));
            }
            if m.n > n_max {
                return Err(Error::InvalidInput(format!("mode {} exceeds n_max {}", m.n, n_max)));
            }
            if ![m.a, m.b, m.c, m.d].iter().all(|v| v.is_finite()) {
                return Err(Error::InvalidInput(format!("mode {} has a non-finite coefficient", m.n)));
            }
            last = m.n;
        }
        if !a0.is_finite() || !b0.is_finite() {
            return Err(Error::InvalidInput("linear coefficients must be finite".into()));
        }
        Ok(FourierHarmonic { a0, b0, modes, n_max })
    }

    /// Series with `n_max` set to the highest mode present (at least 1).
    pub fn from_modes(a0: f64, b0: f64, modes: Vec<Mode>) -> Result<Self> {
        let n_max = modes.iter().map(|m| m.n).max().unwrap_or(1);
        Self::new(a0, b0, modes, n_max)
    }

    pub fn linear(a0: f64, b0: f64) -> Self {
        FourierHarmonic { a0, b0, modes: Vec::new(), n_max: 1 }
    }

    pub fn zero() -> Self {
        Self::linear(0.0, 0.0)
    }

    /// A single mode `n` and nothing else.
    pub fn single(n: u32, a: f64, b: f64, c: f64, d: f64) -> Result<Self> {
        Self::from_modes(0.0, 0.0, vec![Mode::new(n, a, b, c, d)])
    }

    pub fn a0(&self) -> f64 {
        self.a0
    }

    pub fn b0(&self) -> f64 {
        self.b0
    }

    pub fn modes(&self) -> &[Mode] {
        &self.modes
    }

    pub fn n_max(&self) -> u32 {
        self.n_max
    }

    /// Projection onto one part of the decomposition.
    pub fn part(&self, part: Part) -> FourierHarmonic {
        let keep_linear = matches!(part, Part::Full | Part::Linear);
        let modes = match part {
            Part::Linear => Vec::new(),
            Part::Minus => self.modes.iter().map(|m| Mode { c: 0.0, d: 0.0, ..*m }).collect(),
            Part::Plus => self.modes.iter().map(|m| Mode { a: 0.0, b: 0.0, ..*m }).collect(),
            Part::Full | Part::Nonlinear => self.modes.clone(),
        };
        FourierHarmonic {
            a0: if keep_linear { self.a0 } else { 0.0 },
            b0: if keep_linear { self.b0 } else { 0.0 },
            modes,
            n_max: self.n_max,
        }
    }

    pub fn is_nonlinear_zero(&self) -> bool {
        self.modes.iter().all(|m| m.minus_sq() == 0.0 && m.plus_sq() == 0.0)
    }

    /// `h⁻`, `h⁺` and their partial derivatives at `(x, y)`.
    pub fn parts_at(&self, x: f64, y: f64) -> PartsAt {
        let mut p = PartsAt::default();
        for m in &self.modes {
            let k = 2.0 * PI * m.n as f64;
            let (s, c) = (k * y).sin_cos();
            let em = (-k * x).exp();
            let ep = (k * x).exp();
            let fm = m.a * c + m.b * s;
            let gm = -m.a * s + m.b * c;
            let fp = m.c * c + m.d * s;
            let gp = -m.c * s + m.d * c;
            p.minus += fm * em;
            p.minus_x -= k * fm * em;
            p.minus_y += k * gm * em;
            p.plus += fp * ep;
            p.plus_x += k * fp * ep;
            p.plus_y += k * gp * ep;
        }
        p
    }

    pub fn value(&self, x: f64, y: f64) -> f64 {
        let p = self.parts_at(x, y);
        self.a0 + self.b0 * x + p.minus + p.plus
    }

    /// Components `(A, B)` of `dh = A dx + B dy`.
    pub fn gradient(&self, x: f64, y: f64) -> (f64, f64) {
        let p = self.parts_at(x, y);
        (self.b0 + p.minus_x + p.plus_x, p.minus_y + p.plus_y)
    }

    /// `∫_0^1 ||dh(x, y)||^2 dy`.
    pub fn slice_energy(&self, x: f64) -> f64 {
        let mut s = self.b0 * self.b0;
        for m in &self.modes {
            let n = m.n as f64;
            let k2 = 4.0 * PI * PI * n * n;
            s += k2 * m.minus_sq() * (-4.0 * PI * n * x).exp();
            s += k2 * m.plus_sq() * (4.0 * PI * n * x).exp();
        }
        s
    }

    /// `E_{[x0,x1] x S^1}(d h_part)` in closed form.
    pub fn energy(&self, x0: f64, x1: f64, part: Part) -> Result<f64> {
        if !(x0 < x1) {
            return Err(Error::InvalidInput(format!("need x0 < x1, got [{x0}, {x1}]")));
        }
        Ok(self.energy_unchecked(x0, x1, part))
    }

    fn energy_unchecked(&self, x0: f64, x1: f64, part: Part) -> f64 {
        let linear = self.b0 * self.b0 * (x1 - x0);
        let mut minus = 0.0;
        let mut plus = 0.0;
        for m in &self.modes {
            let n = m.n as f64;
            let c = 4.0 * PI * n;
            minus += PI * n * m.minus_sq() * decaying(c, x0, x1);
            plus += PI * n * m.plus_sq() * growing(c, x0, x1);
        }
        match part {
            Part::Full => linear + minus + plus,
            Part::Linear => linear,
            Part::Minus => minus,
            Part::Plus => plus,
            Part::Nonlinear => minus + plus,
        }
    }

    /// `∫_{[x0,x1] x S^1} |h_part|^2` in closed form.
    pub fn l2_sq(&self, x0: f64, x1: f64, part: Part) -> Result<f64> {
        if !(x0 < x1) {
            return Err(Error::InvalidInput(format!("need x0 < x1, got [{x0}, {x1}]")));
        }
        let dx = x1 - x0;
        let linear = self.a0 * self.a0 * dx + self.a0 * self.b0 * (x1 * x1 - x0 * x0) + self.b0 * self.b0 * (x1.powi(3) - x0.powi(3)) / 3.0;
        let mut minus = 0.0;
        let mut plus = 0.0;
        let mut cross = 0.0;
        for m in &self.modes {
            let n = m.n as f64;
            let c = 4.0 * PI * n;
            // mean over y of the squared mode is (a^2+b^2)/2 e^{-4πnx}; integrate and divide by c
            minus += 0.5 * m.minus_sq() * decaying(c, x0, x1) / c;
            plus += 0.5 * m.plus_sq() * growing(c, x0, x1) / c;
            cross += (m.a * m.c + m.b * m.d) * dx;
        }
        Ok(match part {
            Part::Full => linear + minus + plus + cross,
            Part::Linear => linear,
            Part::Minus => minus,
            Part::Plus => plus,
            Part::Nonlinear => minus + plus + cross,
        })
    }
}

/// The slab `Z_l = [-l, l] x S^1` with end pieces of widths `delta_l`, `delta_r`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CylinderWindow {
    l: f64,
    delta_l: f64,
    delta_r: f64,
}

impl CylinderWindow {
    pub fn new(l: f64, delta_l: f64, delta_r: f64) -> Result<Self> {
        if !(l > 0.0) || !l.is_finite() {
            return Err(Error::InvalidInput(format!("half-length must be positive, got {l}")));
        }
        if !(delta_l >= 0.0) || !(delta_r >= 0.0) {
            return Err(Error::InvalidInput("end widths must be nonnegative".into()));
        }
        if !(delta_l + delta_r < 2.0 * l) {
            return Err(Error::InvalidInput(format!("end widths {delta_l} + {delta_r} must stay below 2l = {}", 2.0 * l)));
        }
        Ok(CylinderWindow { l, delta_l, delta_r })
    }

    pub fn l(&self) -> f64 {
        self.l
    }

    pub fn delta_l(&self) -> f64 {
        self.delta_l
    }

    pub fn delta_r(&self) -> f64 {
        self.delta_r
    }

    /// `min(delta_l, delta_r)`.
    pub fn delta(&self) -> f64 {
        self.delta_l.min(self.delta_r)
    }

    /// Width of the interior piece, `2l - delta_l - delta_r`.
    pub fn width(&self) -> f64 {
        2.0 * self.l - self.delta_l - self.delta_r
    }

    /// The interior piece as an `x`-interval.
    pub fn interior(&self) -> (f64, f64) {
        (-self.l + self.delta_l, self.l - self.delta_r)
    }
}

/// Relative slack for inequalities that are equalities in exact arithmetic on some
/// inputs (a lone order-one mode, a zero end width): a few ulps of the evaluated sides.
pub const ROUNDING_FLOOR: f64 = 64.0 * f64::EPSILON;

/// One inequality of the form `lhs <= rhs` evaluated on concrete data, up to
/// `ROUNDING_FLOOR` relative to `rhs`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecayRecord {
    pub part: String,
    pub lhs: f64,
    pub rhs: f64,
    pub ratio: f64,
    /// Informational records carry an alternative constant and are not enforced.
    #[serde(default = "yes")]
    pub asserted: bool,
}

fn yes() -> bool {
    true
}

impl DecayRecord {
    pub fn new(part: impl Into<String>, lhs: f64, rhs: f64) -> Self {
        let ratio = if lhs == 0.0 { 0.0 } else { lhs / rhs };
        DecayRecord { part: part.into(), lhs, rhs, ratio, asserted: true }
    }

    fn informational(mut self) -> Self {
        self.asserted = false;
        self
    }

    pub fn holds(&self) -> bool {
        self.lhs <= self.rhs + ROUNDING_FLOOR * self.rhs.abs()
    }
}

/// All decay inequalities evaluated for one series and window.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct DecayReport {
    pub records: Vec<DecayRecord>,
}

impl DecayReport {
    pub fn all_hold(&self) -> bool {
        self.records.iter().filter(|r| r.asserted).all(DecayRecord::holds)
    }

    pub fn max_ratio(&self) -> f64 {
        self.records.iter().filter(|r| r.asserted).map(|r| r.ratio).fold(0.0, f64::max)
    }

    pub fn get(&self, part: &str) -> Option<&DecayRecord> {
        self.records.iter().find(|r| r.part == part)
    }
}

/// Controls which inequalities `decay_report` evaluates.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecayOptions {
    /// Also evaluate the pointwise bounds (needs `l >= 1` and both end widths `>= 1/2`).
    pub pointwise: bool,
    /// Points per direction of the uniform sampling grid on the interior piece.
    pub grid: usize,
}

impl Default for DecayOptions {
    fn default() -> Self {
        DecayOptions { pointwise: true, grid: 64 }
    }
}

/// Evaluates the L² and pointwise decay bounds for `h` restricted to `w`.
///
/// L² quantities are exact; pointwise ones are sampled on a grid, which can only
/// under-estimate the true supremum.
pub fn decay_report(h: &FourierHarmonic, w: &CylinderWindow, opts: DecayOptions) -> Result<DecayReport> {
    let l = w.l();
    let (xa, xb) = w.interior();
    if opts.pointwise {
        if l < 1.0 {
            return Err(Error::PreconditionUnmet(format!("pointwise bounds need l >= 1, got {l}")));
        }
        if w.delta() < 0.5 {
            return Err(Error::PreconditionUnmet(format!("pointwise bounds need both end widths >= 1/2, got {}", w.delta())));
        }
        if opts.grid < 2 {
            return Err(Error::InvalidInput("sampling grid needs at least 2 points".into()));
        }
    }
    let e_min = h.energy_unchecked(-l, l, Part::Minus);
    let e_plus = h.energy_unchecked(-l, l, Part::Plus);
    let e_nl = e_min + e_plus;
    let mut rec = Vec::new();
    let eight_pi2 = 8.0 * PI * PI;

    let int_min = h.energy_unchecked(xa, xb, Part::Minus);
    let int_plus = h.energy_unchecked(xa, xb, Part::Plus);
    let int_nl = h.energy_unchecked(xa, xb, Part::Nonlinear);
    rec.push(DecayRecord::new("minus.l2-below-energy", eight_pi2 * h.l2_sq(xa, xb, Part::Minus)?, int_min));
    rec.push(DecayRecord::new("minus.interior-energy", int_min, (-4.0 * PI * w.delta_l()).exp() * e_min));
    rec.push(DecayRecord::new("plus.l2-below-energy", eight_pi2 * h.l2_sq(xa, xb, Part::Plus)?, int_plus));
    rec.push(DecayRecord::new("plus.interior-energy", int_plus, (-4.0 * PI * w.delta_r()).exp() * e_plus));
    rec.push(DecayRecord::new("nonlinear.l2-below-energy", 0.5 * eight_pi2 * h.l2_sq(xa, xb, Part::Nonlinear)?, int_nl));
    rec.push(DecayRecord::new("nonlinear.interior-energy", int_nl, (-4.0 * PI * w.delta()).exp() * e_nl));

    if opts.pointwise {
        let g = opts.grid;
        // (value, gradient) sup trackers: (ratio, lhs, rhs)
        let mut sup = [(0.0f64, 0.0f64, 0.0f64); 6];
        let bump = |slot: &mut (f64, f64, f64), lhs: f64, rhs: f64| {
            let r = if lhs == 0.0 { 0.0 } else { lhs / rhs };
            if r > slot.0 || (slot.1 == 0.0 && slot.2 == 0.0) {
                *slot = (r, lhs, rhs);
            }
        };
        let delta = w.delta();
        for i in 0..g {
            let x = xa + (xb - xa) * i as f64 / (g - 1) as f64;
            let dec_l = (-4.0 * PI * (x + l)).exp();
            let dec_r = (-4.0 * PI * (l - x)).exp();
            let dec = (-4.0 * PI * delta).exp();
            for j in 0..g {
                let y = j as f64 / g as f64;
                let p = h.parts_at(x, y);
                let nl = p.minus + p.plus;
                let nl_x = p.minus_x + p.plus_x;
                let nl_y = p.minus_y + p.plus_y;
                bump(&mut sup[0], p.minus * p.minus, dec_l * e_min);
                bump(&mut sup[1], p.minus_x * p.minus_x + p.minus_y * p.minus_y, 52.0 * dec_l * e_min);
                bump(&mut sup[2], p.plus * p.plus, dec_r * e_plus);
                bump(&mut sup[3], p.plus_x * p.plus_x + p.plus_y * p.plus_y, 52.0 * dec_r * e_plus);
                bump(&mut sup[4], nl * nl, 2.0 * dec * e_nl);
                bump(&mut sup[5], nl_x * nl_x + nl_y * nl_y, 104.0 * dec * e_nl);
            }
        }
        let names = [
            "minus.pointwise-value",
            "minus.pointwise-gradient",
            "plus.pointwise-value",
            "plus.pointwise-gradient",
            "nonlinear.pointwise-value",
            "nonlinear.pointwise-gradient",
        ];
        for (name, (_, lhs, rhs)) in names.iter().zip(sup) {
            rec.push(DecayRecord::new(*name, lhs, rhs));
        }
    }
    Ok(DecayReport { records: rec })
}

/// The closed harmonic form `b0 dx + c0 dy + d(nonlinear)` on a slab of the cylinder.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OneFormOnCylinder {
    b0: f64,
    c0: f64,
    nonlinear: FourierHarmonic,
}

impl OneFormOnCylinder {
    /// `nonlinear` must have vanishing linear coefficients.
    pub fn new(b0: f64, c0: f64, nonlinear: FourierHarmonic) -> Result<Self> {
        if nonlinear.a0 != 0.0 || nonlinear.b0 != 0.0 {
            return Err(Error::InvalidInput("nonlinear part must have a0 = b0 = 0".into()));
        }
        Ok(OneFormOnCylinder { b0, c0, nonlinear })
    }

    /// `dh + c0 dy` for a harmonic function `h`.
    pub fn from_harmonic(h: &FourierHarmonic, c0: f64) -> Self {
        OneFormOnCylinder { b0: h.b0, c0, nonlinear: h.part(Part::Nonlinear) }
    }

    pub fn b0(&self) -> f64 {
        self.b0
    }

    pub fn c0(&self) -> f64 {
        self.c0
    }

    pub fn nonlinear(&self) -> &FourierHarmonic {
        &self.nonlinear
    }

    pub fn components(&self, x: f64, y: f64) -> (f64, f64) {
        let (a, b) = self.nonlinear.gradient(x, y);
        (self.b0 + a, self.c0 + b)
    }

    /// Energy over `[x0, x1] x S^1` in closed form.
    pub fn energy(&self, x0: f64, x1: f64) -> Result<f64> {
        let nl = self.nonlinear.energy(x0, x1, Part::Nonlinear)?;
        Ok((self.b0 * self.b0 + self.c0 * self.c0) * (x1 - x0) + nl)
    }
}

/// `∫ ω ∧ ⋆η` over `[x0, x1] x S^1`, split into linear and nonlinear contributions.
pub fn wedge_inner_product(omega: &OneFormOnCylinder, eta: &OneFormOnCylinder, x0: f64, x1: f64) -> Result<f64> {
    if !(x0 < x1) {
        return Err(Error::InvalidInput(format!("need x0 < x1, got [{x0}, {x1}]")));
    }
    let linear = (omega.b0 * eta.b0 + omega.c0 * eta.c0) * (x1 - x0);
    let mut nl = 0.0;
    let (p, q) = (&omega.nonlinear.modes, &eta.nonlinear.modes);
    let (mut i, mut j) = (0, 0);
    while i < p.len() && j < q.len() {
        if p[i].n < q[j].n {
            i += 1;
        } else if p[i].n > q[j].n {
            j += 1;
        } else {
            let n = p[i].n as f64;
            let c = 4.0 * PI * n;
            nl += PI * n * (p[i].a * q[j].a + p[i].b * q[j].b) * decaying(c, x0, x1);
            nl += PI * n * (p[i].c * q[j].c + p[i].d * q[j].d) * growing(c, x0, x1);
            i += 1;
            j += 1;
        }
    }
    Ok(linear + nl)
}

/// Cut-off factor multiplying one part of the nonlinear term.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum Cutoff {
    /// Identically 1.
    One,
    /// 1 for `x <= start`, linear in between, 0 for `x >= end`.
    Ramp { start: f64, end: f64 },
}

impl Cutoff {
    pub fn value(&self, x: f64) -> f64 {
        match *self {
            Cutoff::One => 1.0,
            Cutoff::Ramp { start, end } => {
                if x <= start {
                    1.0
                } else if x >= end {
                    0.0
                } else {
                    (end - x) / (end - start)
                }
            }
        }
    }

    /// Derivative away from the breakpoints.
    pub fn slope(&self, x: f64) -> f64 {
        match *self {
            Cutoff::One => 0.0,
            Cutoff::Ramp { start, end } => {
                if x > start && x < end {
                    -1.0 / (end - start)
                } else {
                    0.0
                }
            }
        }
    }

    fn breakpoints(&self) -> Vec<f64> {
        match *self {
            Cutoff::One => Vec::new(),
            Cutoff::Ramp { start, end } => vec![start, end],
        }
    }
}

/// `b0 dx + c0 dy + d(χ⁻ h⁻) + d(χ⁺ h⁺)` on `[x0, x1] x S^1`.
///
/// The products are not harmonic, so energies are computed piece by piece between
/// the cut-off breakpoints with composite quadrature.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PiecewiseForm {
    base: OneFormOnCylinder,
    chi_minus: Cutoff,
    chi_plus: Cutoff,
    x0: f64,
    x1: f64,
}

impl PiecewiseForm {
    pub fn new(base: OneFormOnCylinder, chi_minus: Cutoff, chi_plus: Cutoff, x0: f64, x1: f64) -> Result<Self> {
        if !(x0 < x1) {
            return Err(Error::InvalidInput(format!("need x0 < x1, got [{x0}, {x1}]")));
        }
        Ok(PiecewiseForm { base, chi_minus, chi_plus, x0, x1 })
    }

    pub fn base(&self) -> &OneFormOnCylinder {
        &self.base
    }

    pub fn domain(&self) -> (f64, f64) {
        (self.x0, self.x1)
    }

    /// Components of the cut-off form at `(x, y)`; `with_linear` adds `b0 dx + c0 dy`.
    pub fn components(&self, x: f64, y: f64, with_linear: bool) -> (f64, f64) {
        let p = self.base.nonlinear.parts_at(x, y);
        let (cm, sm) = (self.chi_minus.value(x), self.chi_minus.slope(x));
        let (cp, sp) = (self.chi_plus.value(x), self.chi_plus.slope(x));
        let mut a = sm * p.minus + cm * p.minus_x + sp * p.plus + cp * p.plus_x;
        let mut b = cm * p.minus_y + cp * p.plus_y;
        if with_linear {
            a += self.base.b0;
            b += self.base.c0;
        }
        (a, b)
    }

    /// Calls `f(cut, uncut)` for each mode with the Fourier coefficients
    /// `[cos dx, sin dx, cos dy, sin dy]` at `x` of `d(χ⁻h⁻ + χ⁺h⁺)` and of `d h^nl`.
    /// `shift` is subtracted from both cut-off values, so `shift = 1` gives the correction.
    fn modes_at(&self, x: f64, shift: f64, mut f: impl FnMut([f64; 4], [f64; 4])) {
        let (cm, sm) = (self.chi_minus.value(x) - shift, self.chi_minus.slope(x));
        let (cp, sp) = (self.chi_plus.value(x) - shift, self.chi_plus.slope(x));
        for m in &self.base.nonlinear.modes {
            let k = 2.0 * PI * m.n as f64;
            let em = (-k * x).exp();
            let ep = (k * x).exp();
            let coef = |cm: f64, sm: f64, cp: f64, sp: f64| {
                let (u, v) = ((sm - cm * k) * em, (sp + cp * k) * ep);
                let (s, t) = (cm * k * em, cp * k * ep);
                [u * m.a + v * m.c, u * m.b + v * m.d, s * m.b + t * m.d, -s * m.a - t * m.c]
            };
            f(coef(cm, sm, cp, sp), coef(1.0, 0.0, 1.0, 0.0));
        }
    }

    /// `∫_0^1 |d(χ⁻h⁻ + χ⁺h⁺)|² dy` by Parseval.
    fn slice_nonlinear(&self, x: f64) -> f64 {
        let mut s = 0.0;
        self.modes_at(x, 0.0, |c, _| s += c.iter().map(|v| v * v).sum::<f64>());
        0.5 * s
    }

    fn pieces(&self, x0: f64, x1: f64) -> Vec<(f64, f64)> {
        let mut cuts = vec![x0, x1];
        for c in self.chi_minus.breakpoints().into_iter().chain(self.chi_plus.breakpoints()) {
            if c > x0 && c < x1 {
                cuts.push(c);
            }
        }
        cuts.sort_by(f64::total_cmp);
        cuts.dedup();
        cuts.windows(2).map(|w| (w[0], w[1])).collect()
    }

    /// Integrates a slice integral over `[x0, x1]` (clipped to the domain), piece by piece.
    fn integrate(&self, x0: f64, x1: f64, f: impl Fn(f64) -> f64, scale: f64) -> f64 {
        let (a, b) = (x0.max(self.x0), x1.min(self.x1));
        if !(a < b) {
            return 0.0;
        }
        self.pieces(a, b).into_iter().map(|(a, b)| quadrature::integrate_1d(&f, a, b, QUAD_TOL, scale)).sum()
    }

    /// Energy of the whole form over `[x0, x1] x S^1` (clipped to the domain).
    pub fn energy_on(&self, x0: f64, x1: f64) -> f64 {
        let scale = self.base.energy(x0.max(self.x0), x1.min(self.x1)).unwrap_or(0.0);
        let lin = self.base.b0 * self.base.b0 + self.base.c0 * self.base.c0;
        self.integrate(x0, x1, |x| lin + self.slice_nonlinear(x), scale * 1e-3)
    }

    /// Energy of the cut-off nonlinear term alone over `[x0, x1] x S^1`.
    pub fn nonlinear_energy_on(&self, x0: f64, x1: f64) -> f64 {
        let scale = self.base.nonlinear.energy_unchecked(x0.max(self.x0), x1.min(self.x1), Part::Nonlinear);
        self.integrate(x0, x1, |x| self.slice_nonlinear(x), scale * 1e-3)
    }

    pub fn energy(&self) -> f64 {
        self.energy_on(self.x0, self.x1)
    }

    /// `E(cut form) - E(uncut form)` over the domain, integrated as `∫ 2⟨ω, Δ⟩ + |Δ|²`
    /// with `Δ` the correction, so that small excesses are not lost to cancellation.
    /// The correction has zero mean in `y`, so the linear part of `ω` drops out.
    pub fn energy_excess(&self) -> f64 {
        self.integrate(
            self.x0,
            self.x1,
            |x| {
                let mut s = 0.0;
                self.modes_at(x, 1.0, |d, w| {
                    for i in 0..4 {
                        s += w[i] * d[i] + 0.5 * d[i] * d[i];
                    }
                });
                s
            },
            0.0,
        )
    }
}

/// Dampens the whole nonlinear part across the interior piece of `w`.
pub fn dampen_full(omega: &OneFormOnCylinder, w: &CylinderWindow) -> Result<PiecewiseForm> {
    let (start, end) = w.interior();
    let chi = Cutoff::Ramp { start, end };
    PiecewiseForm::new(omega.clone(), chi, chi, -w.l(), w.l())
}

/// Left end width and interior width of the narrow partial-dampening window.
pub const PARTIAL_DELTA_L: f64 = 0.5;
pub const PARTIAL_WIDTH: f64 = 0.01;

/// Dampens only the growing part `h⁺` across the narrow window `[-l + 1/2, -l + 0.51]`.
pub fn dampen_partial(omega: &OneFormOnCylinder, l: f64) -> Result<PiecewiseForm> {
    if !(l >= 1.0) {
        return Err(Error::PreconditionUnmet(format!("partial dampening needs l >= 1, got {l}")));
    }
    let start = -l + PARTIAL_DELTA_L;
    let chi = Cutoff::Ramp { start, end: start + PARTIAL_WIDTH };
    PiecewiseForm::new(omega.clone(), Cutoff::One, chi, -l, l)
}

/// Energy bounds of full dampening: per part on the interior piece and for the whole form.
///
/// The part-wise records for `h⁻` and `h⁺` are repeated with the smaller constant
/// `1 + 1/(4π²w²)` as informational entries.
pub fn dampening_report(omega: &OneFormOnCylinder, w: &CylinderWindow) -> Result<DecayReport> {
    let l = w.l();
    let (xa, xb) = w.interior();
    let width = w.width();
    let k = 1.0 + 1.0 / (2.0 * PI * PI * width * width);
    let k_sharp = 1.0 + 1.0 / (4.0 * PI * PI * width * width);
    let h = &omega.nonlinear;
    let mut rec = Vec::new();
    for (name, part, delta) in
        [("minus", Part::Minus, w.delta_l()), ("plus", Part::Plus, w.delta_r()), ("nonlinear", Part::Nonlinear, w.delta())]
    {
        let hp = h.part(part);
        let single = OneFormOnCylinder { b0: 0.0, c0: 0.0, nonlinear: hp.clone() };
        let pf = dampen_full(&single, w)?;
        let lhs = pf.nonlinear_energy_on(xa, xb);
        let e_int = hp.energy_unchecked(xa, xb, Part::Nonlinear);
        let e_all = hp.energy_unchecked(-l, l, Part::Nonlinear);
        let decay = (-4.0 * PI * delta).exp();
        rec.push(DecayRecord::new(format!("{name}.cutoff-interior"), lhs, e_int + k * decay * e_all));
        if part != Part::Nonlinear {
            rec.push(DecayRecord::new(format!("{name}.cutoff-interior-sharp"), lhs, e_int + k_sharp * decay * e_all).informational());
        }
    }
    let pf = dampen_full(omega, w)?;
    let e = omega.energy(-l, l)?;
    let lhs = e + pf.energy_excess();
    rec.push(DecayRecord::new("form.cutoff-total", lhs, e + k * (-4.0 * PI * w.delta()).exp() * e));
    Ok(DecayReport { records: rec })
}

/// Energy bound of partial dampening on `Z_l`.
pub fn partial_dampening_report(omega: &OneFormOnCylinder, l: f64) -> Result<DecayReport> {
    let pf = dampen_partial(omega, l)?;
    let h = &omega.nonlinear;
    let e_nl = h.energy(-l, l, Part::Nonlinear)?;
    let e_min = h.energy(-l, l, Part::Minus)?;
    let lhs = e_nl + pf.energy_excess();
    let rhs = e_nl + (-8.0 * PI * l + 5.0).exp() * e_min;
    Ok(DecayReport { records: vec![DecayRecord::new("plus-only.cutoff-total", lhs, rhs)] })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn linear_slice_energy() {
        let h = FourierHarmonic::linear(0.0, 3.0);
        assert_eq!(h.slice_energy(0.7), 9.0);
    }

    #[test]
    fn rejects_unsorted_modes() {
        let r = FourierHarmonic::new(0.0, 0.0, vec![Mode::new(2, 1.0, 0.0, 0.0, 0.0), Mode::new(1, 0.0, 0.0, 0.0, 0.0)], 4);
        assert!(r.is_err());
        let r = FourierHarmonic::new(0.0, 0.0, vec![Mode::new(5, 1.0, 0.0, 0.0, 0.0)], 4);
        assert!(r.is_err());
    }

    #[test]
    fn window_rejects_degenerate() {
        assert!(CylinderWindow::new(1.0, 1.0, 1.0).is_err());
        assert!(CylinderWindow::new(1.0, 0.5, 1.0).is_ok());
    }

    #[test]
    fn mean_of_nonlinear_part_vanishes() {
        let h = FourierHarmonic::from_modes(1.0, 2.0, vec![Mode::new(1, 0.3, -0.2, 0.1, 0.5), Mode::new(3, 1.0, 0.0, 0.0, 0.2)]).unwrap();
        let nl = h.part(Part::Nonlinear);
        for x in [-1.0, 0.0, 0.4] {
            let m = quadrature::periodic_mean(|y| nl.value(x, y), 16);
            let scale = quadrature::periodic_mean(|y| nl.value(x, y).abs(), 16);
            assert!(m.abs() < 1e-14 * scale);
        }
    }
}
