//! Seeded random harmonic series and windows for the cylinder suites.

use crate::config::{CylinderCheckConfig, Pointwise};
use cylgraft::cylinder::{CylinderWindow, FourierHarmonic, Mode};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Independent stream per suite and series, so results do not depend on scheduling.
pub fn series_rng(seed: u64, suite: u32, index: usize) -> ChaCha8Rng {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(((suite as u64) << 32) | index as u64);
    r
}

/// A series with order `n_max` drawn from `1..=cap`; each lower order is present
/// with probability 3/4 and all coefficients are uniform on `[-1, 1]`.
pub fn random_series(rng: &mut impl Rng, cap: u32) -> FourierHarmonic {
    let n_max = rng.random_range(1..=cap);
    let mut modes = Vec::new();
    for n in 1..=n_max {
        if n == n_max || rng.random_bool(0.75) {
            let mut c = || rng.random_range(-1.0..=1.0);
            modes.push(Mode::new(n, c(), c(), c(), c()));
        }
    }
    let a0 = rng.random_range(-1.0..=1.0);
    let b0 = rng.random_range(-1.0..=1.0);
    FourierHarmonic::new(a0, b0, modes, n_max).expect("generated modes are ordered and finite")
}

/// A window with half-length in `[l_lo, l_hi]` and end widths in `[d_lo, 0.95 l]`.
fn draw(rng: &mut impl Rng, l_lo: f64, l_hi: f64, d_lo: f64) -> CylinderWindow {
    let l = if l_hi > l_lo { rng.random_range(l_lo..=l_hi) } else { l_lo };
    let hi = (0.95 * l).max(d_lo);
    let mut d = || if hi > d_lo { rng.random_range(d_lo..=hi) } else { d_lo };
    let (dl, dr) = (d(), d());
    CylinderWindow::new(l, dl, dr).expect("end widths stay below the half-length")
}

/// Window for the decay and dampening suites.
pub fn random_window(rng: &mut impl Rng, cfg: &CylinderCheckConfig) -> CylinderWindow {
    if let Some(l) = cfg.l {
        let (dl, dr) = (cfg.delta_l.unwrap_or(0.25 * l), cfg.delta_r.unwrap_or(0.25 * l));
        return CylinderWindow::new(l, dl, dr).expect("validated window");
    }
    match cfg.pointwise {
        Pointwise::On => draw(rng, cfg.l_min.max(1.0), cfg.l_max, 0.5),
        _ => draw(rng, cfg.l_min, cfg.l_max, 0.0),
    }
}

/// Half-length for the partial-dampening suite, which needs `l ≥ 1`; `None` when the
/// configured range has no such value.
pub fn random_partial_length(rng: &mut impl Rng, cfg: &CylinderCheckConfig) -> Option<f64> {
    match cfg.l {
        Some(l) if l >= 1.0 => Some(l),
        Some(_) => None,
        None if cfg.l_max < 1.0 => None,
        None => {
            let lo = cfg.l_min.max(1.0);
            Some(if cfg.l_max > lo { rng.random_range(lo..=cfg.l_max) } else { lo })
        }
    }
}
