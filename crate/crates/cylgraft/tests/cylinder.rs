use cylgraft::cylinder::{
    dampen_full, dampen_partial, dampening_report, decay_report, partial_dampening_report, wedge_inner_product, CylinderWindow,
    DecayOptions, FourierHarmonic, Mode, OneFormOnCylinder, Part,
};
use cylgraft::quadrature::{integrate_1d, integrate_cylinder, periodic_mean};
use proptest::prelude::*;
use std::f64::consts::PI;

fn coeff() -> impl Strategy<Value = f64> {
    -1.0f64..1.0
}

fn series(max_n: u32) -> impl Strategy<Value = FourierHarmonic> {
    (coeff(), coeff(), prop::collection::vec((coeff(), coeff(), coeff(), coeff(), any::<bool>()), 1..=max_n as usize)).prop_map(
        |(a0, b0, cs)| {
            let modes = cs
                .into_iter()
                .enumerate()
                .filter(|(i, c)| c.4 || *i == 0)
                .map(|(i, (a, b, c, d, _))| Mode::new(i as u32 + 1, a, b, c, d))
                .collect();
            FourierHarmonic::from_modes(a0, b0, modes).unwrap()
        },
    )
}

fn gradient_energy(h: &FourierHarmonic, x0: f64, x1: f64, part: Part) -> f64 {
    let p = h.part(part);
    let m = 4 * h.n_max() as usize + 4;
    integrate_cylinder(
        |x, y| {
            let (a, b) = p.gradient(x, y);
            a * a + b * b
        },
        x0,
        x1,
        m,
        1e-13,
        0.0,
    )
}

fn l2_by_quadrature(h: &FourierHarmonic, x0: f64, x1: f64, part: Part) -> f64 {
    let p = h.part(part);
    let m = 4 * h.n_max() as usize + 4;
    integrate_cylinder(|x, y| p.value(x, y).powi(2), x0, x1, m, 1e-13, 0.0)
}

#[test]
fn single_mode_energy_closed_form() {
    // h = cos(2πy) e^{-2πx}: |dh|² = 4π² e^{-4πx}, so E over [-l, l] is π(e^{4πl} - e^{-4πl})
    for l in [0.1, 0.5, 1.0, 2.0] {
        let h = FourierHarmonic::single(1, 1.0, 0.0, 0.0, 0.0).unwrap();
        let e = h.energy(-l, l, Part::Full).unwrap();
        let exact = PI * ((4.0 * PI * l).exp() - (-4.0 * PI * l).exp());
        assert!(((e - exact) / exact).abs() < 1e-14, "l = {l}: {e} vs {exact}");
    }
}

#[test]
fn linear_energy_is_length_times_slope_squared() {
    let h = FourierHarmonic::linear(0.3, -1.5);
    assert!((h.energy(-0.7, 1.1, Part::Full).unwrap() - 2.25 * 1.8).abs() < 1e-15);
    assert_eq!(h.energy(-0.7, 1.1, Part::Nonlinear).unwrap(), 0.0);
}

#[test]
fn energy_rejects_empty_interval() {
    let h = FourierHarmonic::linear(0.0, 1.0);
    assert!(h.energy(1.0, 1.0, Part::Full).is_err());
    assert!(h.l2_sq(1.0, 0.0, Part::Full).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn closed_form_energy_matches_quadrature(h in series(8), l in 0.1f64..2.0) {
        for part in [Part::Full, Part::Minus, Part::Plus, Part::Nonlinear] {
            let closed = h.energy(-l, l, part).unwrap();
            let quad = gradient_energy(&h, -l, l, part);
            prop_assert!((closed - quad).abs() <= 1e-10 * closed.max(1e-300), "{part:?}: {closed} vs {quad}");
        }
    }

    #[test]
    fn closed_form_l2_matches_quadrature(h in series(6), x0 in -1.5f64..0.0, w in 0.1f64..1.5) {
        for part in [Part::Full, Part::Minus, Part::Plus] {
            let closed = h.l2_sq(x0, x0 + w, part).unwrap();
            let quad = l2_by_quadrature(&h, x0, x0 + w, part);
            prop_assert!((closed - quad).abs() <= 1e-10 * closed.abs().max(1e-12), "{part:?}: {closed} vs {quad}");
        }
    }

    #[test]
    fn slice_energy_is_the_y_mean_of_the_gradient(h in series(8), x in -2.0f64..2.0) {
        let m = 4 * h.n_max() as usize + 4;
        let mean = periodic_mean(|y| { let (a, b) = h.gradient(x, y); a * a + b * b }, m);
        prop_assert!((h.slice_energy(x) - mean).abs() <= 1e-12 * mean.max(1e-300));
    }

    #[test]
    fn energy_is_additive_over_slabs(h in series(8), l in 0.2f64..2.0, t in 0.05f64..0.95) {
        let cut = -l + 2.0 * l * t;
        let whole = h.energy(-l, l, Part::Full).unwrap();
        let split = h.energy(-l, cut, Part::Full).unwrap() + h.energy(cut, l, Part::Full).unwrap();
        prop_assert!((whole - split).abs() <= 1e-12 * whole);
    }

    #[test]
    fn l2_and_interior_decay_hold(h in series(8), l in 0.1f64..2.0, dl in 0.0f64..0.95, dr in 0.0f64..0.95) {
        let w = CylinderWindow::new(l, dl * l, dr * l).unwrap();
        let rep = decay_report(&h, &w, DecayOptions { pointwise: false, grid: 2 }).unwrap();
        prop_assert!(rep.all_hold(), "{:?}", rep.records.iter().filter(|r| !r.holds()).collect::<Vec<_>>());
    }

    #[test]
    fn pointwise_decay_holds_on_grid(h in series(8), l in 1.0f64..2.0, dl in 0.5f64..0.95, dr in 0.5f64..0.95) {
        let w = CylinderWindow::new(l, dl.min(0.95 * l), dr.min(0.95 * l)).unwrap();
        let rep = decay_report(&h, &w, DecayOptions { pointwise: true, grid: 64 }).unwrap();
        prop_assert!(rep.get("nonlinear.pointwise-gradient").is_some());
        prop_assert!(rep.all_hold(), "{:?}", rep.records.iter().filter(|r| !r.holds()).collect::<Vec<_>>());
    }

    #[test]
    fn wedge_inner_product_polarizes_the_energy(
        g in series(6), h in series(6), b in coeff(), c in coeff(), l in 0.1f64..1.5,
    ) {
        let om = OneFormOnCylinder::from_harmonic(&g, b);
        let et = OneFormOnCylinder::from_harmonic(&h, c);
        // ω ± η through the series coefficients: the form is linear in them
        let combine = |s: f64| {
            let n = g.n_max().max(h.n_max());
            let modes = (1..=n).filter_map(|k| {
                let p = g.modes().iter().find(|m| m.n == k);
                let q = h.modes().iter().find(|m| m.n == k);
                if p.is_none() && q.is_none() { return None; }
                let z = Mode::new(k, 0.0, 0.0, 0.0, 0.0);
                let (p, q) = (p.copied().unwrap_or(z), q.copied().unwrap_or(z));
                Some(Mode::new(k, p.a + s * q.a, p.b + s * q.b, p.c + s * q.c, p.d + s * q.d))
            }).collect();
            let nl = FourierHarmonic::new(0.0, 0.0, modes, n).unwrap();
            OneFormOnCylinder::new(g.b0() + s * h.b0(), b + s * c, nl).unwrap()
        };
        let plus = combine(1.0).energy(-l, l).unwrap();
        let minus = combine(-1.0).energy(-l, l).unwrap();
        let ip = wedge_inner_product(&om, &et, -l, l).unwrap();
        let scale = om.energy(-l, l).unwrap() + et.energy(-l, l).unwrap();
        prop_assert!((ip - 0.25 * (plus - minus)).abs() <= 1e-12 * scale);
    }
}

/// 2D quadrature of the cut-off form directly from its pointwise components.
fn piecewise_energy_2d(pf: &cylgraft::cylinder::PiecewiseForm, breaks: &[f64], m: usize) -> f64 {
    let mut total = 0.0;
    for w in breaks.windows(2) {
        total += integrate_1d(
            |x| {
                periodic_mean(
                    |y| {
                        let (a, b) = pf.components(x, y, true);
                        a * a + b * b
                    },
                    m,
                )
            },
            w[0],
            w[1],
            1e-13,
            0.0,
        );
    }
    total
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn dampened_energy_matches_pointwise_quadrature(
        h in series(6), c0 in coeff(), l in 0.3f64..2.0, dl in 0.05f64..0.9, dr in 0.05f64..0.9,
    ) {
        let w = CylinderWindow::new(l, dl * l, dr * l).unwrap();
        let om = OneFormOnCylinder::from_harmonic(&h, c0);
        let pf = dampen_full(&om, &w).unwrap();
        let (xa, xb) = w.interior();
        let m = 4 * h.n_max() as usize + 4;
        let oracle = piecewise_energy_2d(&pf, &[-l, xa, xb, l], m);
        let e = pf.energy();
        prop_assert!((e - oracle).abs() <= 1e-9 * oracle, "{e} vs {oracle}");
        // the excess is the same difference, computed without cancellation
        let excess = pf.energy_excess();
        let base = om.energy(-l, l).unwrap();
        prop_assert!((base + excess - oracle).abs() <= 1e-9 * oracle);
    }

    #[test]
    fn full_dampening_bounds_hold(h in series(8), c0 in coeff(), l in 0.1f64..2.0, dl in 0.0f64..0.95, dr in 0.0f64..0.95) {
        let w = CylinderWindow::new(l, dl * l, dr * l).unwrap();
        let rep = dampening_report(&OneFormOnCylinder::from_harmonic(&h, c0), &w).unwrap();
        prop_assert!(rep.all_hold(), "{:?}", rep.records.iter().filter(|r| !r.holds()).collect::<Vec<_>>());
    }

    #[test]
    fn partial_dampening_bound_holds(h in series(8), c0 in coeff(), l in 1.0f64..2.0) {
        let rep = partial_dampening_report(&OneFormOnCylinder::from_harmonic(&h, c0), l).unwrap();
        prop_assert!(rep.all_hold(), "{:?}", rep.records);
    }
}

#[test]
fn dampening_leaves_the_form_outside_the_ramp() {
    let h = FourierHarmonic::from_modes(0.0, 0.4, vec![Mode::new(1, 0.5, -0.2, 0.3, 0.1), Mode::new(3, 0.0, 0.7, -0.4, 0.0)]).unwrap();
    let om = OneFormOnCylinder::from_harmonic(&h, 0.25);
    let w = CylinderWindow::new(1.5, 0.5, 0.75).unwrap();
    let pf = dampen_full(&om, &w).unwrap();
    let (xa, xb) = w.interior();
    for (x, y) in [(-1.4, 0.1), (xa - 1e-3, 0.7)] {
        let (a, b) = pf.components(x, y, true);
        let (p, q) = om.components(x, y);
        assert!((a - p).abs() < 1e-14 && (b - q).abs() < 1e-14);
    }
    // past the ramp only the linear part is left
    let (a, b) = pf.components(xb + 1e-3, 0.3, true);
    assert!((a - 0.4).abs() < 1e-14 && (b - 0.25).abs() < 1e-14);
}

#[test]
fn partial_dampening_needs_unit_length() {
    let om = OneFormOnCylinder::from_harmonic(&FourierHarmonic::single(1, 1.0, 0.0, 1.0, 0.0).unwrap(), 0.0);
    assert!(dampen_partial(&om, 0.99).is_err());
    assert!(partial_dampening_report(&om, 0.5).is_err());
}

#[test]
fn pointwise_preconditions_are_enforced() {
    let h = FourierHarmonic::single(2, 1.0, 0.0, 0.0, 1.0).unwrap();
    let short = CylinderWindow::new(0.8, 0.5, 0.2).unwrap();
    assert!(decay_report(&h, &short, DecayOptions::default()).is_err());
    let thin_end = CylinderWindow::new(1.5, 0.4, 0.6).unwrap();
    assert!(decay_report(&h, &thin_end, DecayOptions::default()).is_err());
}

#[test]
fn pure_decaying_mode_saturates_the_interior_bound() {
    // for a single decaying mode the interior energy bound is an equality when the
    // interior piece runs to the right end
    let h = FourierHarmonic::single(1, 1.0, 0.0, 0.0, 0.0).unwrap();
    let w = CylinderWindow::new(1.0, 0.5, 0.0).unwrap();
    let rep = decay_report(&h, &w, DecayOptions { pointwise: false, grid: 2 }).unwrap();
    let r = rep.get("minus.interior-energy").unwrap();
    assert!(r.lhs <= r.rhs && (r.lhs / r.rhs) > 1.0 - 1e-6);
}
