use cylgraft::hyperbolic::{
    capacity_bounds, collar, collar_half_modulus, collar_width, core_dual_energy_bound, cusp_map, decay_constant, decay_constant_squared,
    diagonal_entry_bound, fermi_to_flat, fermi_to_flat_branches, homology_width, inserted_modulus, length_grid, reduced_collar,
    transport_constants, y_piece_dilatation,
};
use cylgraft::Error;
use proptest::prelude::*;
use std::f64::consts::PI;
use std::time::Instant;

#[test]
fn collar_grid_of_ten_thousand_lengths() {
    let start = Instant::now();
    let grid = length_grid(1e-4, 0.5, 10_000).unwrap();
    assert_eq!(grid.len(), 10_000);
    assert_eq!(*grid.last().unwrap(), 0.5);
    for &ell in &grid {
        let q = collar(ell).unwrap();
        for (name, ok) in q.checks() {
            assert!(ok, "{name} fails at ell = {ell}");
        }
        assert!((q.m - (0.5 * q.l + q.d)).abs() <= 1e-12 * q.m, "split at {ell}");
        for (name, ok) in reduced_collar(ell).unwrap().checks().unwrap() {
            assert!(ok, "{name} fails at eps = {ell}");
        }
    }
    assert!(start.elapsed().as_secs_f64() < 1.0, "grid took {:?}", start.elapsed());
}

#[test]
fn flat_coordinate_at_the_collar_edge_is_the_half_modulus() {
    // F(cl) = M: the standard collar maps onto (-M, M) x S^1
    for ell in [1e-3, 0.01, 0.1, 0.3, 0.5, 1.0] {
        let f = fermi_to_flat(ell, collar_width(ell).unwrap()).unwrap();
        let m = collar_half_modulus(ell).unwrap();
        assert!((f - m).abs() <= 1e-12 * m, "ell = {ell}: {f} vs {m}");
    }
}

#[test]
fn inserted_modulus_matches_fermi_distance_of_unit_curve() {
    // the parallel curve of length 1 sits at Fermi distance arccosh(1/ell); the
    // cylinder between the two copies has modulus 2F(ρ₁)
    for ell in [0.05f64, 0.2, 0.5, 0.9] {
        let rho = (1.0 / ell).acosh();
        let direct = 2.0 * fermi_to_flat(ell, rho).unwrap();
        assert!((inserted_modulus(ell).unwrap() - direct).abs() <= 1e-12 * direct);
    }
}

#[test]
fn collar_quantities_are_monotone_under_pinching() {
    let grid = length_grid(1e-3, 0.5, 200).unwrap();
    let qs: Vec<_> = grid.iter().map(|&l| collar(l).unwrap()).collect();
    for w in qs.windows(2) {
        // w[0] has the shorter geodesic
        assert!(w[0].cl > w[1].cl);
        assert!(w[0].m > w[1].m);
        // μ underflows to zero for very short geodesics
        assert!(w[0].mu < w[1].mu || w[1].mu == 0.0);
    }
}

#[test]
fn decay_constant_square_is_consistent() {
    for ell in [0.01, 0.1, 0.25, 0.5] {
        let mu = decay_constant(ell).unwrap();
        let sq = decay_constant_squared(ell).unwrap();
        assert!((mu * mu - sq).abs() <= 1e-14 * sq);
    }
}

#[test]
fn reduced_half_modulus_matches_fermi_image() {
    for eps in [1e-3, 0.05, 0.5, 1.0, 1.9] {
        let r = reduced_collar(eps).unwrap();
        let via = r.m_hat_via_fermi().unwrap();
        assert!((via - r.m_hat).abs() <= 1e-12 * r.m_hat, "eps = {eps}: {via} vs {}", r.m_hat);
        assert!((r.eps_hat - 1.0 / (r.m_hat + 1.0)).abs() < 1e-15);
    }
}

#[test]
fn cusp_neighbourhood_domain() {
    assert_eq!(cusp_map(0.0).unwrap(), 1.0);
    assert!(matches!(cusp_map(-0.7), Err(Error::DomainError(_))));
}

#[test]
fn capacity_bounds_and_inconsistent_geometry() {
    let (lo, hi) = capacity_bounds(4.0, 0.25, 2).unwrap();
    assert!((lo - 1.0 / 16.0).abs() < 1e-16);
    assert!((hi - (4.0 * PI / 16.0).min(1.0)).abs() < 1e-16);
    assert!(matches!(capacity_bounds(100.0, 0.25, 1), Err(Error::DomainError(_))));
    assert!(matches!(capacity_bounds(0.0, 0.25, 2), Err(Error::DomainError(_))));
    // a large ribbon over a short distance would put the lower bound above the upper
    assert!(matches!(capacity_bounds(0.1, 0.25, 2), Err(Error::InconsistentGeometry { .. })));
}

#[test]
fn small_formulas() {
    assert_eq!(y_piece_dilatation(0.0, 0.0).unwrap(), 1.0);
    assert!((y_piece_dilatation(0.5, 0.5).unwrap() - 2.25).abs() < 1e-15);
    assert!(y_piece_dilatation(0.6, 0.0).is_err());
    let (mu, nu, rho) = transport_constants(2.0, 1.0).unwrap();
    assert!((mu - (-4.0 * PI).exp()).abs() < 1e-20);
    // ν = μq/12 + q - 1 cancels the leading 1
    assert!((nu - mu / 12.0).abs() < 1e-15);
    assert!((rho - ((1.0 + mu / 12.0).powi(2) - 1.0)).abs() < 1e-20);
    assert!(transport_constants(1.0, 0.5).is_err());
    assert_eq!(homology_width(2.0, &[0.3, 0.1]).unwrap(), 0.1);
    assert_eq!(homology_width(0.4, &[]).unwrap(), 0.1);
    assert!(homology_width(1.0, &[0.0]).is_err());
    assert!((core_dual_energy_bound(3.0, 2, 0.5).unwrap() - (3.0 + 8.0 * PI)).abs() < 1e-12);
    assert!(length_grid(0.5, 0.1, 10).is_err());
}

proptest! {
    #[test]
    fn three_forms_of_the_flat_coordinate_agree(ell in 1e-3f64..1.0, rho in -8.0f64..8.0) {
        let f = fermi_to_flat(ell, rho).unwrap();
        let (a, b) = fermi_to_flat_branches(ell, rho).unwrap();
        // arccos loses accuracy near ρ = 0, where sech ρ ≈ 1
        let tol = 1e-7 / ell;
        prop_assert!((f - a).abs() <= tol && (f - b).abs() <= tol, "{f} {a} {b}");
    }

    #[test]
    fn diagonal_bound_exceeds_collar_reciprocal(ell in 1e-3f64..1.0) {
        // ℓ/(π - 2 arcsin tanh(ℓ/2)) = 1/(2M(ℓ))
        let b = diagonal_entry_bound(ell).unwrap();
        let m = collar_half_modulus(ell).unwrap();
        prop_assert!((b - 0.5 / m).abs() <= 1e-12 * b);
    }
}
