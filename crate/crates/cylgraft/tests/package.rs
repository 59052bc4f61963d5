use cylgraft::family::FamilySample;
use cylgraft::homology::j_matrix;
use cylgraft::package::{
    extract_package, fit_asymptotics, q_stability, rate_class, separating_split, symplectic_defect, symplectic_residual, LimitPackage,
};
use cylgraft::Error;
use nalgebra::{DMatrix, Matrix2};
use proptest::prelude::*;
use std::collections::BTreeMap;
use std::f64::consts::PI;

/// `P(λ) = Mᵀ diag(1/λ, λ, Q) M` with
/// `M = [[1, a, b, c], [0, 1, 0, 0], [0, c, 1, 0], [0, -b, 0, 1]]`, which is symplectic
/// for the pairing `J` of a genus-2 basis, and `det Q = 1`.
fn symplectic_family(kappa: [f64; 3], q: Matrix2<f64>, lambda: f64) -> DMatrix<f64> {
    let [a, b, c] = kappa;
    let m = DMatrix::from_row_slice(4, 4, &[1.0, a, b, c, 0.0, 1.0, 0.0, 0.0, 0.0, c, 1.0, 0.0, 0.0, -b, 0.0, 1.0]);
    let mut d = DMatrix::zeros(4, 4);
    d[(0, 0)] = 1.0 / lambda;
    d[(1, 1)] = lambda;
    for i in 0..2 {
        for j in 0..2 {
            d[(i + 2, j + 2)] = q[(i, j)];
        }
    }
    m.transpose() * d * m
}

fn jm(g: usize) -> DMatrix<f64> {
    let j = j_matrix(g);
    DMatrix::from_fn(2 * g, 2 * g, |a, b| j[a][b] as f64)
}

fn unimodular_block() -> impl Strategy<Value = Matrix2<f64>> {
    (0.3f64..3.0, -1.0f64..1.0, 0.3f64..3.0).prop_map(|(x, y, z)| {
        let q = Matrix2::new(x, y, y, z + y * y / x);
        q / q.determinant().sqrt()
    })
}

fn sample_at(l: f64, p: &DMatrix<f64>) -> FamilySample {
    FamilySample {
        l,
        p: (0..p.nrows()).map(|i| (0..p.ncols()).map(|j| p[(i, j)]).collect()).collect(),
        e_sigma1: p[(0, 0)],
        ess_energy_tau1: 0.0,
        ess_energy_tau2: 0.0,
        region_energies: BTreeMap::new(),
        capacity: None,
        gamma: None,
        wedge: j_matrix(p.nrows() / 2),
        wedge_rounding: 0.0,
        period_defect: 0.0,
        max_harmonicity_residual: 0.0,
        tau_orthogonality: 0.0,
        iterations: Vec::new(),
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn test_family_is_symplectic(k in prop::array::uniform3(-1.0f64..1.0), q in unimodular_block(), lam in 0.01f64..100.0) {
        let p = symplectic_family(k, q, lam);
        prop_assert!((&p * jm(2) * &p - jm(2)).abs().max() <= 1e-12 * (1.0 + lam) * (1.0 + 1.0 / lam));
    }

    #[test]
    fn extraction_recovers_the_family(k in prop::array::uniform3(-1.0f64..1.0), q in unimodular_block(), lam0 in 0.05f64..20.0, lam in 0.01f64..100.0) {
        let p0 = symplectic_family(k, q, lam0);
        let pkg = extract_package(&p0, 3.0).unwrap();
        prop_assert!((pkg.m + 3.0 - lam0).abs() <= 1e-12 * lam0);
        prop_assert!((pkg.kappa[1] - k[0]).abs() <= 1e-12 && (pkg.kappa[2] - k[1]).abs() <= 1e-12 && (pkg.kappa[3] - k[2]).abs() <= 1e-12);
        let want = symplectic_family(k, q, lam);
        let got = pkg.assemble(lam).unwrap();
        let scale = want.abs().max();
        prop_assert!((got - want).abs().max() <= 1e-11 * scale);
        prop_assert!(pkg.defect_at(lam).unwrap() <= 1e-11 * (1.0 + lam));
    }

    #[test]
    fn assemble_inverts_extract(seed in prop::collection::vec(-1.0f64..1.0, 16), shift in 0.5f64..3.0, l in 0.1f64..10.0) {
        let a = DMatrix::from_row_slice(4, 4, &seed);
        let p = &a * a.transpose() + DMatrix::identity(4, 4) * shift;
        let pkg = extract_package(&p, l).unwrap();
        let back = pkg.assemble(pkg.m + l).unwrap();
        prop_assert!((back - &p).abs().max() <= 1e-12 * p.abs().max());
    }

    #[test]
    fn laurent_defect_agrees_with_the_dense_one(seed in prop::collection::vec(-1.0f64..1.0, 16), lam in 0.1f64..10.0) {
        let a = DMatrix::from_row_slice(4, 4, &seed);
        let p = &a * a.transpose() + DMatrix::identity(4, 4);
        let pkg = extract_package(&p, 1.0).unwrap();
        let dense = symplectic_defect(&pkg.assemble(lam).unwrap());
        let laurent = pkg.defect_at(lam).unwrap();
        prop_assert!((dense - laurent).abs() <= 1e-11 * dense.max(1.0));
    }

    #[test]
    fn relabeling_permutes_the_assembled_matrix(seed in prop::collection::vec(-1.0f64..1.0, 36), lam in 0.1f64..10.0) {
        let a = DMatrix::from_row_slice(6, 6, &seed);
        let p = &a * a.transpose() + DMatrix::identity(6, 6);
        let pkg = extract_package(&p, 1.0).unwrap();
        let perm = [0, 1, 4, 5, 2, 3];
        let r = pkg.relabeled(&perm).unwrap();
        let (x, y) = (pkg.assemble(lam).unwrap(), r.assemble(lam).unwrap());
        for i in 0..6 {
            for j in 0..6 {
                prop_assert!((y[(i, j)] - x[(perm[i], perm[j])]).abs() <= 1e-14 * x.abs().max());
            }
        }
    }
}

#[test]
fn exactly_symplectic_package_has_zero_residual() {
    // dyadic data: every product in the Laurent coefficients is exact
    let p = symplectic_family([0.5, -0.25, 0.75], Matrix2::new(2.0, 1.0, 1.0, 1.0), 1.0);
    let pkg = extract_package(&p, 0.5).unwrap();
    let lambdas: Vec<f64> = (0..=50).map(|k| 10f64.powf(-2.0 + 0.1 * k as f64)).collect();
    let rep = symplectic_residual(&pkg, &lambdas).unwrap();
    assert!(rep.max_residual() <= 1e-13, "{:?}", rep.residuals);
    assert_eq!(rep.relative_spread, 0.0);
}

#[test]
fn non_symplectic_package_has_a_flat_residual_profile() {
    // q₃₃ doubled: the defect no longer cancels and the λ-independent part dominates
    let p = symplectic_family([0.5, -0.25, 0.75], Matrix2::new(2.0, 1.0, 1.0, 1.0), 1.0);
    let mut pkg = extract_package(&p, 0.5).unwrap();
    pkg.q[2][2] *= 2.0;
    let rep = symplectic_residual(&pkg, &[0.5, 1.0, 7.0]).unwrap();
    assert!(rep.max_residual() > 0.1);
}

#[test]
fn package_input_errors() {
    let p = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
    assert!(matches!(extract_package(&p, 1.0), Err(Error::DegenerateP(_))));
    let p = DMatrix::identity(3, 3);
    assert!(matches!(extract_package(&p, 1.0), Err(Error::DegenerateP(_))));
    let pkg = extract_package(&DMatrix::identity(2, 2), 1.0).unwrap();
    assert!(pkg.assemble(0.0).is_err());
    assert!(pkg.defect_at(f64::INFINITY).is_err());
    assert!(symplectic_residual(&pkg, &[]).is_err());
    assert!(pkg.relabeled(&[1, 0]).is_err());
    let bad = LimitPackage { kappa: vec![2.0, 0.0], ..pkg };
    assert!(bad.validate().is_err());
}

#[test]
fn fitted_rates_of_a_synthetic_family() {
    // P_L = P(m + L) of a fixed package plus perturbations decaying at the expected
    // rates: e^{-πL} on row and column 2, e^{-2πL} elsewhere off row 1
    let p0 = symplectic_family([0.3, -0.2, 0.1], Matrix2::new(1.5, 0.5, 0.5, 5.0 / 6.0), 1.0);
    let pkg = extract_package(&p0, 1.0).unwrap();
    let ls = [1.0, 1.5, 2.0, 2.5, 6.0, 7.0];
    let samples: Vec<FamilySample> = ls
        .iter()
        .map(|&l| {
            let mut p = pkg.assemble(pkg.m + l).unwrap();
            for i in 1..4 {
                for j in 1..4 {
                    p[(i, j)] += 0.5 * (-rate_class(i, j) * l).exp();
                }
            }
            sample_at(l, &p)
        })
        .collect();
    let rep = fit_asymptotics(&samples, 1e-15).unwrap();
    assert!((rep.m_hat - pkg.m).abs() < 1e-12);
    assert!(rep.p11_defect.iter().all(|d| *d < 1e-12));
    for e in rep.entries.iter().filter(|e| e.i > 0) {
        let s = e.slope.unwrap();
        assert!((s / -e.expected_rate - 1.0).abs() < 0.05, "({}, {}): slope {s}", e.i, e.j);
        assert_eq!(e.matches_rate, Some(true));
        assert!(e.monotone);
    }
    let drift = q_stability(&samples).unwrap();
    assert_eq!(drift.len(), 3 * (ls.len() - 1));
    for (l, i, j, d) in drift.iter().filter(|d| d.0 < 3.0) {
        assert!(*d <= 0.5 * (-2.0 * PI * l).exp() + 1e-12, "({i}, {j}) at L = {l}: {d}");
    }
    assert!(matches!(fit_asymptotics(&samples[..3], 0.0), Err(Error::InsufficientSamples { .. })));
}

#[test]
fn split_of_a_block_diagonal_matrix() {
    let mut p = DMatrix::identity(4, 4) * 2.0;
    let limit = DMatrix::identity(2, 2) * 2.0;
    let r = separating_split(&p, 1, &limit, &limit, 3.0).unwrap();
    assert_eq!(r.omega_normalized, 0.0);
    assert_eq!(r.remainder_normalized, 0.0);
    assert!((r.remainder_bound - r.omega_bound * r.omega_bound).abs() < 1e-30);
    p[(0, 3)] = 0.2;
    p[(3, 0)] = 0.2;
    let r = separating_split(&p, 1, &limit, &limit, 3.0).unwrap();
    assert!((r.omega_normalized - 0.1).abs() < 1e-15);
    assert!(separating_split(&p, 2, &limit, &limit, 3.0).is_err());
}
