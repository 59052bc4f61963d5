use cylgraft::cochain::{wedge, Cochain1};
use cylgraft::family::change_basis;
use cylgraft::harmonic::{dirichlet_capacity, gram_matrix, harmonic_dual_basis, harmonic_projection, harmonicity_residual, wedge_matrix};
use cylgraft::homology::{homology_basis, j_matrix, Pins};
use cylgraft::mesh::{build_flat_cylinder, cylinder_builder, rectangle_torus, SurfaceMesh};
use cylgraft::solver::{pcg, ReducedLaplacian, SolverOptions};
use cylgraft::Error;
use nalgebra::DMatrix;
use nalgebra_sparse::{CooMatrix, CsrMatrix};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn opts() -> SolverOptions {
    SolverOptions::with_tol(1e-13)
}

fn torus_pins(m: &SurfaceMesh) -> Pins {
    Pins::none().pair(0, Some(m.path_chain("x-loop").unwrap()), Some(m.path_chain("y-loop").unwrap()))
}

#[test]
fn rectangle_torus_gram_is_diagonal() {
    // [0, a] x [0, 1]: the dual of the x-loop is dx/a with energy 1/a, the dual of the
    // y-loop is dy with energy a
    for a in [1.0, 2.0, 4.0] {
        let m = rectangle_torus(a, 64, 64).unwrap();
        let hb = homology_basis(&m, &torus_pins(&m)).unwrap();
        let h = harmonic_dual_basis(&m, &hb, &opts()).unwrap();
        let want = DMatrix::from_row_slice(2, 2, &[1.0 / a, 0.0, 0.0, a]);
        let err = (&h.gram - want).abs().max();
        assert!(err <= 1e-8, "a = {a}: P = {}", h.gram);
        let (w, rounding) = wedge_matrix(&m, &hb.duals);
        assert_eq!(w, j_matrix(1));
        assert!(rounding < 1e-9);
    }
}

#[test]
fn torus_mesh_counts() {
    let (nx, ny) = (7, 5);
    let m = rectangle_torus(1.5, nx, ny).unwrap();
    assert_eq!(m.n_vertices(), nx * ny);
    assert_eq!(m.n_edges(), 2 * nx * ny);
    assert_eq!(m.n_faces(), nx * ny);
    assert_eq!(m.euler_characteristic(), 0);
    assert_eq!(m.genus(), 1);
    assert!(m.is_closed());
    assert!(m.boundary_loops().is_empty());
}

#[test]
fn flat_cylinder_counts_and_capacity() {
    // the linear potential is discrete harmonic on rectangles, so the capacity is exact
    for (modulus, around, along) in [(0.5, 8, 4), (1.0, 12, 16), (3.0, 16, 48)] {
        let m = build_flat_cylinder(modulus, around, along).unwrap();
        assert_eq!(m.n_vertices(), around * (along + 1));
        assert_eq!(m.n_edges(), around * along + around * (along + 1));
        assert_eq!(m.n_faces(), around * along);
        assert!(!m.is_closed());
        assert_eq!(m.boundary_loops().len(), 2);
        let c = dirichlet_capacity(&m, &opts()).unwrap();
        assert!((c.capacity - 1.0 / modulus).abs() <= 1e-12 / modulus, "modulus {modulus}: {}", c.capacity);
    }
}

#[test]
fn capacity_needs_two_boundary_loops() {
    let m = rectangle_torus(1.0, 4, 4).unwrap();
    assert!(matches!(dirichlet_capacity(&m, &opts()), Err(Error::BoundaryCountError(0))));
}

#[test]
fn gluing_loops_of_different_length_fails() {
    let mut b = cylinder_builder(1.0, 1.0, 8, 2, "a").unwrap().prefixed("a-");
    b.append(cylinder_builder(1.0, 1.0, 12, 2, "b").unwrap().prefixed("b-")).unwrap();
    assert!(matches!(b.glue("a-right", "b-left", 0), Err(Error::GluingMismatch(_))));
    assert!(matches!(b.glue("a-right", "a-right", 0), Err(Error::GluingMismatch(_))));
    assert!(matches!(b.glue("a-right", "nowhere", 0), Err(Error::GluingMismatch(_))));
}

#[test]
fn name_collisions_are_rejected() {
    let mut b = cylinder_builder(1.0, 1.0, 8, 2, "a").unwrap();
    assert!(b.append(cylinder_builder(1.0, 1.0, 8, 2, "b").unwrap()).is_err());
}

#[test]
fn coarse_meshes_are_rejected() {
    assert!(matches!(rectangle_torus(1.0, 2, 8), Err(Error::ResolutionError(_))));
    assert!(matches!(build_flat_cylinder(1.0, 4, 4), Err(Error::ResolutionError(_))));
    assert!(cylinder_builder(1.0, -1.0, 8, 2, "x").is_err());
}

#[test]
fn text_form_round_trips() {
    let m = rectangle_torus(2.0, 6, 5).unwrap();
    let text = m.to_text();
    let back = SurfaceMesh::from_text(&text).unwrap();
    assert_eq!(back.to_text(), text);
    assert_eq!(back.n_edges(), m.n_edges());
    assert!(matches!(SurfaceMesh::from_text("not a mesh"), Err(Error::Parse(_))));
    let truncated: String = text.lines().take(10).map(|l| format!("{l}\n")).collect();
    assert!(matches!(SurfaceMesh::from_text(&truncated), Err(Error::Parse(_))));
}

#[test]
fn projection_removes_exact_forms() {
    let m = rectangle_torus(1.0, 8, 8).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let f: Vec<f64> = (0..m.n_vertices()).map(|_| rng.random_range(-1.0..1.0)).collect();
    let df = Cochain1::exact(&m, &f);
    assert!(df.closedness_defect(&m) < 1e-14);
    let lap = ReducedLaplacian::new(&m, &[0]);
    let (h, _) = harmonic_projection(&m, &lap, &df, &opts()).unwrap();
    assert!(h.l2_norm() < 1e-10 * df.l2_norm());
}

#[test]
fn basis_change_matches_a_fresh_solve() {
    // α'₁ = α₁, α'₂ = α₁ + α₂; the Gram matrix of the new duals is A⁻ᵀ P A⁻¹
    let m = rectangle_torus(2.0, 16, 12).unwrap();
    let x = m.path_chain("x-loop").unwrap();
    let y = m.path_chain("y-loop").unwrap();
    let hb = homology_basis(&m, &torus_pins(&m)).unwrap();
    let p = harmonic_dual_basis(&m, &hb, &opts()).unwrap().gram;
    let sum: Vec<i64> = x.iter().zip(&y).map(|(a, b)| a + b).collect();
    let hb2 = homology_basis(&m, &Pins::none().pair(0, Some(x), Some(sum))).unwrap();
    assert_eq!(hb2.intersection, j_matrix(1));
    let p2 = harmonic_dual_basis(&m, &hb2, &opts()).unwrap().gram;
    let a = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 1.0, 1.0]);
    let predicted = change_basis(&p, &a).unwrap();
    assert!((predicted - &p2).abs().max() < 1e-10, "{p2}");
    assert!(change_basis(&p, &DMatrix::zeros(2, 2)).is_err());
}

#[test]
fn duals_are_closed_harmonic_and_minimal() {
    let m = rectangle_torus(1.5, 12, 10).unwrap();
    let hb = homology_basis(&m, &torus_pins(&m)).unwrap();
    let h = harmonic_dual_basis(&m, &hb, &opts()).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for (k, s) in h.forms.iter().enumerate() {
        assert!(s.closedness_defect(&m) < 1e-12);
        assert!(harmonicity_residual(&m, s) < 1e-9);
        for (i, c) in hb.cycles.iter().enumerate() {
            let want = if i == k { 1.0 } else { 0.0 };
            assert!((s.pair(c) - want).abs() < 1e-12);
        }
        // adding an exact form cannot lower the energy
        let f: Vec<f64> = (0..m.n_vertices()).map(|_| rng.random_range(-0.1..0.1)).collect();
        let mut t = s.clone();
        t.axpy(1.0, &Cochain1::exact(&m, &f));
        assert!(t.energy(&m) >= s.energy(&m));
    }
    let g = gram_matrix(&m, &h.forms).unwrap();
    assert!((g - &h.gram).abs().max() < 1e-14);
    // the wedge pairing of the harmonic forms is the same integer matrix
    let w = wedge(&m, &h.forms[0], &h.forms[1]);
    assert!((w - 1.0).abs() < 1e-9);
}

fn random_spd(n: usize, seed: u64) -> (CsrMatrix<f64>, DMatrix<f64>) {
    // weighted path-plus-chords graph Laplacian with a positive diagonal shift
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut dense = DMatrix::<f64>::zeros(n, n);
    let mut add = |i: usize, j: usize, w: f64| {
        dense[(i, i)] += w;
        dense[(j, j)] += w;
        dense[(i, j)] -= w;
        dense[(j, i)] -= w;
    };
    for i in 0..n - 1 {
        add(i, i + 1, rng.random_range(0.1..2.0));
    }
    for _ in 0..n {
        let (i, j) = (rng.random_range(0..n), rng.random_range(0..n));
        if i != j {
            add(i, j, rng.random_range(0.1..2.0));
        }
    }
    for i in 0..n {
        dense[(i, i)] += rng.random_range(0.01..0.5);
    }
    let mut coo = CooMatrix::new(n, n);
    for i in 0..n {
        for j in 0..n {
            if dense[(i, j)] != 0.0 {
                coo.push(i, j, dense[(i, j)]);
            }
        }
    }
    (CsrMatrix::from(&coo), dense)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn pcg_agrees_with_dense_cholesky(n in 2usize..60, seed in any::<u64>()) {
        let (a, dense) = random_spd(n, seed);
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
        let b: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let (x, stats) = pcg(&a, &b, &SolverOptions::with_tol(1e-13)).unwrap();
        let exact = dense.clone().cholesky().unwrap().solve(&nalgebra::DVector::from_vec(b.clone()));
        let err = x.iter().zip(exact.iter()).map(|(p, q)| (p - q).abs()).fold(0.0, f64::max);
        let scale = exact.iter().map(|v| v.abs()).fold(0.0, f64::max);
        prop_assert!(err <= 1e-9 * scale.max(1.0), "err {err}");
        prop_assert!(stats.residual <= 1e-13);
    }

    #[test]
    fn wedge_of_torus_duals_is_j_for_any_shape(a in 0.5f64..4.0, nx in 4usize..12, ny in 4usize..12) {
        let m = rectangle_torus(a, nx, ny).unwrap();
        let hb = homology_basis(&m, &torus_pins(&m)).unwrap();
        prop_assert_eq!(wedge_matrix(&m, &hb.duals).0, j_matrix(1));
        let h = harmonic_dual_basis(&m, &hb, &opts()).unwrap();
        prop_assert!((h.gram[(0, 0)] * h.gram[(1, 1)] - 1.0).abs() < 1e-9);
    }
}

#[test]
fn solver_reports_divergence() {
    let (a, _) = random_spd(200, 3);
    let b = vec![1.0; 200];
    let r = pcg(&a, &b, &SolverOptions { rel_tol: 1e-15, max_iter: Some(2) });
    assert!(matches!(r, Err(Error::SolverDivergence { .. })));
}
