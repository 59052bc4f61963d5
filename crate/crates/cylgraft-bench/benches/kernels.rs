use criterion::{black_box, criterion_group, criterion_main, Criterion};
use cylgraft::cylinder::{decay_report, CylinderWindow, DecayOptions, FourierHarmonic, Mode, Part};
use cylgraft::harmonic::harmonic_dual_basis;
use cylgraft::homology::{homology_basis, Pins};
use cylgraft::hyperbolic::{collar, length_grid};
use cylgraft::mesh::rectangle_torus;
use cylgraft::solver::SolverOptions;

fn series() -> FourierHarmonic {
    let modes = (1..=8).map(|n| Mode::new(n, 0.3 / n as f64, -0.2, 0.1, 0.05 * n as f64)).collect();
    FourierHarmonic::from_modes(0.5, -0.25, modes).unwrap()
}

fn cylinder(c: &mut Criterion) {
    let h = series();
    c.bench_function("closed_form_energy", |b| b.iter(|| black_box(&h).energy(-2.0, 2.0, Part::Nonlinear).unwrap()));
    let w = CylinderWindow::new(2.0, 0.5, 0.5).unwrap();
    c.bench_function("decay_report", |b| b.iter(|| decay_report(black_box(&h), &w, DecayOptions::default()).unwrap()));
}

fn torus(c: &mut Criterion) {
    let m = rectangle_torus(2.0, 32, 32).unwrap();
    let pins = Pins::none().pair(0, Some(m.path_chain("x-loop").unwrap()), Some(m.path_chain("y-loop").unwrap()));
    let hb = homology_basis(&m, &pins).unwrap();
    let opts = SolverOptions::with_tol(1e-12);
    c.bench_function("torus_32x32_harmonic_duals", |b| b.iter(|| harmonic_dual_basis(&m, &hb, &opts).unwrap()));
}

fn collars(c: &mut Criterion) {
    let grid = length_grid(1e-4, 0.5, 10_000).unwrap();
    c.bench_function("collar_grid_10k", |b| b.iter(|| grid.iter().map(|&l| collar(l).unwrap().m).sum::<f64>()));
}

criterion_group!(benches, cylinder, torus, collars);
criterion_main!(benches);
