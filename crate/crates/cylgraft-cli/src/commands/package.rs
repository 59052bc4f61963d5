//! `package-fit`: limit packages, the assembled family `P(λ)` and its symplecticity.

use super::sweep::sweep_samples;
use super::Context;
use crate::config::{PackageFitConfig, ToyPackage};
use crate::output::{fmt_f64, Output, Table};
use crate::report::{Record, Report};
use crate::CliError;
use cylgraft::family::FamilySample;
use cylgraft::package::{extract_package, symplectic_defect, symplectic_residual, LimitPackage, SymplecticReport};
use nalgebra::Matrix2;

/// Residual allowed for the exactly symplectic toy package.
pub const TOY_TOL: f64 = 1e-13;
/// Relative spread of the extracted residual over `λ`.
pub const SPREAD_TOL: f64 = 1e-10;
/// Required reduction of the extracted residual under one refinement.
pub const REFINEMENT_GAIN: f64 = 2.0;

const ANCHOR: &str = "package.symplectic-family";

/// Genus-2 package with `P(λ) = Mᵀ diag(1/λ, λ, Q) M`, where
/// `M = [[1, a, b, c], [0, 1, 0, 0], [0, c, 1, 0], [0, -b, 0, 1]]` is symplectic and
/// `Q` has determinant 1, so every `P(λ)` is symplectic.
pub fn toy_package(t: &ToyPackage) -> Result<LimitPackage, CliError> {
    let [a, b, c] = t.kappa;
    let q2 = Matrix2::new(t.block[0][0], t.block[0][1], t.block[1][0], t.block[1][1]);
    if q2[(0, 1)] != q2[(1, 0)] || !(q2[(0, 0)] > 0.0) || (q2.determinant() - 1.0).abs() > 1e-12 {
        return Err(CliError::Config("toy block must be symmetric positive definite with determinant 1".into()));
    }
    // rows 3 and 4 of M
    let w = [[0.0, c, 1.0, 0.0], [0.0, -b, 0.0, 1.0]];
    let mut q = vec![vec![0.0; 4]; 4];
    for i in 1..4 {
        for j in 1..4 {
            let mut s = 0.0;
            for k in 0..2 {
                for l in 0..2 {
                    s += w[k][i] * q2[(k, l)] * w[l][j];
                }
            }
            q[i][j] = s;
        }
    }
    let pi22 = q[1][1];
    q[1][1] = 0.0;
    Ok(LimitPackage { g: 2, m: 0.0, kappa: vec![1.0, a, b, c], pi22, q })
}

struct Extracted {
    l: f64,
    steps: usize,
    package: LimitPackage,
    symplectic: SymplecticReport,
    defect: f64,
}

fn extract_all(samples: &[FamilySample], steps: usize, lambdas: &[f64]) -> Result<Vec<Extracted>, CliError> {
    samples
        .iter()
        .map(|s| {
            let p = s.p_matrix();
            let package = extract_package(&p, s.l).map_err(|e| CliError::Run(e.to_string()))?;
            let symplectic = symplectic_residual(&package, lambdas).map_err(|e| CliError::Run(e.to_string()))?;
            Ok(Extracted { l: s.l, steps, package, symplectic, defect: symplectic_defect(&p) })
        })
        .collect()
}

fn complete(run: &super::SweepRun) -> Result<Vec<FamilySample>, CliError> {
    for (m, r) in run.family.members.iter().zip(&run.results) {
        if let Err(e) = r {
            return Err(CliError::Run(format!("L={}: {e}", m.l)));
        }
    }
    Ok(run.samples())
}

pub fn package_fit(pf: &PackageFitConfig, ctx: &Context) -> Result<Output, CliError> {
    if pf.lambdas.is_empty() || pf.lambdas.iter().any(|l| !(*l > 0.0) || !l.is_finite()) {
        return Err(CliError::Config("package_fit.lambdas must be positive and finite".into()));
    }
    let mut report = Report::new("package-fit", ctx.seed, ctx.tol);
    let toy = toy_package(&pf.toy)?;
    let toy_rep = symplectic_residual(&toy, &pf.lambdas).map_err(|e| CliError::Run(e.to_string()))?;
    report.push(Record::le("package.toy-residual", ANCHOR, toy_rep.max_residual(), TOY_TOL, 0.0).with_note(format!(
        "{} values of lambda in [{:e}, {:e}]",
        pf.lambdas.len(),
        min(&pf.lambdas),
        max(&pf.lambdas)
    )));

    let cfg = pf.family.family(ctx.refine)?;
    let fine_cfg = cfg.refined(2);
    let coarse = extract_all(&complete(&sweep_samples(&cfg, ctx)?)?, cfg.steps_per_unit, &pf.lambdas)?;
    let fine = extract_all(&complete(&sweep_samples(&fine_cfg, ctx)?)?, fine_cfg.steps_per_unit, &pf.lambdas)?;
    for (c, f) in coarse.iter().zip(&fine) {
        report.push(
            Record::le(format!("package.extracted-spread L={}", f.l), ANCHOR, f.symplectic.relative_spread, SPREAD_TOL, 0.0)
                .with_note(format!("{} steps per unit", f.steps)),
        );
        let gain = c.symplectic.max_residual() / f.symplectic.max_residual();
        report.push(Record::le(format!("package.refinement-gain L={}", f.l), ANCHOR, REFINEMENT_GAIN, gain, 0.0).with_note(format!(
            "max residual {:e} at {} steps, {:e} at {} steps",
            c.symplectic.max_residual(),
            c.steps,
            f.symplectic.max_residual(),
            f.steps
        )));
        report.push(
            Record::le(format!("package.sampled-defect L={}", f.l), ANCHOR, f.defect, c.defect, 0.0)
                .informational()
                .with_note("defect of the sampled Gram matrix itself, against the coarser one"),
        );
    }

    let mut pk = Table::new("package.csv", &["L", "steps_per_unit", "quantity", "value"]);
    let mut sy = Table::new("symplectic.csv", &["L", "steps_per_unit", "lambda", "residual"]);
    for e in coarse.iter().chain(&fine) {
        let (l, n) = (fmt_f64(e.l), e.steps.to_string());
        let mut put = |name: String, v: f64| pk.row(vec![l.clone(), n.clone(), name, fmt_f64(v)]);
        put("m".into(), e.package.m);
        put("pi22".into(), e.package.pi22);
        for (k, v) in e.package.kappa.iter().enumerate().skip(1) {
            put(format!("kappa{}", k + 1), *v);
        }
        for i in 1..e.package.size() {
            for j in i..e.package.size() {
                if (i, j) != (1, 1) {
                    put(format!("q{}{}", i + 1, j + 1), e.package.q[i][j]);
                }
            }
        }
        for (lam, r) in e.symplectic.lambdas.iter().zip(&e.symplectic.residuals) {
            sy.row(vec![l.clone(), n.clone(), fmt_f64(*lam), fmt_f64(*r)]);
        }
    }
    let mut tables = vec![pk, sy, Table::plot("symplectic_residual_toy", &toy_rep.lambdas, &toy_rep.residuals)];
    for e in [coarse.last(), fine.last()].into_iter().flatten() {
        tables.push(Table::plot(&format!("symplectic_residual_n{}", e.steps), &e.symplectic.lambdas, &e.symplectic.residuals));
    }
    report.data = serde_json::json!({
        "family": &cfg,
        "toy": &toy,
        "packages": coarse.iter().chain(&fine).map(|e| serde_json::json!({
            "L": e.l, "steps_per_unit": e.steps, "package": &e.package,
            "max_residual": e.symplectic.max_residual(), "relative_spread": e.symplectic.relative_spread,
        })).collect::<Vec<_>>(),
    });
    report.finish();
    Ok(Output { report, tables })
}

fn min(v: &[f64]) -> f64 {
    v.iter().copied().fold(f64::INFINITY, f64::min)
}

fn max(v: &[f64]) -> f64 {
    v.iter().copied().fold(f64::NEG_INFINITY, f64::max)
}
