//! `graft-sweep`: period data along a grafting family, with capacity, energy and
//! asymptotic checks.

use super::Context;
use crate::config::SweepConfig;
use crate::output::{fmt_f64, Output, Table};
use crate::report::{Record, Report};
use crate::CliError;
use cylgraft::family::{
    build_family, geometric_energy_bounds, kappa_bound_checks, sample_checks, sample_family, stability_checks, Family, FamilyConfig,
    FamilyMode, FamilySample, MainPart, SampleData, ZETA,
};
use cylgraft::homology::j_matrix;
use cylgraft::package::{fit_asymptotics, q_stability, RateReport};
use std::f64::consts::PI;

/// Moduli below this are outside the asymptotic regime and only reported.
pub const ASYMPTOTIC_MIN_L: f64 = 4.0;
/// Allowed `|P₁₁(m̂ + L) - 1|`.
pub const P11_TOL: f64 = 1e-3;
/// Multiple of the refinement floor used wherever a floor enters.
pub const FLOOR_FACTOR: f64 = 5.0;

/// A sampled family; failed members keep their error message.
pub struct SweepRun {
    pub family: Family,
    pub results: Vec<Result<SampleData, String>>,
}

impl SweepRun {
    pub fn samples(&self) -> Vec<FamilySample> {
        self.results.iter().filter_map(|r| r.as_ref().ok()).map(|d| d.sample.clone()).collect()
    }

    pub fn complete(&self) -> bool {
        self.results.iter().all(Result::is_ok)
    }
}

pub fn sweep_samples(cfg: &FamilyConfig, ctx: &Context) -> Result<SweepRun, CliError> {
    let family = build_family(cfg).map_err(|e| CliError::Config(e.to_string()))?;
    let results = sample_family(&family, &ctx.solver)
        .map_err(|e| CliError::Run(e.to_string()))?
        .into_iter()
        .map(|r| r.map_err(|e| e.to_string()))
        .collect();
    Ok(SweepRun { family, results })
}

/// The same family at half the resolution, when that resolution is admissible.
pub fn coarse_companion(cfg: &FamilyConfig) -> Option<FamilyConfig> {
    let c = FamilyConfig { steps_per_unit: cfg.steps_per_unit / 2, ..cfg.clone() };
    c.validate().ok().map(|_| c)
}

/// `max |a_k - b_k|`: the change of a quantity between two resolutions.
pub fn refinement_floor(fine: &[f64], coarse: &[f64]) -> f64 {
    fine.iter().zip(coarse).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
}

fn anchor_of(check: &str) -> &'static str {
    if check == "ess.identity" {
        "essential-energy.identity"
    } else if check.starts_with("capacity.") {
        "capacity.sandwich"
    } else {
        "essential-energy.sandwich"
    }
}

fn at(name: &str, l: f64) -> String {
    format!("{name} L={l}")
}

fn sample_records(s: &FamilySample, sc: &SweepConfig, ctx: &Context) -> Result<Vec<Record>, CliError> {
    let mut out = Vec::new();
    for c in sample_checks(s, ctx.tol) {
        out.push(Record::from_check(anchor_of(&c.name), &c).with_name(at(&c.name, s.l)));
    }
    let g = s.p.len() / 2;
    out.push(Record::holds(at("period.wedge-equals-J", s.l), "period.bilinear-relation", s.wedge == j_matrix(g)));
    out.push(Record::le(at("relaxed.tau-orthogonality", s.l), "relaxed-basis.orthogonality", s.tau_orthogonality, 10.0 * ctx.tol, 0.0));
    for c in kappa_bound_checks(&s.p_matrix(), s.ess_energy_tau2).map_err(|e| CliError::Run(e.to_string()))? {
        out.push(Record::from_check("relaxed-basis.kappa-bound", &c).with_name(at(&c.name, s.l)));
    }
    if let MainPart::PureCylinder { gamma } = sc.main_part {
        let exact = 1.0 / (s.l + gamma);
        out.push(
            Record::le(at("oracle.pure-cylinder", s.l), "capacity.pure-cylinder", (s.e_sigma1 - exact).abs(), ctx.tol, 0.0)
                .with_note(format!("E = {:e}, 1/(L + gamma) = {exact:e}", s.e_sigma1)),
        );
    }
    if let Some(b) = &sc.bounds {
        for r in geometric_energy_bounds(s, g, &b.inputs()?).map_err(|e| CliError::Config(e.to_string()))? {
            out.push(Record::from_check("energy-bounds.flat-surrogate", &r.check).with_name(at(&r.check.name, s.l)).with_note(r.label));
        }
    }
    out.push(
        Record::le(at("period.defect", s.l), "period.dual-basis", s.period_defect, ctx.tol, 0.0)
            .informational()
            .with_note("largest period error of the dual forms"),
    );
    Ok(out)
}

/// Residual and `q` floors, from the change between this resolution and half of it.
pub struct Floors {
    pub residual: f64,
    pub q: f64,
    pub note: String,
}

fn asymptotic_floors(fine: &[FamilySample], coarse: Option<&[FamilySample]>) -> Result<Floors, CliError> {
    let Some(coarse) = coarse else {
        return Ok(Floors { residual: 0.0, q: 0.0, note: "no admissible coarser resolution; floors set to zero".into() });
    };
    let run = |e: cylgraft::Error| CliError::Run(e.to_string());
    let f = fit_asymptotics(fine, 0.0).map_err(run)?;
    let c = fit_asymptotics(coarse, 0.0).map_err(run)?;
    let mut residual: f64 = 0.0;
    for (a, b) in f.entries.iter().zip(&c.entries) {
        residual = residual.max(refinement_floor(&a.residuals, &b.residuals));
    }
    let qf: Vec<f64> = q_stability(fine).map_err(run)?.into_iter().map(|x| x.3).collect();
    let qc: Vec<f64> = q_stability(coarse).map_err(run)?.into_iter().map(|x| x.3).collect();
    Ok(Floors { residual, q: refinement_floor(&qf, &qc), note: "change from half resolution".into() })
}

fn asymptotic_records(rates: &RateReport, fine: &[FamilySample], floors: &Floors) -> Result<Vec<Record>, CliError> {
    let mut out = Vec::new();
    for (l, d) in rates.l.iter().zip(&rates.p11_defect) {
        let r = Record::le(at("asymptotics.p11-scaling", *l), "grafting.asymptotics", *d, P11_TOL, 0.0);
        out.push(if *l >= ASYMPTOTIC_MIN_L { r } else { r.informational().with_note("below the asymptotic range") });
    }
    let q = &rates.reference.q;
    let q_floor = FLOOR_FACTOR * floors.q;
    for (l, i, j, dq) in q_stability(fine).map_err(|e| CliError::Run(e.to_string()))? {
        let c = (q[i][i] * q[j][j]).sqrt();
        let decay = c * (-2.0 * PI * l).exp();
        let r =
            Record::le(format!("asymptotics.q-agreement L={l} ({},{})", i + 1, j + 1), "grafting.asymptotics", dq, decay.max(q_floor), 0.0)
                .with_note(format!("C e^(-2 pi L) = {decay:e}, floor = {q_floor:e}"));
        out.push(if l >= ASYMPTOTIC_MIN_L { r } else { r.informational() });
    }
    let res_floor = FLOOR_FACTOR * floors.residual;
    for e in &rates.entries {
        let rise = e.residuals.windows(2).map(|w| w[1] - w[0]).fold(f64::NEG_INFINITY, f64::max);
        out.push(Record::le(
            format!("asymptotics.residual-monotone ({},{})", e.i + 1, e.j + 1),
            "grafting.asymptotics",
            rise,
            0.0,
            res_floor,
        ));
        let rec = match e.slope {
            Some(s) => Record::le(format!("asymptotics.rate ({},{})", e.i + 1, e.j + 1), "grafting.rates", s, -0.75 * e.expected_rate, 0.0),
            None => Record::holds(format!("asymptotics.rate ({},{})", e.i + 1, e.j + 1), "grafting.rates", true)
                .with_note("all residuals at the floor"),
        };
        out.push(rec.informational());
    }
    out.push(
        Record::le("floor.refinement", "grafting.asymptotics", floors.residual, floors.residual, 0.0)
            .informational()
            .with_note(format!("residual floor {:e}, q floor {:e}; {}", floors.residual, floors.q, floors.note)),
    );
    Ok(out)
}

fn sweep_tables(samples: &[FamilySample]) -> Vec<Table> {
    let mut t = Table::new(
        "sweep.csv",
        &[
            "L",
            "E_sigma1",
            "capacity",
            "gamma",
            "sandwich_lower",
            "sandwich_upper",
            "ess_tau1",
            "inv_E_minus_L",
            "ess_tau2",
            "period_defect",
            "harmonicity_residual",
            "tau_orthogonality",
        ],
    );
    let opt = |v: Option<f64>| v.map(fmt_f64).unwrap_or_default();
    for s in samples {
        let (lo, hi) = match s.gamma {
            Some(g) => (Some(1.0 / (s.l + ZETA * g)), Some(1.0 / (s.l + g))),
            None => (None, None),
        };
        t.row(vec![
            fmt_f64(s.l),
            fmt_f64(s.e_sigma1),
            opt(s.capacity),
            opt(s.gamma),
            opt(lo),
            opt(hi),
            fmt_f64(s.ess_energy_tau1),
            fmt_f64(1.0 / s.e_sigma1 - s.l),
            fmt_f64(s.ess_energy_tau2),
            fmt_f64(s.period_defect),
            fmt_f64(s.max_harmonicity_residual),
            fmt_f64(s.tau_orthogonality),
        ]);
    }
    let mut p = Table::new("period_matrices.csv", &["L", "i", "j", "P"]);
    for s in samples {
        for (i, row) in s.p.iter().enumerate() {
            for (j, v) in row.iter().enumerate() {
                p.row(vec![fmt_f64(s.l), (i + 1).to_string(), (j + 1).to_string(), fmt_f64(*v)]);
            }
        }
    }
    let ls: Vec<f64> = samples.iter().map(|s| s.l).collect();
    let mut out = vec![t, p, Table::plot("e_sigma1", &ls, &samples.iter().map(|s| s.e_sigma1).collect::<Vec<_>>())];
    out.push(Table::plot("ess_tau1", &ls, &samples.iter().map(|s| s.ess_energy_tau1).collect::<Vec<_>>()));
    let caps: Vec<(f64, f64)> = samples.iter().filter_map(|s| s.capacity.map(|c| (s.l, c))).collect();
    if !caps.is_empty() {
        let (x, y): (Vec<f64>, Vec<f64>) = caps.into_iter().unzip();
        out.push(Table::plot("capacity", &x, &y));
    }
    out
}

pub fn graft_sweep(sc: &SweepConfig, ctx: &Context) -> Result<Output, CliError> {
    let cfg = sc.family(ctx.refine)?;
    let run = sweep_samples(&cfg, ctx)?;
    let mut report = Report::new("graft-sweep", ctx.seed, ctx.tol);
    for (m, r) in run.family.members.iter().zip(&run.results) {
        match r {
            Ok(d) => report.extend(sample_records(&d.sample, sc, ctx)?),
            Err(e) => report.push(Record::holds(at("sample.solve", m.l), "family.sample", false).with_note(e.clone())),
        }
    }
    let samples = run.samples();
    report.extend(stability_checks(&samples, 10.0 * ctx.tol).iter().map(|c| Record::from_check("essential-energy.stability", c)));

    let mut rates = None;
    if cfg.mode != FamilyMode::Nonseparating {
        report.push(Record::holds("asymptotics.fit", "grafting.asymptotics", true).informational().with_note("skipped: separating family"));
    } else if samples.len() < 4 {
        report.push(
            Record::holds("asymptotics.fit", "grafting.asymptotics", true)
                .informational()
                .with_note(format!("skipped: the fit needs 4 samples, got {}", samples.len())),
        );
    } else {
        let coarse_run = match coarse_companion(&cfg) {
            Some(c) => Some(sweep_samples(&c, ctx)?),
            None => None,
        };
        let coarse = coarse_run.as_ref().filter(|r| r.complete()).map(SweepRun::samples);
        let floors = asymptotic_floors(&samples, coarse.as_deref())?;
        let r = fit_asymptotics(&samples, FLOOR_FACTOR * floors.residual).map_err(|e| CliError::Run(e.to_string()))?;
        report.extend(asymptotic_records(&r, &samples, &floors)?);
        rates = Some(r);
    }

    let gamma = samples.first().and_then(|s| s.gamma);
    report.data = serde_json::json!({
        "family": &cfg,
        "gamma": gamma,
        "samples": &samples,
        "rates": &rates,
    });
    report.finish();
    let mut tables = sweep_tables(&samples);
    if let Some(r) = &rates {
        tables.push(Table::plot("p11_defect", &r.l, &r.p11_defect));
    }
    Ok(Output { report, tables })
}
