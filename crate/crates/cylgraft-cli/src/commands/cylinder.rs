//! `cylinder-check`: closed-form energies, decay and dampening bounds on random series.

use super::Context;
use crate::config::{CylinderCheckConfig, Pointwise};
use crate::output::{fmt_f64, Output, Table};
use crate::report::{Record, Report, Tally};
use crate::series::{random_partial_length, random_series, random_window, series_rng};
use crate::CliError;
use cylgraft::cylinder::{
    dampening_report, decay_report, partial_dampening_report, CylinderWindow, DecayOptions, DecayReport, FourierHarmonic,
    OneFormOnCylinder, Part, ROUNDING_FLOOR,
};
use cylgraft::quadrature::integrate_cylinder;
use rand::Rng;
use rayon::prelude::*;
use std::collections::BTreeMap;
use std::f64::consts::PI;

const DECAY_SUITE: u32 = 1;
const DAMPENING_SUITE: u32 = 2;
const PARTIAL_SUITE: u32 = 3;

const ANCHOR_ENERGY: &str = "cylinder.closed-form-energy";
const ANCHOR_DECAY: &str = "cylinder.decay";
const ANCHOR_DAMPENING: &str = "cylinder.full-dampening";
const ANCHOR_PARTIAL: &str = "cylinder.partial-dampening";

struct DecayOutcome {
    window: CylinderWindow,
    n_max: u32,
    closed: f64,
    quadrature: f64,
    report: DecayReport,
}

/// `∫ |dh|²` over the whole window by 2D quadrature.
pub fn quadrature_energy(h: &FourierHarmonic, x0: f64, x1: f64) -> f64 {
    let m = 4 * h.n_max() as usize + 4;
    integrate_cylinder(
        |x, y| {
            let (a, b) = h.gradient(x, y);
            a * a + b * b
        },
        x0,
        x1,
        m,
        1e-13,
        0.0,
    )
}

fn pointwise_applies(cfg: &CylinderCheckConfig, w: &CylinderWindow) -> bool {
    match cfg.pointwise {
        Pointwise::Off => false,
        Pointwise::On => true,
        Pointwise::Auto => w.l() >= 1.0 && w.delta() >= 0.5,
    }
}

fn tally(tallies: &mut BTreeMap<String, Tally>, anchor: &str, index: usize, rep: &DecayReport) {
    for r in &rep.records {
        let t = tallies.entry(r.part.clone()).or_insert_with(|| Tally::new(r.part.clone(), anchor).with_rel_floor(ROUNDING_FLOOR));
        t.add(index, r.lhs, r.rhs, r.holds());
    }
}

fn emit(report: &mut Report, tallies: BTreeMap<String, Tally>, informational: &[&str]) {
    for (name, t) in tallies {
        let rec = t.record();
        report.push(if informational.iter().any(|s| name.ends_with(s)) { rec.informational() } else { rec });
    }
}

fn to_run(e: cylgraft::Error) -> CliError {
    CliError::Run(e.to_string())
}

pub fn cylinder_check(cfg: &CylinderCheckConfig, ctx: &Context) -> Result<Output, CliError> {
    cfg.validate()?;
    let mut report = Report::new("cylinder-check", ctx.seed, ctx.tol);
    let mut tables = Vec::new();

    // closed form of a single decaying mode of order one
    let l1 = cfg.l.unwrap_or(cfg.l_max);
    let single = FourierHarmonic::single(1, 1.0, 0.0, 0.0, 0.0).map_err(to_run)?;
    let e = single.energy(-l1, l1, Part::Minus).map_err(to_run)?;
    let exact = PI * ((4.0 * PI * l1).exp() - (-4.0 * PI * l1).exp());
    report.push(Record::le("energy.single-mode", ANCHOR_ENERGY, ((e - exact) / exact).abs(), 1e-13, 0.0).with_note(format!("l = {l1}")));

    let decay: Vec<DecayOutcome> = (0..cfg.series)
        .into_par_iter()
        .map(|i| {
            let mut rng = series_rng(ctx.seed, DECAY_SUITE, i);
            let h = random_series(&mut rng, cfg.n_max);
            let w = random_window(&mut rng, cfg);
            let opts = DecayOptions { pointwise: pointwise_applies(cfg, &w), grid: cfg.grid };
            let report = decay_report(&h, &w, opts).map_err(|e| CliError::Run(format!("series {i}: {e}")))?;
            let closed = h.energy(-w.l(), w.l(), Part::Full).map_err(to_run)?;
            let quadrature = quadrature_energy(&h, -w.l(), w.l());
            Ok(DecayOutcome { window: w, n_max: h.n_max(), closed, quadrature, report })
        })
        .collect::<Result<_, CliError>>()?;

    let mut energy = Tally::new("energy.quadrature-agreement", ANCHOR_ENERGY);
    let mut tallies = BTreeMap::new();
    let mut series_table = Table::new(
        "cylinder_series.csv",
        &["series", "l", "delta_l", "delta_r", "n_max", "energy_closed", "energy_quadrature", "relative_error", "max_decay_ratio"],
    );
    for (i, d) in decay.iter().enumerate() {
        let rel = ((d.closed - d.quadrature) / d.closed).abs();
        energy.add(i, rel, cfg.quadrature_tol, rel <= cfg.quadrature_tol);
        tally(&mut tallies, ANCHOR_DECAY, i, &d.report);
        series_table.row(vec![
            i.to_string(),
            fmt_f64(d.window.l()),
            fmt_f64(d.window.delta_l()),
            fmt_f64(d.window.delta_r()),
            d.n_max.to_string(),
            fmt_f64(d.closed),
            fmt_f64(d.quadrature),
            fmt_f64(rel),
            fmt_f64(d.report.max_ratio()),
        ]);
    }
    let mut energy_rec = energy.record();
    // the tally divides by the tolerance, so report the tolerance itself as the bound
    energy_rec.lhs *= cfg.quadrature_tol;
    energy_rec.rhs = cfg.quadrature_tol;
    energy_rec.margin = energy_rec.rhs - energy_rec.lhs;
    report.push(energy_rec);
    emit(&mut report, tallies, &[]);
    let pointwise_count = decay.iter().filter(|d| d.report.get("minus.pointwise-value").is_some()).count();
    tables.push(series_table);
    tables.push(Table::plot(
        "decay_ratio",
        &decay.iter().map(|d| d.window.l()).collect::<Vec<_>>(),
        &decay.iter().map(|d| d.report.max_ratio()).collect::<Vec<_>>(),
    ));

    let mut data = serde_json::json!({
        "series": cfg.series,
        "pointwise_windows": pointwise_count,
    });

    if cfg.dampening {
        let full: Vec<DecayReport> = (0..cfg.series)
            .into_par_iter()
            .map(|i| {
                let mut rng = series_rng(ctx.seed, DAMPENING_SUITE, i);
                let h = random_series(&mut rng, cfg.n_max);
                let w = random_window(&mut rng, cfg);
                let c0 = rng.random_range(-1.0..=1.0);
                dampening_report(&OneFormOnCylinder::from_harmonic(&h, c0), &w).map_err(|e| CliError::Run(format!("series {i}: {e}")))
            })
            .collect::<Result<_, CliError>>()?;
        let mut t = BTreeMap::new();
        for (i, r) in full.iter().enumerate() {
            tally(&mut t, ANCHOR_DAMPENING, i, r);
        }
        emit(&mut report, t, &["-sharp"]);

        let partial: Vec<Option<DecayReport>> = (0..cfg.series)
            .into_par_iter()
            .map(|i| {
                let mut rng = series_rng(ctx.seed, PARTIAL_SUITE, i);
                let h = random_series(&mut rng, cfg.n_max);
                let Some(l) = random_partial_length(&mut rng, cfg) else { return Ok(None) };
                let c0 = rng.random_range(-1.0..=1.0);
                partial_dampening_report(&OneFormOnCylinder::from_harmonic(&h, c0), l)
                    .map(Some)
                    .map_err(|e| CliError::Run(format!("series {i}: {e}")))
            })
            .collect::<Result<_, CliError>>()?;
        let mut t = BTreeMap::new();
        for (i, r) in partial.iter().enumerate() {
            if let Some(r) = r {
                tally(&mut t, ANCHOR_PARTIAL, i, r);
            }
        }
        if t.is_empty() {
            report.push(Record::holds("plus-only.cutoff-total", ANCHOR_PARTIAL, true).informational().with_note("skipped: needs l >= 1"));
        }
        emit(&mut report, t, &[]);
        data["dampening_series"] = serde_json::json!(cfg.series);
    }
    report.data = data;
    report.finish();
    Ok(Output { report, tables })
}
