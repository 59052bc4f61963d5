//! `pinch-verify`: energy decay through the inserted cylinder of a separating family.

use super::sweep::{coarse_companion, refinement_floor, sweep_samples, SweepRun, FLOOR_FACTOR};
use super::Context;
use crate::config::SweepConfig;
use crate::output::{Output, Table};
use crate::report::{Record, Report};
use crate::CliError;
use cylgraft::family::{log_slope, vanishing_profile, DecayProfile, FamilyMode};
use cylgraft::package::separating_split;
use std::f64::consts::PI;

/// Allowed relative deviation of the fitted slope from `-4π`.
pub const SLOPE_WINDOW: f64 = 0.15;

const ANCHOR_FAR: &str = "vanishing.far-side-energy";
const ANCHOR_BEYOND: &str = "vanishing.beyond-cylinder";
const ANCHOR_SPLIT: &str = "vanishing.block-splitting";

fn profiles(run: &SweepRun, form: usize) -> Result<Vec<DecayProfile>, CliError> {
    let mode = run.family.config.mode;
    run.family
        .members
        .iter()
        .zip(&run.results)
        .map(|(m, r)| {
            let d = r.as_ref().map_err(|e| CliError::Run(format!("L={}: {e}", m.l)))?;
            vanishing_profile(m, d, mode, form).map_err(|e| CliError::Run(format!("L={}: {e}", m.l)))
        })
        .collect()
}

pub fn pinch_verify(sc: &SweepConfig, ctx: &Context) -> Result<Output, CliError> {
    if sc.mode != FamilyMode::Separating {
        return Err(CliError::Config(cylgraft::Error::ModeMismatch { expected: "separating" }.to_string()));
    }
    let cfg = sc.family(ctx.refine)?;
    let run = sweep_samples(&cfg, ctx)?;
    let prof = profiles(&run, sc.form)?;
    let coarse = match coarse_companion(&cfg) {
        Some(c) => Some(profiles(&sweep_samples(&c, ctx)?, sc.form)?),
        None => None,
    };
    let beyond: Vec<f64> = prof.iter().map(|p| p.beyond_ratio).collect();
    let far: Vec<f64> = prof.iter().map(|p| p.far_ratio).collect();
    let half: Vec<f64> = prof.iter().map(|p| p.half_modulus).collect();
    let (floor_beyond, floor_note) = match &coarse {
        Some(c) => {
            let cb: Vec<f64> = c.iter().map(|p| p.beyond_ratio).collect();
            (FLOOR_FACTOR * refinement_floor(&beyond, &cb), "5x change from half resolution")
        }
        None => (0.0, "no admissible coarser resolution"),
    };
    let floor_far = coarse.as_ref().map(|c| refinement_floor(&far, &c.iter().map(|p| p.far_ratio).collect::<Vec<_>>())).unwrap_or(0.0);

    let mut report = Report::new("pinch-verify", ctx.seed, ctx.tol);
    for w in prof.windows(2) {
        let mut r = Record::le(format!("vanishing.far-ratio-decreasing L={}", w[1].l), ANCHOR_FAR, w[1].far_ratio, w[0].far_ratio, 0.0)
            .with_note(format!("strict decrease from L={}", w[0].l));
        r.pass = w[1].far_ratio < w[0].far_ratio;
        report.push(r);
    }
    if prof.len() >= 2 {
        let slope = log_slope(&half, &far).map_err(|e| CliError::Run(e.to_string()))?;
        report.push(
            Record::le("vanishing.log-slope", ANCHOR_FAR, (slope / (-4.0 * PI) - 1.0).abs(), SLOPE_WINDOW, 0.0)
                .with_note(format!("slope {slope:.6} per unit half-modulus, target -4 pi = {:.6}", -4.0 * PI)),
        );
    } else {
        report.push(Record::holds("vanishing.log-slope", ANCHOR_FAR, true).informational().with_note("skipped: needs 2 moduli"));
    }
    for p in &prof {
        report.push(
            Record::le(
                format!("vanishing.beyond-cylinder L={}", p.l),
                ANCHOR_BEYOND,
                p.beyond_ratio,
                p.single_factor * p.single_factor,
                floor_beyond,
            )
            .with_note(format!("floor: {floor_note}")),
        );
    }
    report.push(
        Record::le("floor.refinement", ANCHOR_BEYOND, floor_beyond, floor_beyond, 0.0)
            .informational()
            .with_note(format!("beyond-ratio floor {floor_beyond:e}, far-ratio change {floor_far:e}; {floor_note}")),
    );

    // block splitting against the blocks of the largest modulus
    let samples = run.samples();
    if let Some(last) = samples.last() {
        let p = last.p_matrix();
        let n = p.nrows();
        let (l1, l2) = (p.view((0, 0), (2, 2)).into_owned(), p.view((2, 2), (n - 2, n - 2)).into_owned());
        for s in &samples[..samples.len() - 1] {
            let sp = separating_split(&s.p_matrix(), 1, &l1, &l2, 0.5 * s.l).map_err(|e| CliError::Run(e.to_string()))?;
            report.push(
                Record::le(format!("split.off-diagonal L={}", s.l), ANCHOR_SPLIT, sp.omega_normalized, sp.omega_bound, 0.0).informational(),
            );
            report.push(
                Record::le(format!("split.remainder L={}", s.l), ANCHOR_SPLIT, sp.remainder_normalized, sp.remainder_bound, 0.0)
                    .informational()
                    .with_note(format!("relative to the blocks at L={}", last.l)),
            );
        }
    }

    let mut table = Table::new("vanishing.csv", &["L", "half_modulus", "far_ratio", "beyond_ratio", "single_factor"]);
    for p in &prof {
        table.numbers(&[p.l, p.half_modulus, p.far_ratio, p.beyond_ratio, p.single_factor]);
    }
    let mut tables = vec![table, Table::plot("far_ratio", &half, &far)];
    for p in &prof {
        let mut t = Table::new(format!("plotdata/slab_profile_L{}.csv", p.l), &["x", "y"]);
        for s in &p.slabs {
            t.numbers(&[s.position, s.total]);
        }
        tables.push(t);
    }
    report.data = serde_json::json!({
        "family": &cfg,
        "form": sc.form,
        "profiles": prof.iter().map(|p| serde_json::json!({
            "L": p.l, "half_modulus": p.half_modulus, "far_ratio": p.far_ratio,
            "beyond_ratio": p.beyond_ratio, "single_factor": p.single_factor,
        })).collect::<Vec<_>>(),
        "samples": &samples,
    });
    report.finish();
    Ok(Output { report, tables })
}
