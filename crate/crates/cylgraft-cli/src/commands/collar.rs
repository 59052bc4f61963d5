//! `collar-table`: collar quantities on a grid of lengths with their inequalities.

use super::Context;
use crate::config::CollarTableConfig;
use crate::output::{Output, Table};
use crate::report::{Report, Tally};
use crate::CliError;
use cylgraft::hyperbolic::{collar, length_grid, reduced_collar};
use std::collections::BTreeMap;

const ANCHOR: &str = "collar.standard-collar";
const ANCHOR_REDUCED: &str = "collar.reduced-collar";

pub fn collar_table(cfg: &CollarTableConfig, ctx: &Context) -> Result<Output, CliError> {
    cfg.validate()?;
    let grid = length_grid(cfg.ell_min, cfg.ell_max, cfg.steps).map_err(|e| CliError::Config(e.to_string()))?;
    let mut report = Report::new("collar-table", ctx.seed, ctx.tol);
    let mut table = Table::new("collar_table.csv", &["ell", "cl", "M", "L", "d", "mu"]);
    let mut tallies: BTreeMap<&'static str, Tally> = BTreeMap::new();
    let mut mus = Vec::with_capacity(grid.len());
    for (i, &ell) in grid.iter().enumerate() {
        let c = collar(ell).map_err(|e| CliError::Run(e.to_string()))?;
        table.numbers(&[c.ell, c.cl, c.m, c.l, c.d, c.mu]);
        mus.push(c.mu);
        for (name, ok) in c.checks() {
            tallies.entry(name).or_insert_with(|| Tally::new(name, ANCHOR)).add(i, if ok { 0.0 } else { 1.0 }, 0.0, ok);
        }
        let r = reduced_collar(ell).map_err(|e| CliError::Run(e.to_string()))?;
        for (name, ok) in r.checks().map_err(|e| CliError::Run(e.to_string()))? {
            tallies.entry(name).or_insert_with(|| Tally::new(name, ANCHOR_REDUCED)).add(i, if ok { 0.0 } else { 1.0 }, 0.0, ok);
        }
    }
    // μ shrinks as the geodesic is pinched, that is along the grid read backwards
    let monotone = mus.windows(2).all(|w| w[1] >= w[0]);
    let mut t = Tally::new("collar.decay-constant-monotone", ANCHOR);
    t.add(0, if monotone { 0.0 } else { 1.0 }, 0.0, monotone);
    tallies.insert("collar.decay-constant-monotone", t);
    for (_, t) in tallies {
        report.push(t.record());
    }
    report.data = serde_json::json!({ "ell_min": cfg.ell_min, "ell_max": cfg.ell_max, "steps": cfg.steps });
    report.finish();
    let plot = Table::plot("collar_mu", &grid, &mus);
    Ok(Output { report, tables: vec![table, plot] })
}
