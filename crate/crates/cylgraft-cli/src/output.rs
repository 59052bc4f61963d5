//! Tables and the output directory layout: `report.json`, `*.csv`, `plotdata/*.csv`.

use crate::report::Report;
use crate::CliError;
use std::path::Path;

/// Doubles are written with 17 significant digits, which round-trips exactly.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

#[derive(Clone, Debug, PartialEq)]
pub struct Table {
    /// Path relative to the output directory.
    pub path: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(path: impl Into<String>, header: &[&str]) -> Self {
        Table { path: path.into(), header: header.iter().map(|s| s.to_string()).collect(), rows: Vec::new() }
    }

    pub fn row(&mut self, cells: Vec<String>) {
        debug_assert_eq!(cells.len(), self.header.len());
        self.rows.push(cells);
    }

    pub fn numbers(&mut self, values: &[f64]) {
        self.row(values.iter().map(|v| fmt_f64(*v)).collect());
    }

    /// Two-column `x,y` plot series.
    pub fn plot(name: &str, xs: &[f64], ys: &[f64]) -> Self {
        let mut t = Table::new(format!("plotdata/{name}.csv"), &["x", "y"]);
        for (x, y) in xs.iter().zip(ys) {
            t.numbers(&[*x, *y]);
        }
        t
    }
}

/// Everything a command produces.
#[derive(Clone, Debug)]
pub struct Output {
    pub report: Report,
    pub tables: Vec<Table>,
}

pub fn write_output(dir: &Path, out: &Output) -> Result<(), CliError> {
    let io = |e: std::io::Error| CliError::Run(format!("cannot write to {}: {e}", dir.display()));
    std::fs::create_dir_all(dir.join("plotdata")).map_err(io)?;
    let json = serde_json::to_string_pretty(&out.report).map_err(|e| CliError::Run(e.to_string()))?;
    std::fs::write(dir.join("report.json"), json + "\n").map_err(io)?;
    for t in &out.tables {
        let mut w = csv::Writer::from_path(dir.join(&t.path)).map_err(|e| CliError::Run(e.to_string()))?;
        w.write_record(&t.header).map_err(|e| CliError::Run(e.to_string()))?;
        for r in &t.rows {
            w.write_record(r).map_err(|e| CliError::Run(e.to_string()))?;
        }
        w.flush().map_err(io)?;
    }
    Ok(())
}
