//! Check records and the aggregated report written to `report.json`.

use cylgraft::family::Check;
use serde::{Deserialize, Serialize};

/// One inequality `lhs ≤ rhs + floor`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Record {
    pub name: String,
    /// Name of the result the record checks.
    pub anchor: String,
    pub lhs: f64,
    pub rhs: f64,
    pub floor: f64,
    pub margin: f64,
    pub pass: bool,
    /// Informational records are reported but never fail a run.
    pub asserted: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl Record {
    pub fn le(name: impl Into<String>, anchor: impl Into<String>, lhs: f64, rhs: f64, floor: f64) -> Self {
        Record {
            name: name.into(),
            anchor: anchor.into(),
            lhs,
            rhs,
            floor,
            margin: rhs + floor - lhs,
            pass: lhs <= rhs + floor,
            asserted: true,
            note: None,
        }
    }

    /// A boolean condition, recorded as `0 ≤ 0` or `1 ≤ 0`.
    pub fn holds(name: impl Into<String>, anchor: impl Into<String>, ok: bool) -> Self {
        Self::le(name, anchor, if ok { 0.0 } else { 1.0 }, 0.0, 0.0)
    }

    pub fn from_check(anchor: impl Into<String>, c: &Check) -> Self {
        Self::le(c.name.clone(), anchor, c.lhs, c.rhs, c.floor)
    }

    pub fn informational(mut self) -> Self {
        self.asserted = false;
        self
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    pub fn with_note(mut self, note: impl Into<String>) -> Self {
        self.note = Some(note.into());
        self
    }

    pub fn failed(&self) -> bool {
        self.asserted && !self.pass
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Summary {
    pub total: usize,
    pub asserted: usize,
    pub passed: usize,
    pub failed: usize,
    pub informational: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub command: String,
    pub seed: u64,
    pub tol: f64,
    pub records: Vec<Record>,
    pub summary: Summary,
    /// Command-specific results.
    pub data: serde_json::Value,
}

impl Report {
    pub fn new(command: &str, seed: u64, tol: f64) -> Self {
        Report { command: command.into(), seed, tol, records: Vec::new(), summary: Summary::default(), data: serde_json::Value::Null }
    }

    pub fn push(&mut self, r: Record) {
        self.records.push(r);
    }

    pub fn extend(&mut self, rs: impl IntoIterator<Item = Record>) {
        self.records.extend(rs);
    }

    pub fn finish(&mut self) {
        let asserted = self.records.iter().filter(|r| r.asserted).count();
        let failed = self.records.iter().filter(|r| r.failed()).count();
        self.summary = Summary {
            total: self.records.len(),
            asserted,
            passed: asserted - failed,
            failed,
            informational: self.records.len() - asserted,
        };
    }

    pub fn all_pass(&self) -> bool {
        !self.records.iter().any(Record::failed)
    }

    pub fn get(&self, name: &str) -> Option<&Record> {
        self.records.iter().find(|r| r.name == name)
    }

    pub fn matching<'a>(&'a self, prefix: &'a str) -> impl Iterator<Item = &'a Record> + 'a {
        self.records.iter().filter(move |r| r.name.starts_with(prefix))
    }
}

/// Folds many evaluations of one inequality into a single record on the worst ratio.
#[derive(Clone, Debug)]
pub struct Tally {
    name: String,
    anchor: String,
    worst: f64,
    worst_case: Option<(usize, f64, f64)>,
    count: usize,
    violations: usize,
    rel_floor: f64,
}

impl Tally {
    pub fn new(name: impl Into<String>, anchor: impl Into<String>) -> Self {
        Tally { name: name.into(), anchor: anchor.into(), worst: 0.0, worst_case: None, count: 0, violations: 0, rel_floor: 0.0 }
    }

    /// Allows `lhs/rhs` up to `1 + rel_floor`.
    pub fn with_rel_floor(mut self, rel_floor: f64) -> Self {
        self.rel_floor = rel_floor;
        self
    }

    pub fn add(&mut self, index: usize, lhs: f64, rhs: f64, holds: bool) {
        self.count += 1;
        if !holds {
            self.violations += 1;
        }
        let ratio = if lhs == 0.0 {
            0.0
        } else if rhs > 0.0 {
            lhs / rhs
        } else {
            f64::INFINITY
        };
        if self.worst_case.is_none() || ratio > self.worst || ratio.is_nan() {
            self.worst = ratio;
            self.worst_case = Some((index, lhs, rhs));
        }
    }

    /// Record with `lhs` the worst `lhs/rhs`, `rhs = 1` and the relative floor.
    pub fn record(&self) -> Record {
        let mut r = Record::le(self.name.clone(), self.anchor.clone(), self.worst, 1.0, self.rel_floor);
        if self.count == 0 {
            return r.informational().with_note("no evaluations");
        }
        let at = self.worst_case.map(|(i, l, h)| format!("; worst at series {i}: {l:e} vs {h:e}")).unwrap_or_default();
        r.note = Some(format!("{} evaluations, {} violations{at}", self.count, self.violations));
        r
    }
}
