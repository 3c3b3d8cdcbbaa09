//! Checks, tables and the report written to the output directory.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use anyhow::{bail, Context};
use serde::{Deserialize, Serialize};

/// How a check value is compared with its tolerance.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Relation {
    #[serde(rename = "<")]
    Below,
    #[serde(rename = ">=")]
    AtLeast,
    #[serde(rename = "<=")]
    AtMost,
    #[serde(rename = "==")]
    Equal,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    /// `None` when the quantity could not be computed; such a check fails.
    pub value: Option<f64>,
    pub tolerance: f64,
    pub relation: Relation,
    pub pass: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl Check {
    pub fn new(name: &str, value: f64, relation: Relation, tolerance: f64) -> Self {
        let pass = match relation {
            Relation::Below => value < tolerance,
            Relation::AtLeast => value >= tolerance,
            Relation::AtMost => value <= tolerance,
            Relation::Equal => value == tolerance,
        };
        Check {
            name: name.into(),
            value: value.is_finite().then_some(value),
            tolerance,
            relation,
            pass: pass && !value.is_nan(),
            note: None,
        }
    }

    pub fn below(name: &str, value: f64, tolerance: f64) -> Self {
        Check::new(name, value, Relation::Below, tolerance)
    }

    pub fn at_least(name: &str, value: f64, tolerance: f64) -> Self {
        Check::new(name, value, Relation::AtLeast, tolerance)
    }

    pub fn equal(name: &str, value: f64, expected: f64) -> Self {
        Check::new(name, value, Relation::Equal, expected)
    }

    /// A stage that stopped with an error.
    pub fn failed(name: &str, note: String) -> Self {
        Check { name: name.into(), value: None, tolerance: 0.0, relation: Relation::Equal, pass: false, note: Some(note) }
    }

    pub fn with_note(mut self, note: impl Into<String>) -> Self {
        self.note = Some(note.into());
        self
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Cell {
    Int(i64),
    Float(f64),
    Text(String),
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Cell::Int(i) => i.to_string(),
            // 17 significant digits: enough to round-trip any f64.
            Cell::Float(x) => format!("{x:.16e}"),
            Cell::Text(s) => s.clone(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Table {
    pub file: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(file: &str, header: &[&str]) -> Self {
        Table { file: file.into(), header: header.iter().map(|s| s.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn write(&self, dir: &Path) -> anyhow::Result<()> {
        let path = dir.join(&self.file);
        let mut w = csv::Writer::from_path(&path).with_context(|| format!("creating {}", path.display()))?;
        w.write_record(&self.header)?;
        for r in &self.rows {
            w.write_record(r.iter().map(Cell::render))?;
        }
        w.flush()?;
        Ok(())
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Versions {
    pub rank2: String,
    pub rank2_cli: String,
}

impl Default for Versions {
    fn default() -> Self {
        Versions { rank2: rank2::VERSION.into(), rank2_cli: env!("CARGO_PKG_VERSION").into() }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Report {
    pub subcommand: String,
    pub config: serde_json::Value,
    pub seed: Option<u64>,
    pub versions: Versions,
    pub checks: Vec<Check>,
    /// Wall-clock seconds per stage. Not part of any determinism guarantee.
    pub timings: BTreeMap<String, f64>,
    pub tables: Vec<String>,
    /// Structured side results, such as the discrepancy localisation.
    pub details: BTreeMap<String, serde_json::Value>,
}

impl Report {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }
}

/// Writes `report.json` and every table into `dir`. An empty check list is an
/// error: a report with nothing in it must never read as a pass.
pub fn emit_report(report: &Report, tables: &[Table], dir: &Path) -> anyhow::Result<()> {
    if report.checks.is_empty() {
        bail!("refusing to write a report with no checks");
    }
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    for t in tables {
        t.write(dir)?;
    }
    let json = serde_json::to_string_pretty(report)?;
    fs::write(dir.join("report.json"), json + "\n")?;
    Ok(())
}
