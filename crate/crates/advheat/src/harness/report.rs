//! Result tables and their byte-stable serializations.
//!
//! Every experiment emits one table. CSV formatting is pinned: `%.6f`
//! floats with negative zero normalized, no quoting (cell text never
//! contains separators), `\n` line endings, rows sorted by a canonical
//! full-row key. Manifests are JSON with sorted keys and no timestamps,
//! so a re-run of the same spec reproduces both files byte for byte.

use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use serde::Serialize;

use super::HarnessError;

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Text(String),
    Int(i64),
    Real(f64),
}

impl Cell {
    pub fn text(s: impl Into<String>) -> Self {
        Cell::Text(s.into())
    }

    fn render(&self) -> String {
        match self {
            Cell::Text(s) => s.clone(),
            Cell::Int(v) => v.to_string(),
            Cell::Real(v) => format_real(*v),
        }
    }
}

/// Fixed six-decimal formatting; `-0.0` collapses to `0.0` so equal
/// values always print identically.
pub fn format_real(v: f64) -> String {
    let v = if v == 0.0 { 0.0 } else { v };
    format!("{v:.6}")
}

#[derive(Debug, Clone)]
pub struct Table {
    pub name: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(name: impl Into<String>, columns: &[&str]) -> Self {
        Self {
            name: name.into(),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        assert_eq!(row.len(), self.columns.len(), "row arity mismatch in {}", self.name);
        self.rows.push(row);
    }

    /// Canonical full-row ordering, so emission order never depends on
    /// construction order.
    pub fn sort_rows(&mut self) {
        self.rows.sort_by(|a, b| {
            for (x, y) in a.iter().zip(b) {
                let ord = match (x, y) {
                    (Cell::Text(p), Cell::Text(q)) => p.cmp(q),
                    (Cell::Int(p), Cell::Int(q)) => p.cmp(q),
                    (Cell::Real(p), Cell::Real(q)) => p.total_cmp(q),
                    // Mixed kinds within a column do not occur; order by kind.
                    _ => kind_rank(x).cmp(&kind_rank(y)),
                };
                if ord != std::cmp::Ordering::Equal {
                    return ord;
                }
            }
            std::cmp::Ordering::Equal
        });
    }

    pub fn to_csv(&self) -> String {
        let mut out = self.columns.join(",");
        out.push('\n');
        for row in &self.rows {
            let line: Vec<String> = row.iter().map(Cell::render).collect();
            out.push_str(&line.join(","));
            out.push('\n');
        }
        out
    }
}

fn kind_rank(c: &Cell) -> u8 {
    match c {
        Cell::Text(_) => 0,
        Cell::Int(_) => 1,
        Cell::Real(_) => 2,
    }
}

/// Write `results.csv` and `manifest.json` into `dir`, creating it if
/// needed. Returns the two paths.
pub fn write_report(
    dir: &Path,
    table: &Table,
    manifest: &serde_json::Value,
) -> Result<(PathBuf, PathBuf), HarnessError> {
    fs::create_dir_all(dir)?;
    let csv_path = dir.join("results.csv");
    let manifest_path = dir.join("manifest.json");
    let mut csv = fs::File::create(&csv_path)?;
    csv.write_all(table.to_csv().as_bytes())?;
    let mut mf = fs::File::create(&manifest_path)?;
    mf.write_all(serde_json::to_string_pretty(manifest)?.as_bytes())?;
    mf.write_all(b"\n")?;
    Ok((csv_path, manifest_path))
}

/// Serialize any value to a JSON value for manifest embedding.
pub fn to_json<T: Serialize>(value: &T) -> Result<serde_json::Value, HarnessError> {
    Ok(serde_json::to_value(value)?)
}
