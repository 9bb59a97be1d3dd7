//! Plain-text tables. Numbers are written in their shortest round-trip
//! form, so re-running a config reproduces files byte for byte.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use husimi_dyn::HusimiField;

use crate::error::{CliError, CliResult};

/// Shortest representation that parses back to the same `f64`.
pub fn fmt_f64(x: f64) -> String {
    if x == 0.0 || (x.abs() >= 1e-5 && x.abs() < 1e16) || !x.is_finite() {
        format!("{x}")
    } else {
        format!("{x:e}")
    }
}

/// One table cell.
#[derive(Clone, Debug, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(i64),
    Text(String),
    Missing,
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Cell::Num(x) => fmt_f64(*x),
            Cell::Int(i) => i.to_string(),
            Cell::Text(s) => s.clone(),
            Cell::Missing => "missing".to_string(),
        }
    }
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Num(x)
    }
}

impl From<Option<f64>> for Cell {
    fn from(x: Option<f64>) -> Self {
        x.map_or(Cell::Missing, Cell::Num)
    }
}

impl From<usize> for Cell {
    fn from(x: usize) -> Self {
        Cell::Int(x as i64)
    }
}

impl From<&str> for Cell {
    fn from(s: &str) -> Self {
        Cell::Text(s.to_string())
    }
}

impl From<String> for Cell {
    fn from(s: String) -> Self {
        Cell::Text(s)
    }
}

pub fn table(header: &[&str], rows: &[Vec<Cell>]) -> String {
    let mut out = header.join(",");
    out.push('\n');
    for r in rows {
        let line: Vec<String> = r.iter().map(Cell::render).collect();
        out.push_str(&line.join(","));
        out.push('\n');
    }
    out
}

/// `q,p,value` rows in row-major grid order (`q` outer).
pub fn field_csv(field: &HusimiField<f64>) -> String {
    let g = &field.grid;
    let mut out = String::with_capacity(g.nq * g.np * 48);
    out.push_str("q,p,value\n");
    for i in 0..g.nq {
        let q = fmt_f64(g.q(i));
        for j in 0..g.np {
            let _ = writeln!(out, "{q},{},{}", fmt_f64(g.p(j)), fmt_f64(field.values[[i, j]]));
        }
    }
    out
}

/// Writes `field` to `path`.
pub fn emit_field(field: &HusimiField<f64>, path: &Path) -> CliResult<()> {
    write_file(path, &field_csv(field))
}

pub fn write_file(path: &Path, contents: &str) -> CliResult<()> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
        }
    }
    fs::write(path, contents).map_err(|e| CliError::io(path, e))
}

/// File name for a field sampled at time `t`, e.g. `qhusimi_t5.csv`.
pub fn timed_name(stem: &str, t: f64) -> String {
    format!("{stem}_t{}.csv", fmt_f64(t))
}

/// A named output produced by an experiment, written by the orchestrator.
#[derive(Clone, Debug, PartialEq)]
pub struct OutFile {
    pub name: String,
    pub contents: String,
}

impl OutFile {
    pub fn new(name: impl Into<String>, contents: String) -> Self {
        Self { name: name.into(), contents }
    }

    pub fn path_in(&self, dir: &Path) -> PathBuf {
        dir.join(&self.name)
    }
}
