//! CSV and JSON emission. Every document carries the command, schema
//! version, seed and config hash.

use std::fs::File;
use std::io::{self, BufWriter, Write};

use anyhow::{Context, Result};
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::{Format, RunConfig};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum Cell {
    Num(f64),
    Text(String),
    Flag(bool),
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Num(v)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_owned())
    }
}

impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Cell::Flag(v)
    }
}

impl std::fmt::Display for Cell {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Cell::Num(v) => write!(f, "{v}"),
            Cell::Text(s) => f.write_str(s),
            Cell::Flag(b) => write!(f, "{b}"),
        }
    }
}

/// A fixed-column table plus free-form metadata.
#[derive(Debug, Clone, Default)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
    /// Extra `key: value` header lines (CSV) or fields (JSON).
    pub meta: Vec<(String, Value)>,
    /// Replaces `columns`/`rows` in JSON output when set.
    pub json_body: Option<Value>,
}

impl Table {
    pub fn new(columns: &[&str]) -> Self {
        Self { columns: columns.iter().map(|c| c.to_string()).collect(), ..Self::default() }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }
}

fn header(command: &str, cfg: &RunConfig) -> Vec<(String, Value)> {
    vec![
        ("command".into(), json!(command)),
        ("schema_version".into(), json!(SCHEMA_VERSION)),
        ("tcov_version".into(), json!(env!("CARGO_PKG_VERSION"))),
        ("seed".into(), json!(cfg.seed)),
        ("config_sha256".into(), json!(cfg.hash())),
    ]
}

pub fn write_csv(w: &mut dyn Write, command: &str, cfg: &RunConfig, table: &Table) -> io::Result<()> {
    for (k, v) in header(command, cfg).iter().chain(&table.meta) {
        match v {
            Value::String(s) => writeln!(w, "# {k}: {s}")?,
            other => writeln!(w, "# {k}: {other}")?,
        }
    }
    writeln!(w, "{}", table.columns.join(","))?;
    for row in &table.rows {
        let cells: Vec<String> = row.iter().map(|c| c.to_string()).collect();
        writeln!(w, "{}", cells.join(","))?;
    }
    Ok(())
}

pub fn to_json(command: &str, cfg: &RunConfig, table: &Table) -> Value {
    let mut doc = serde_json::Map::new();
    for (k, v) in header(command, cfg).into_iter().chain(table.meta.iter().cloned()) {
        doc.insert(k, v);
    }
    match &table.json_body {
        Some(body) => {
            doc.insert("data".into(), body.clone());
        }
        None => {
            doc.insert("columns".into(), json!(table.columns));
            doc.insert("rows".into(), json!(table.rows));
        }
    }
    Value::Object(doc)
}

/// Writes to `cfg.output.path`, or standard output.
pub fn emit(command: &str, cfg: &RunConfig, table: &Table) -> Result<()> {
    let mut sink: Box<dyn Write> = match &cfg.output.path {
        Some(p) => Box::new(BufWriter::new(File::create(p).with_context(|| format!("creating {p}"))?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    };
    match cfg.output.format {
        Format::Csv => write_csv(&mut sink, command, cfg, table)?,
        Format::Json => {
            serde_json::to_writer_pretty(&mut sink, &to_json(command, cfg, table))?;
            writeln!(sink)?;
        }
    }
    sink.flush()?;
    Ok(())
}
