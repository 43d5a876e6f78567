//! Tables emitted by the commands: CSV with a header row, plus a JSON
//! mirror carrying the version, seed and scenario hash.

use anyhow::Result;
use serde::Serialize;
use serde_json::{json, Value};

#[derive(Clone, Debug, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(u64),
    Text(String),
    Empty,
}

impl Cell {
    fn csv(&self) -> String {
        match self {
            Cell::Num(x) => format!("{x}"),
            Cell::Int(i) => i.to_string(),
            Cell::Text(s) => s.clone(),
            Cell::Empty => String::new(),
        }
    }

    fn json(&self) -> Value {
        match self {
            Cell::Num(x) => json!(x),
            Cell::Int(i) => json!(i),
            Cell::Text(s) => json!(s),
            Cell::Empty => Value::Null,
        }
    }

    pub fn as_f64(&self) -> Option<f64> {
        match self {
            Cell::Num(x) => Some(*x),
            Cell::Int(i) => Some(*i as f64),
            _ => None,
        }
    }
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Num(x)
    }
}

impl From<u64> for Cell {
    fn from(x: u64) -> Self {
        Cell::Int(x)
    }
}

impl From<&str> for Cell {
    fn from(s: &str) -> Self {
        Cell::Text(s.to_string())
    }
}

#[derive(Clone, Debug, PartialEq, Default)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(columns: Vec<String>) -> Self {
        Table { columns, rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<Vec<&Cell>> {
        let i = self.columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|r| &r[i]).collect())
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.columns)?;
        for row in &self.rows {
            w.write_record(row.iter().map(Cell::csv))?;
        }
        Ok(String::from_utf8(w.into_inner()?)?)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Metadata {
    pub version: String,
    pub command: String,
    pub seed: u64,
    pub scenario_hash: String,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CurveOutput {
    pub meta: Metadata,
    pub table: Table,
    /// False when a check inside the command failed (nonzero exit).
    pub passed: bool,
}

impl CurveOutput {
    pub fn to_json(&self) -> Result<String> {
        let rows: Vec<Value> = self.table.rows.iter().map(|r| Value::Array(r.iter().map(Cell::json).collect())).collect();
        let doc = json!({
            "meta": self.meta,
            "passed": self.passed,
            "columns": self.table.columns,
            "rows": rows,
        });
        Ok(serde_json::to_string_pretty(&doc)? + "\n")
    }
}
