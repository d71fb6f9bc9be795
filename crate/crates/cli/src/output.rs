use serde::Serialize;
use serde_json::Value;
use std::io::Write;

use crate::config::Format;

/// Header plus rows, already formatted.
#[derive(Debug, Clone, Default)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Self { header: header.iter().map(|s| s.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        self.rows.push(row);
    }
}

/// Shortest round-trip representation, `.` decimal, no locale.
pub fn num(v: f64) -> String {
    format!("{v:?}")
}

/// What a subcommand produced.
pub struct Report {
    pub json: Value,
    pub table: Table,
    /// `(name, passed)` for every assertion the subcommand makes.
    pub assertions: Vec<(String, bool)>,
}

impl Report {
    pub fn new<T: Serialize>(json: &T, table: Table) -> Self {
        Self { json: serde_json::to_value(json).unwrap_or(Value::Null), table, assertions: Vec::new() }
    }

    pub fn assert(&mut self, name: impl Into<String>, passed: bool) {
        self.assertions.push((name.into(), passed));
    }

    pub fn failures(&self) -> Vec<&str> {
        self.assertions.iter().filter(|a| !a.1).map(|a| a.0.as_str()).collect()
    }

    pub fn write(&self, format: Format, out: &mut dyn Write) -> std::io::Result<()> {
        match format {
            Format::Json => {
                serde_json::to_writer_pretty(&mut *out, &self.json)?;
                writeln!(out)
            }
            Format::Csv => {
                let mut w = csv::Writer::from_writer(out);
                w.write_record(&self.table.header)?;
                for r in &self.table.rows {
                    w.write_record(r)?;
                }
                w.flush()
            }
        }
    }
}
