//! Deterministic CSV and JSON tables.

use std::io::Write;

use anyhow::Result;
use serde_json::{json, Map, Value};

use crate::config::Format;

#[derive(Clone, Debug, PartialEq)]
pub enum Cell {
    Num(f64),
    Text(String),
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Num(x)
    }
}

impl From<&str> for Cell {
    fn from(s: &str) -> Self {
        Cell::Text(s.to_string())
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Table {
    pub command: String,
    pub fingerprint: String,
    pub warnings: Vec<String>,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

/// 17 significant digits, round-trip safe; `-0` is written as `0`.
pub fn format_float(x: f64) -> String {
    let x = if x == 0.0 { 0.0 } else { x };
    format!("{x:.16e}")
}

impl Table {
    pub fn write_csv(&self, w: &mut impl Write) -> Result<()> {
        writeln!(w, "# optomech {}", env!("CARGO_PKG_VERSION"))?;
        writeln!(w, "# command: {}", self.command)?;
        writeln!(w, "# config-sha256: {}", self.fingerprint)?;
        for warning in &self.warnings {
            writeln!(w, "# warning: {warning}")?;
        }
        writeln!(w, "{}", self.columns.join(","))?;
        for row in &self.rows {
            let cells: Vec<String> = row
                .iter()
                .map(|c| match c {
                    Cell::Num(x) => format_float(*x),
                    Cell::Text(s) => s.clone(),
                })
                .collect();
            writeln!(w, "{}", cells.join(","))?;
        }
        Ok(())
    }

    pub fn to_json(&self) -> Value {
        let records: Vec<Value> = self
            .rows
            .iter()
            .map(|row| {
                let mut m = Map::new();
                for (name, cell) in self.columns.iter().zip(row) {
                    let v = match cell {
                        Cell::Num(x) => json!(if *x == 0.0 { 0.0 } else { *x }),
                        Cell::Text(s) => json!(s),
                    };
                    m.insert(name.clone(), v);
                }
                Value::Object(m)
            })
            .collect();
        json!({
            "version": env!("CARGO_PKG_VERSION"),
            "command": self.command,
            "config_sha256": self.fingerprint,
            "warnings": self.warnings,
            "columns": self.columns,
            "records": records,
        })
    }

    pub fn write(&self, format: Format, w: &mut impl Write) -> Result<()> {
        match format {
            Format::Csv => self.write_csv(w),
            Format::Json => {
                serde_json::to_writer_pretty(&mut *w, &self.to_json())?;
                writeln!(w)?;
                Ok(())
            }
        }
    }
}
