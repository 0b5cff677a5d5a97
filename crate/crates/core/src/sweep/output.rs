//! Result tables and their CSV / JSON renderings.

use std::io::{self, Write};

use serde_json::{json, Map, Value};

/// Units note carried in every output's metadata.
pub const UNITS_NOTE: &str =
    "2m = hbar = c = 1; E = k^2; lengths in inverse-wavevector units; times in units of 1/E";

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Cell {
    Float(f64),
    Int(u64),
    Flag(bool),
    Empty,
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Float(x)
    }
}

impl From<Option<f64>> for Cell {
    fn from(x: Option<f64>) -> Self {
        x.map_or(Cell::Empty, Cell::Float)
    }
}

/// 17 significant digits, so every f64 round-trips.
pub fn format_float(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else if x.is_nan() {
        "nan".to_string()
    } else if x > 0.0 {
        "inf".to_string()
    } else {
        "-inf".to_string()
    }
}

impl Cell {
    fn csv(&self) -> String {
        match *self {
            Cell::Float(x) => format_float(x),
            Cell::Int(n) => n.to_string(),
            Cell::Flag(b) => u8::from(b).to_string(),
            Cell::Empty => String::new(),
        }
    }

    fn json(&self) -> Value {
        match *self {
            Cell::Float(x) if x.is_finite() => json!(x),
            Cell::Float(_) | Cell::Empty => Value::Null,
            Cell::Int(n) => json!(n),
            Cell::Flag(b) => json!(b),
        }
    }
}

/// Ordered rows under a fixed header, plus free-form metadata.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
    /// Extra metadata fields (scan convergence and the like).
    pub extra: Map<String, Value>,
}

impl Table {
    pub fn new(columns: Vec<&'static str>) -> Self {
        Table {
            columns,
            rows: Vec::new(),
            extra: Map::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn write_csv<W: Write>(&self, out: &mut W) -> io::Result<()> {
        writeln!(out, "{}", self.columns.join(","))?;
        for row in &self.rows {
            let line: Vec<String> = row.iter().map(Cell::csv).collect();
            writeln!(out, "{}", line.join(","))?;
        }
        Ok(())
    }

    pub fn metadata(&self, subcommand: &str, config: Value) -> Value {
        let mut meta = Map::new();
        meta.insert("subcommand".into(), json!(subcommand));
        meta.insert("units".into(), json!(UNITS_NOTE));
        meta.insert("columns".into(), json!(self.columns));
        for (k, v) in &self.extra {
            meta.insert(k.clone(), v.clone());
        }
        meta.insert("config".into(), config);
        Value::Object(meta)
    }

    pub fn write_json<W: Write>(
        &self,
        out: &mut W,
        subcommand: &str,
        config: Value,
    ) -> io::Result<()> {
        let rows: Vec<Value> = self
            .rows
            .iter()
            .map(|row| {
                let obj: Map<String, Value> = self
                    .columns
                    .iter()
                    .zip(row)
                    .map(|(c, v)| (c.to_string(), v.json()))
                    .collect();
                Value::Object(obj)
            })
            .collect();
        let doc = json!({
            "metadata": self.metadata(subcommand, config),
            "rows": rows,
        });
        serde_json::to_writer_pretty(&mut *out, &doc)?;
        writeln!(out)
    }
}
