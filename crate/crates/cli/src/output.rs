//! Table and JSON emission. Every number is rounded to 12 significant digits,
//! so CSV and JSON carry identical values. CSV output opens with a
//! `# schema: <name>/<version>` line; JSON carries a `schema` field.

use std::io::Write;

use anyhow::Result;
use serde_json::{json, Value};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

/// `x` rounded to 12 significant digits.
pub fn round12(x: f64) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return x;
    }
    format!("{x:.11e}").parse().unwrap_or(x)
}

/// `x` written with at most 12 significant digits.
pub fn fmt12(x: f64) -> String {
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let r = round12(x);
    if r == 0.0 || (1e-5..1e15).contains(&r.abs()) {
        format!("{r}")
    } else {
        format!("{r:e}")
    }
}

pub fn schema(name: &str) -> String {
    format!("{name}/{SCHEMA_VERSION}")
}

/// A rectangular result with named columns.
pub struct Table {
    pub schema: String,
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
}

pub enum Cell {
    Num(f64),
    Int(u64),
    Bool(bool),
    Text(String),
    Empty,
}

impl Cell {
    fn csv(&self) -> String {
        match self {
            Cell::Num(x) => fmt12(*x),
            Cell::Int(k) => k.to_string(),
            Cell::Bool(b) => b.to_string(),
            Cell::Text(s) => s.clone(),
            Cell::Empty => String::new(),
        }
    }

    fn json(&self) -> Value {
        match self {
            Cell::Num(x) if x.is_finite() => json!(round12(*x)),
            Cell::Num(x) => json!(fmt12(*x)),
            Cell::Int(k) => json!(k),
            Cell::Bool(b) => json!(b),
            Cell::Text(s) => json!(s),
            Cell::Empty => Value::Null,
        }
    }
}

impl Table {
    pub fn new(name: &str, columns: Vec<&'static str>) -> Self {
        Table { schema: schema(name), columns, rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn write(&self, format: Format, extra: Value, out: &mut dyn Write) -> Result<()> {
        match format {
            Format::Csv => {
                writeln!(out, "# schema: {}", self.schema)?;
                let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
                w.write_record(&self.columns)?;
                for row in &self.rows {
                    w.write_record(row.iter().map(Cell::csv))?;
                }
                w.flush()?;
            }
            Format::Json => {
                let rows: Vec<Value> = self
                    .rows
                    .iter()
                    .map(|row| {
                        let obj = self.columns.iter().zip(row).map(|(c, v)| (c.to_string(), v.json())).collect();
                        Value::Object(obj)
                    })
                    .collect();
                let mut doc = json!({ "schema": self.schema, "rows": rows });
                if let (Value::Object(doc), Value::Object(extra)) = (&mut doc, extra) {
                    doc.extend(extra);
                }
                serde_json::to_writer_pretty(&mut *out, &doc)?;
                writeln!(out)?;
            }
        }
        Ok(())
    }
}

/// Rounds every float inside a JSON value to 12 significant digits.
pub fn round_json(v: Value) -> Value {
    match v {
        Value::Number(n) if n.is_f64() => json!(round12(n.as_f64().unwrap_or_default())),
        Value::Array(a) => Value::Array(a.into_iter().map(round_json).collect()),
        Value::Object(o) => Value::Object(o.into_iter().map(|(k, v)| (k, round_json(v))).collect()),
        other => other,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn twelve_digits() {
        assert_eq!(fmt12(0.1 + 0.2), "0.3");
        assert_eq!(fmt12(1.0 / 3.0), "0.333333333333");
        assert_eq!(fmt12(2.0e-20 / 3.0), "6.66666666667e-21");
        assert_eq!(fmt12(0.0), "0");
        assert_eq!(fmt12(f64::INFINITY), "inf");
    }

    #[test]
    fn csv_has_schema_line() {
        let mut t = Table::new("demo", vec!["a", "b"]);
        t.push(vec![Cell::Int(1), Cell::Num(0.5)]);
        let mut buf = Vec::new();
        t.write(Format::Csv, Value::Null, &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "# schema: demo/1\na,b\n1,0.5\n");
    }
}
