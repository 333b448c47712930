//! Number formatting and the two output encodings.

use std::io::Write;

use serde_json::{Map, Number, Value};

use crate::error::CliResult;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

/// Significant digits used when `--precision` is absent.
pub const DEFAULT_PRECISION: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Fmt {
    pub digits: usize,
}

impl Default for Fmt {
    fn default() -> Self {
        Fmt { digits: DEFAULT_PRECISION }
    }
}

impl Fmt {
    pub fn new(digits: usize) -> Self {
        Fmt { digits: digits.clamp(1, 17) }
    }

    /// `v` rounded to the configured number of significant digits.
    pub fn round(&self, v: f64) -> f64 {
        if !v.is_finite() || v == 0.0 {
            return v;
        }
        format!("{:.*e}", self.digits - 1, v).parse().unwrap_or(v)
    }

    /// Shortest text for the rounded value; scientific outside [1e-5, 1e15).
    pub fn num(&self, v: f64) -> String {
        if v.is_nan() {
            return "nan".into();
        }
        if v.is_infinite() {
            return if v > 0.0 { "inf".into() } else { "-inf".into() };
        }
        let r = self.round(v);
        if r == 0.0 {
            return "0".into();
        }
        let a = r.abs();
        if (1e-5..1e15).contains(&a) {
            format!("{r}")
        } else {
            format!("{r:e}")
        }
    }

    /// JSON number; non-finite values become null.
    pub fn value(&self, v: f64) -> Value {
        Number::from_f64(self.round(v)).map(Value::Number).unwrap_or(Value::Null)
    }

    pub fn values(&self, v: &[f64]) -> Value {
        Value::Array(v.iter().map(|x| self.value(*x)).collect())
    }

    pub fn opt(&self, v: Option<f64>) -> Value {
        v.map(|x| self.value(x)).unwrap_or(Value::Null)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(i64),
    Bool(bool),
    Text(String),
    Empty,
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Num(v)
    }
}

impl From<i64> for Cell {
    fn from(v: i64) -> Self {
        Cell::Int(v)
    }
}

impl From<u64> for Cell {
    fn from(v: u64) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Cell::Bool(v)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.into())
    }
}

impl From<String> for Cell {
    fn from(v: String) -> Self {
        Cell::Text(v)
    }
}

impl<T: Into<Cell>> From<Option<T>> for Cell {
    fn from(v: Option<T>) -> Self {
        v.map(Into::into).unwrap_or(Cell::Empty)
    }
}

/// Rectangular output; JSON renders it as an array of objects keyed by the header.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Table { header: header.iter().map(|s| s.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn write_csv(&self, fmt: &Fmt, out: &mut dyn Write) -> CliResult<()> {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
        w.write_record(&self.header)?;
        for row in &self.rows {
            w.write_record(row.iter().map(|c| match c {
                Cell::Num(v) => fmt.num(*v),
                Cell::Int(v) => v.to_string(),
                Cell::Bool(b) => b.to_string(),
                Cell::Text(s) => s.clone(),
                Cell::Empty => String::new(),
            }))?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_json(&self, fmt: &Fmt) -> Value {
        Value::Array(
            self.rows
                .iter()
                .map(|row| {
                    let mut m = Map::new();
                    for (h, c) in self.header.iter().zip(row) {
                        let v = match c {
                            Cell::Num(v) => fmt.value(*v),
                            Cell::Int(v) => Value::from(*v),
                            Cell::Bool(b) => Value::Bool(*b),
                            Cell::Text(s) => Value::String(s.clone()),
                            Cell::Empty => Value::Null,
                        };
                        m.insert(h.clone(), v);
                    }
                    Value::Object(m)
                })
                .collect(),
        )
    }
}

pub fn write_json(v: &Value, out: &mut dyn Write) -> CliResult<()> {
    serde_json::to_writer_pretty(&mut *out, v).map_err(std::io::Error::from)?;
    out.write_all(b"\n")?;
    Ok(())
}
