//! Reports: resolved config, named checks against tolerances, verb-specific
//! results, and an optional CSV table. Floats are written with 17
//! significant digits and keys keep insertion order, so identical runs give
//! identical bytes.

use std::io::Write;
use std::str::FromStr;

use serde::Serialize;
use serde_json::{Map, Number, Value};

use super::config::RunConfig;
use crate::error::Result;

#[derive(Clone, Debug, Serialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub tol: f64,
    pub pass: bool,
}

#[derive(Clone, Debug, Default)]
pub struct Table {
    pub headers: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(headers: &[&str]) -> Self {
        Table { headers: headers.iter().map(|s| s.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        self.rows.push(row);
    }
}

/// Float cell with the same formatting as JSON numbers.
pub fn num(x: f64) -> String {
    format!("{x:.16e}")
}

#[derive(Debug)]
pub struct Report {
    pub config: RunConfig,
    pub checks: Vec<Check>,
    pub results: Value,
    pub table: Option<Table>,
}

impl Report {
    pub fn new(config: &RunConfig) -> Self {
        Report { config: config.clone(), checks: Vec::new(), results: Value::Object(Map::new()), table: None }
    }

    /// Record `value ≤ tol`.
    pub fn check(&mut self, name: &str, value: f64, tol: f64) {
        self.checks.push(Check { name: name.to_string(), value, tol, pass: value <= tol });
    }

    pub fn set(&mut self, key: &str, v: impl Serialize) -> Result<()> {
        let v = serde_json::to_value(v)?;
        if let Value::Object(m) = &mut self.results {
            m.insert(key.to_string(), v);
        }
        Ok(())
    }

    pub fn pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn failures(&self) -> Vec<&Check> {
        self.checks.iter().filter(|c| !c.pass).collect()
    }

    pub fn to_json(&self) -> Result<String> {
        let mut top = Map::new();
        top.insert("verb".into(), Value::String(self.config.verb.clone()));
        top.insert("config".into(), serde_json::to_value(&self.config.values)?);
        top.insert("pass".into(), Value::Bool(self.pass()));
        top.insert("checks".into(), serde_json::to_value(&self.checks)?);
        top.insert("results".into(), self.results.clone());
        let v = normalize_floats(Value::Object(top));
        let mut s = serde_json::to_string_pretty(&v)?;
        s.push('\n');
        Ok(s)
    }

    pub fn to_csv(&self) -> Result<Vec<u8>> {
        let mut w = csv::Writer::from_writer(Vec::new());
        if let Some(t) = &self.table {
            w.write_record(&t.headers).map_err(csv_err)?;
            for r in &t.rows {
                w.write_record(r).map_err(csv_err)?;
            }
        } else {
            w.write_record(["check", "value", "tol", "pass"]).map_err(csv_err)?;
            for c in &self.checks {
                w.write_record([c.name.clone(), num(c.value), num(c.tol), c.pass.to_string()]).map_err(csv_err)?;
            }
        }
        w.into_inner().map_err(|e| crate::CalcError::Io(std::io::Error::other(e.to_string())))
    }

    /// Write per the `format`, `out` and `csv` keys.
    pub fn emit(&self, stdout: &mut dyn Write) -> Result<()> {
        let format = self.config.raw("format").unwrap_or("json");
        let out = self.config.raw("out").unwrap_or("-");
        let json = self.to_json()?;
        let csv = self.to_csv()?;
        let primary: &[u8] = if format == "csv" { &csv } else { json.as_bytes() };
        if out == "-" {
            stdout.write_all(primary)?;
        } else {
            std::fs::write(out, primary)?;
            if format == "csv" {
                std::fs::write(format!("{out}.json"), json.as_bytes())?;
            }
        }
        if let Some(path) = self.config.raw("csv") {
            std::fs::write(path, &csv)?;
        }
        Ok(())
    }
}

fn csv_err(e: csv::Error) -> crate::CalcError {
    crate::CalcError::Io(std::io::Error::other(e.to_string()))
}

/// Rewrite every non-integer number as `{:.16e}`.
pub fn normalize_floats(v: Value) -> Value {
    match v {
        Value::Number(n) if !(n.is_i64() || n.is_u64()) => match n.as_f64() {
            Some(x) if x.is_finite() => Value::Number(Number::from_str(&num(x)).unwrap_or(n)),
            _ => Value::Null,
        },
        Value::Array(a) => Value::Array(a.into_iter().map(normalize_floats).collect()),
        Value::Object(m) => Value::Object(m.into_iter().map(|(k, v)| (k, normalize_floats(v))).collect()),
        other => other,
    }
}
