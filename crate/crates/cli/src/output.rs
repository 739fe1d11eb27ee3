//! Report rendering. Every float is rounded to 12 significant digits so
//! reports diff cleanly.

use std::fs;
use std::io::{self, Write};
use std::path::Path;

use serde_json::{Map, Value};

use crate::config::Format;
use crate::CliError;

pub const SIG_DIGITS: usize = 12;

pub fn round_sig(x: f64) -> f64 {
    if !x.is_finite() || x == 0.0 {
        return x;
    }
    format!("{:.*e}", SIG_DIGITS - 1, x).parse().unwrap_or(x)
}

pub fn fmt_num(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let r = round_sig(x);
    let a = r.abs();
    if r == 0.0 || (1e-4..1e12).contains(&a) {
        format!("{r}")
    } else {
        format!("{r:e}")
    }
}

/// Rounds every non-integer number in place.
pub fn round_value(v: &mut Value) {
    match v {
        Value::Number(num) if num.is_f64() => {
            let x = num.as_f64().unwrap();
            *v = serde_json::Number::from_f64(round_sig(x)).map_or(Value::Null, Value::Number);
        }
        Value::Array(items) => items.iter_mut().for_each(round_value),
        Value::Object(map) => map.values_mut().for_each(round_value),
        _ => {}
    }
}

fn cell(v: &Value) -> String {
    match v {
        Value::Null => String::new(),
        Value::Bool(b) => b.to_string(),
        Value::Number(num) => match num.as_f64() {
            Some(x) if num.is_f64() => fmt_num(x),
            _ => num.to_string(),
        },
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

/// CSV of an array of flat objects; the header comes from the first row.
pub fn csv_rows(rows: &[Value]) -> Result<String, CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    if let Some(Value::Object(first)) = rows.first() {
        let keys: Vec<&String> = first.keys().collect();
        w.write_record(keys.iter().map(|k| k.as_str()))?;
        for row in rows {
            let row = row.as_object().cloned().unwrap_or_default();
            w.write_record(keys.iter().map(|k| cell(row.get(*k).unwrap_or(&Value::Null))))?;
        }
    }
    let bytes = w.into_inner().map_err(|e| CliError::Io(e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

/// Name/value/note table aligned in columns.
pub fn table(rows: &[(String, Option<f64>, String)]) -> String {
    let width = rows.iter().map(|r| r.0.len()).max().unwrap_or(0);
    let values: Vec<String> = rows
        .iter()
        .map(|r| r.1.map_or_else(|| "-".to_string(), fmt_num))
        .collect();
    let vwidth = values.iter().map(|v| v.len()).max().unwrap_or(0);
    let mut out = String::new();
    for (row, value) in rows.iter().zip(&values) {
        let line = format!("{:<width$}  {:<vwidth$}  {}", row.0, value, row.2);
        out.push_str(line.trim_end());
        out.push('\n');
    }
    out
}

/// A rendered report: the JSON document plus the rows used for CSV.
pub struct Report {
    pub json: Value,
    pub rows: Vec<Value>,
    pub table: Option<String>,
}

impl Report {
    pub fn new(json: Value) -> Self {
        let rows = match json.get("rows") {
            Some(Value::Array(rows)) => rows.clone(),
            _ => vec![flatten(&json)],
        };
        Self { json, rows, table: None }
    }

    pub fn with_rows(mut self, rows: Vec<Value>) -> Self {
        self.rows = rows;
        self
    }

    pub fn with_table(mut self, table: String) -> Self {
        self.table = Some(table);
        self
    }

    pub fn render(&self, format: Format) -> Result<String, CliError> {
        match format {
            Format::Json => {
                let mut v = self.json.clone();
                round_value(&mut v);
                let mut s = serde_json::to_string_pretty(&v).map_err(|e| CliError::Io(e.into()))?;
                s.push('\n');
                Ok(s)
            }
            Format::Csv => {
                let mut rows = self.rows.clone();
                rows.iter_mut().for_each(round_value);
                csv_rows(&rows)
            }
            Format::Table => self
                .table
                .clone()
                .ok_or_else(|| CliError::Usage("table format is available for constants and moments only".into())),
        }
    }

    pub fn emit(&self, format: Format, out: Option<&Path>) -> Result<(), CliError> {
        let text = self.render(format)?;
        match out {
            Some(path) => fs::write(path, text)?,
            None => io::stdout().lock().write_all(text.as_bytes())?,
        }
        Ok(())
    }
}

/// Top-level scalars of an object, for a one-row CSV.
fn flatten(v: &Value) -> Value {
    let mut map = Map::new();
    if let Value::Object(obj) = v {
        for (k, x) in obj {
            if !x.is_array() && !x.is_object() {
                map.insert(k.clone(), x.clone());
            }
        }
    }
    Value::Object(map)
}
