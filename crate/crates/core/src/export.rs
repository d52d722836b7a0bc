//! Tabular output shared by every report: CSV with `#` comment headers and a
//! JSON document carrying the same columns and rows.

use std::io::Write;

use serde_json::{json, Map};

/// A single cell.
#[derive(Debug, Clone, PartialEq)]
pub enum Value {
    Int(i64),
    Float(f64),
    Text(String),
    Bool(bool),
    Missing,
}

impl Value {
    pub fn opt(x: Option<f64>) -> Self {
        x.map_or(Value::Missing, Value::Float)
    }

    /// Text form used in CSV; floats carry 17 significant digits.
    pub fn render(&self) -> String {
        match self {
            Value::Int(i) => i.to_string(),
            Value::Float(x) => format_float(*x),
            Value::Text(s) => s.clone(),
            Value::Bool(b) => b.to_string(),
            Value::Missing => String::new(),
        }
    }

    fn to_json(&self) -> serde_json::Value {
        match self {
            Value::Int(i) => json!(i),
            Value::Float(x) if x.is_finite() => json!(format_float(*x).parse::<f64>().unwrap_or(*x)),
            Value::Float(x) => json!(x.to_string()),
            Value::Text(s) => json!(s),
            Value::Bool(b) => json!(b),
            Value::Missing => serde_json::Value::Null,
        }
    }
}

impl From<f64> for Value {
    fn from(x: f64) -> Self {
        Value::Float(x)
    }
}

impl From<usize> for Value {
    fn from(x: usize) -> Self {
        Value::Int(x as i64)
    }
}

impl From<&str> for Value {
    fn from(s: &str) -> Self {
        Value::Text(s.to_string())
    }
}

impl From<String> for Value {
    fn from(s: String) -> Self {
        Value::Text(s)
    }
}

impl From<bool> for Value {
    fn from(b: bool) -> Self {
        Value::Bool(b)
    }
}

pub fn format_float(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        x.to_string()
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Table {
    comments: Vec<String>,
    columns: Vec<String>,
    rows: Vec<Vec<Value>>,
}

impl Table {
    pub fn new(columns: &[&str]) -> Self {
        Self { comments: Vec::new(), columns: columns.iter().map(|c| c.to_string()).collect(), rows: Vec::new() }
    }

    pub fn comment(&mut self, line: impl Into<String>) {
        self.comments.push(line.into());
    }

    /// Prepends header lines (version, configuration) ahead of existing
    /// comments.
    pub fn prepend_comments(&mut self, lines: impl IntoIterator<Item = String>) {
        let mut v: Vec<String> = lines.into_iter().collect();
        v.append(&mut self.comments);
        self.comments = v;
    }

    pub fn push(&mut self, row: Vec<Value>) {
        assert_eq!(row.len(), self.columns.len(), "row width must match the header");
        self.rows.push(row);
    }

    pub fn columns(&self) -> &[String] {
        &self.columns
    }

    pub fn rows(&self) -> &[Vec<Value>] {
        &self.rows
    }

    pub fn comments(&self) -> &[String] {
        &self.comments
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        for c in &self.comments {
            writeln!(w, "# {c}")?;
        }
        let mut out = csv::Writer::from_writer(w);
        out.write_record(&self.columns).map_err(csv_io)?;
        for r in &self.rows {
            out.write_record(r.iter().map(Value::render)).map_err(csv_io)?;
        }
        out.flush()
    }

    pub fn write_json<W: Write>(&self, w: W) -> std::io::Result<()> {
        let rows: Vec<serde_json::Value> = self
            .rows
            .iter()
            .map(|r| {
                let m: Map<String, serde_json::Value> =
                    self.columns.iter().cloned().zip(r.iter().map(Value::to_json)).collect();
                serde_json::Value::Object(m)
            })
            .collect();
        let doc = json!({ "header": self.comments, "columns": self.columns, "rows": rows });
        serde_json::to_writer_pretty(w, &doc).map_err(std::io::Error::from)
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("csv output is utf-8")
    }
}

/// Keeps the kind of an underlying I/O error, e.g. a closed pipe.
fn csv_io(e: csv::Error) -> std::io::Error {
    if !e.is_io_error() {
        return std::io::Error::other(e);
    }
    match e.into_kind() {
        csv::ErrorKind::Io(e) => e,
        _ => unreachable!(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_and_json_agree() {
        let mut t = Table::new(&["q", "beta", "label"]);
        t.comment("demo");
        t.push(vec![3usize.into(), (1.0f64 / 3.0).into(), "a,b".into()]);
        t.push(vec![4usize.into(), Value::Missing, true.into()]);
        let csv = t.to_csv_string();
        assert!(csv.starts_with("# demo\nq,beta,label\n3,3.3333333333333331e-1,\"a,b\"\n"));
        let mut buf = Vec::new();
        t.write_json(&mut buf).unwrap();
        let doc: serde_json::Value = serde_json::from_slice(&buf).unwrap();
        assert_eq!(doc["rows"][0]["beta"].as_f64().unwrap(), 1.0 / 3.0);
        assert!(doc["rows"][1]["beta"].is_null());
        assert_eq!(doc["columns"].as_array().unwrap().len(), 3);
    }

    #[test]
    fn float_round_trip() {
        for x in [std::f64::consts::PI, 1e-300, -2.5e17, 0.1 + 0.2] {
            assert_eq!(format_float(x).parse::<f64>().unwrap(), x);
        }
    }
}
