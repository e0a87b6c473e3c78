//! Tabular output shared by every subcommand: CSV with a comment header, or
//! a JSON array of row objects with the same fields.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use serde::Deserialize;
use serde_json::{Map, Value};

pub const CONVENTION: &str = "hbar = 1, vacuum quadrature variance 1/2";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

impl FromStr for Format {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            _ => Err(format!("unknown format {s:?} (expected csv or json)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Text(String),
    Num(f64),
    Int(i64),
    Bool(bool),
    Empty,
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Num(v)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_string())
    }
}

impl From<String> for Cell {
    fn from(v: String) -> Self {
        Cell::Text(v)
    }
}

impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Cell::Bool(v)
    }
}

impl From<Option<f64>> for Cell {
    fn from(v: Option<f64>) -> Self {
        v.map_or(Cell::Empty, Cell::Num)
    }
}

/// Scientific notation with 12 significant digits.
pub fn fmt_float(v: f64) -> String {
    if v.is_nan() {
        "nan".into()
    } else if v.is_infinite() {
        if v > 0.0 { "inf" } else { "-inf" }.into()
    } else {
        format!("{v:.11e}")
    }
}

impl fmt::Display for Cell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Cell::Text(s) => f.write_str(s),
            Cell::Num(v) => f.write_str(&fmt_float(*v)),
            Cell::Int(v) => write!(f, "{v}"),
            Cell::Bool(v) => write!(f, "{v}"),
            Cell::Empty => Ok(()),
        }
    }
}

impl Cell {
    fn to_json(&self) -> Value {
        match self {
            Cell::Text(s) => Value::String(s.clone()),
            // round through the CSV text so both outputs carry the same digits
            Cell::Num(v) if v.is_finite() => fmt_float(*v)
                .parse::<f64>()
                .ok()
                .and_then(serde_json::Number::from_f64)
                .map_or(Value::Null, Value::Number),
            Cell::Num(_) | Cell::Empty => Value::Null,
            Cell::Int(v) => Value::from(*v),
            Cell::Bool(v) => Value::Bool(*v),
        }
    }

    fn order(&self, other: &Cell) -> Ordering {
        match (self, other) {
            (Cell::Num(a), Cell::Num(b)) => a.total_cmp(b),
            (Cell::Int(a), Cell::Int(b)) => a.cmp(b),
            (Cell::Empty, Cell::Empty) => Ordering::Equal,
            (Cell::Empty, _) => Ordering::Less,
            (_, Cell::Empty) => Ordering::Greater,
            (a, b) => a.to_string().cmp(&b.to_string()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub command: String,
    pub parameters: Vec<(String, String)>,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(command: &str, columns: &[&str]) -> Self {
        Table {
            command: command.into(),
            parameters: Vec::new(),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn param(&mut self, name: &str, value: impl fmt::Display) -> &mut Self {
        self.parameters.push((name.into(), value.to_string()));
        self
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        assert_eq!(row.len(), self.columns.len(), "row width");
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }

    pub fn value(&self, row: usize, name: &str) -> Option<&Cell> {
        self.column(name).map(|c| &self.rows[row][c])
    }

    pub fn num(&self, row: usize, name: &str) -> Option<f64> {
        match self.value(row, name)? {
            Cell::Num(v) => Some(*v),
            _ => None,
        }
    }

    /// Sorts rows lexicographically over the named key columns (those that
    /// exist); the sort is stable, so ties keep insertion order.
    pub fn sort_by(&mut self, keys: &[&str]) {
        let idx: Vec<usize> = keys.iter().filter_map(|k| self.column(k)).collect();
        self.rows.sort_by(|a, b| {
            idx.iter()
                .map(|&i| a[i].order(&b[i]))
                .find(|o| o.is_ne())
                .unwrap_or(Ordering::Equal)
        });
    }

    fn header_lines(&self) -> String {
        let mut out = format!("# gqr {} {}\n", env!("CARGO_PKG_VERSION"), self.command);
        if !self.parameters.is_empty() {
            let p: Vec<String> = self.parameters.iter().map(|(k, v)| format!("{k}={v}")).collect();
            out += &format!("# parameters: {}\n", p.join(" "));
        }
        out += &format!("# convention: {CONVENTION}\n");
        out
    }

    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.columns).expect("in-memory write");
        for row in &self.rows {
            w.write_record(row.iter().map(|c| c.to_string())).expect("in-memory write");
        }
        let body = String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 cells");
        self.header_lines() + &body
    }

    pub fn to_json(&self) -> String {
        let rows: Vec<Value> = self
            .rows
            .iter()
            .map(|row| {
                let obj: Map<String, Value> = self
                    .columns
                    .iter()
                    .zip(row)
                    .map(|(k, c)| (k.clone(), c.to_json()))
                    .collect();
                Value::Object(obj)
            })
            .collect();
        serde_json::to_string_pretty(&Value::Array(rows)).expect("json values") + "\n"
    }

    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Csv => self.to_csv(),
            Format::Json => self.to_json(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn float_format_has_twelve_digits() {
        assert_eq!(fmt_float(1.0), "1.00000000000e0");
        assert_eq!(fmt_float(-0.00123456789012345), "-1.23456789012e-3");
        assert_eq!(fmt_float(f64::NAN), "nan");
    }

    #[test]
    fn csv_and_json_share_fields() {
        let mut t = Table::new("demo", &["scheme", "N_S", "value"]);
        t.param("kappa", "0.5");
        t.push(vec!["tmss".into(), 1.0.into(), Cell::Empty]);
        t.push(vec!["coherent".into(), 2.0.into(), 0.1.into()]);
        t.sort_by(&["scheme", "N_S"]);
        let csv = t.to_csv();
        assert!(csv.starts_with("# gqr "));
        assert!(csv.contains(CONVENTION));
        let lines: Vec<&str> = csv.lines().filter(|l| !l.starts_with('#')).collect();
        assert_eq!(lines, ["scheme,N_S,value", "coherent,2.00000000000e0,1.00000000000e-1", "tmss,1.00000000000e0,"]);
        let json: Value = serde_json::from_str(&t.to_json()).unwrap();
        assert_eq!(json[0]["scheme"], "coherent");
        assert_eq!(json[1]["value"], Value::Null);
    }
}
