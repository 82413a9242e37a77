//! Result tables, number formatting and the on-disk artifacts.

use std::fs;
use std::path::Path;

use serde::Serialize;

/// One CSV cell.
#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Int(u64),
    Num(f64),
    Text(String),
    Bool(bool),
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Cell::Int(v) => v.to_string(),
            Cell::Num(v) => fmt_g(*v, 12),
            Cell::Text(s) => s.clone(),
            Cell::Bool(b) => b.to_string(),
        }
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Num(v)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as u64)
    }
}

impl From<u64> for Cell {
    fn from(v: u64) -> Self {
        Cell::Int(v)
    }
}

impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Cell::Bool(v)
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

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(columns: Vec<&'static str>) -> Self {
        Table { columns, rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    /// Rows as rendered strings, sorted lexicographically by their leading
    /// integer keys and then by text.
    pub fn sorted(&self) -> Vec<Vec<String>> {
        let mut rows = self.rows.clone();
        rows.sort_by(|a, b| {
            for (x, y) in a.iter().zip(b) {
                let o = match (x, y) {
                    (Cell::Int(p), Cell::Int(q)) => p.cmp(q),
                    (Cell::Num(p), Cell::Num(q)) => p.total_cmp(q),
                    _ => x.render().cmp(&y.render()),
                };
                if o.is_ne() {
                    return o;
                }
            }
            std::cmp::Ordering::Equal
        });
        rows.iter().map(|r| r.iter().map(Cell::render).collect()).collect()
    }

    pub fn to_csv(&self) -> Result<String, csv::Error> {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::CRLF).from_writer(Vec::new());
        w.write_record(&self.columns)?;
        for r in self.sorted() {
            w.write_record(&r)?;
        }
        let bytes = w.into_inner().map_err(|e| e.into_error())?;
        Ok(String::from_utf8(bytes).expect("CSV output is UTF-8"))
    }
}

/// C-style `%.{digits}g`.
pub fn fmt_g(x: f64, digits: usize) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return if x.is_sign_negative() { "-0".into() } else { "0".into() };
    }
    let p = digits.max(1);
    let sci = format!("{:.*e}", p - 1, x);
    let (mant, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if exp < -4 || exp >= p as i32 {
        let mant = strip_zeros(mant);
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{mant}e{sign}{:02}", exp.abs())
    } else {
        let decimals = (p as i32 - 1 - exp).max(0) as usize;
        strip_zeros(&format!("{:.*}", decimals, x)).to_string()
    }
}

fn strip_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Manifest<'a, C: Serialize, S: Serialize> {
    pub tool: &'static str,
    pub version: &'static str,
    pub kind: &'static str,
    pub seed: u64,
    pub workers: usize,
    pub wall_clock_seconds: f64,
    pub config: &'a C,
    pub columns: &'a [&'static str],
    pub rows: usize,
    pub warnings: &'a [String],
    pub summary: &'a S,
}

pub fn write_artifacts<C: Serialize, S: Serialize>(
    dir: &Path,
    table: &Table,
    manifest: &Manifest<'_, C, S>,
) -> std::io::Result<()> {
    fs::create_dir_all(dir)?;
    let csv = table.to_csv().map_err(std::io::Error::other)?;
    fs::write(dir.join("results.csv"), csv)?;
    let json = serde_json::to_string_pretty(manifest).map_err(std::io::Error::other)?;
    fs::write(dir.join("manifest.json"), json + "\n")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn g_format_matches_c() {
        assert_eq!(fmt_g(0.1, 12), "0.1");
        assert_eq!(fmt_g(-3.655584064166458, 12), "-3.65558406417");
        assert_eq!(fmt_g(1e-5, 12), "1e-05");
        assert_eq!(fmt_g(123456789012345.0, 12), "1.23456789012e+14");
        assert_eq!(fmt_g(100.0, 12), "100");
        assert_eq!(fmt_g(f64::NEG_INFINITY, 12), "-inf");
        assert_eq!(fmt_g(0.0001234, 3), "0.000123");
    }

    #[test]
    fn rows_sort_numerically() {
        let mut t = Table::new(vec!["n", "x"]);
        t.push(vec![1000usize.into(), 1.0.into()]);
        t.push(vec![200usize.into(), 2.0.into()]);
        let csv = t.to_csv().unwrap();
        assert!(csv.starts_with("n,x\r\n200,2\r\n1000,1\r\n"), "{csv}");
    }
}
