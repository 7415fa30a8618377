//! CSV tables with `#` metadata lines.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(u64),
    Text(String),
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Num(v)
    }
}

impl From<u64> for Cell {
    fn from(v: u64) -> Self {
        Cell::Int(v)
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

/// Reals are written with 17 significant digits so that they parse back to
/// the same `f64`.
pub fn format_num(v: f64) -> String {
    if v.is_nan() {
        "nan".into()
    } else if v.is_infinite() {
        if v > 0.0 { "inf" } else { "-inf" }.into()
    } else {
        format!("{v:.16e}")
    }
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Cell::Num(v) => format_num(*v),
            Cell::Int(v) => v.to_string(),
            Cell::Text(s) => s.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub file: String,
    pub columns: &'static [&'static str],
    pub meta: Vec<(String, String)>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(file: impl Into<String>, columns: &'static [&'static str]) -> Self {
        Self {
            file: file.into(),
            columns,
            meta: Vec::new(),
            rows: Vec::new(),
        }
    }

    pub fn meta(&mut self, key: &str, value: impl Into<String>) {
        self.meta.push((key.to_string(), value.into()));
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        assert_eq!(row.len(), self.columns.len(), "row width for {}", self.file);
        self.rows.push(row);
    }

    pub fn render(&self, header: &[(String, String)]) -> String {
        let mut out = String::new();
        for (k, v) in header.iter().chain(&self.meta) {
            let _ = writeln!(out, "# {k} = {v}");
        }
        out.push_str(&self.columns.join(","));
        out.push('\n');
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(Cell::render).collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }

    pub fn write(&self, dir: &Path, header: &[(String, String)]) -> Result<PathBuf, CliError> {
        let path = dir.join(&self.file);
        fs::write(&path, self.render(header)).map_err(|source| CliError::Io {
            path: path.clone(),
            source,
        })?;
        Ok(path)
    }
}

/// Header names and data rows of a rendered table, skipping metadata.
pub fn read_back(text: &str) -> (Vec<String>, Vec<Vec<String>>) {
    let mut lines = text.lines().filter(|l| !l.starts_with('#'));
    let header = lines
        .next()
        .map(|l| l.split(',').map(String::from).collect())
        .unwrap_or_default();
    let rows = lines.map(|l| l.split(',').map(String::from).collect()).collect();
    (header, rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn renders_meta_header_and_rows() {
        let mut t = Table::new("x.csv", &["h", "n", "scheme"]);
        t.meta("note", "hello");
        t.push(vec![0.5.into(), 3u64.into(), "EM".into()]);
        let text = t.render(&[("tool".into(), "sdestab".into())]);
        assert_eq!(
            text,
            "# tool = sdestab\n# note = hello\nh,n,scheme\n5.0000000000000000e-1,3,EM\n"
        );
        let (header, rows) = read_back(&text);
        assert_eq!(header, ["h", "n", "scheme"]);
        assert_eq!(rows.len(), 1);
    }

    #[test]
    fn non_finite_values() {
        assert_eq!(format_num(f64::NAN), "nan");
        assert_eq!(format_num(f64::NEG_INFINITY), "-inf");
    }

    proptest! {
        #[test]
        fn numbers_round_trip(bits in any::<u64>()) {
            let v = f64::from_bits(bits);
            prop_assume!(v.is_finite());
            let back: f64 = format_num(v).parse().unwrap();
            prop_assert_eq!(back.to_bits(), v.to_bits());
        }
    }
}
