//! Rectangular result tables and their CSV form.

use std::io::Write;
use std::path::Path;

use crate::CliError;

#[derive(Clone, Debug, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(i64),
    Text(String),
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Num(v)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<u64> for Cell {
    fn from(v: u64) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Cell::Text(v.to_string())
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

impl Cell {
    /// Numbers carry 17 significant digits, enough to round-trip any f64.
    pub fn render(&self) -> String {
        match self {
            Cell::Num(v) if v.is_finite() => format!("{v:.16e}"),
            Cell::Num(v) => v.to_string(),
            Cell::Int(v) => v.to_string(),
            Cell::Text(s) => s.clone(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Self {
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: vec![],
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        assert_eq!(row.len(), self.header.len(), "row width must match header");
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> Vec<u8> {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(vec![]);
        w.write_record(&self.header).expect("in-memory write");
        for row in &self.rows {
            w.write_record(row.iter().map(Cell::render)).expect("in-memory write");
        }
        w.into_inner().expect("in-memory flush")
    }
}

/// Writes `table` as UTF-8 CSV with RFC-4180 quoting and a trailing newline.
pub fn emit_csv(table: &Table, path: &Path) -> Result<(), CliError> {
    let io = |e| CliError::Io {
        path: path.to_path_buf(),
        source: e,
    };
    let mut f = std::fs::File::create(path).map_err(io)?;
    f.write_all(&table.to_csv()).map_err(io)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_table_is_header_only() {
        let t = Table::new(&["a", "b"]);
        assert_eq!(t.to_csv(), b"a,b\n");
    }

    #[test]
    fn comma_is_quoted() {
        let mut t = Table::new(&["label", "x"]);
        t.push(vec!["a,b".into(), 1.5.into()]);
        assert_eq!(
            String::from_utf8(t.to_csv()).unwrap(),
            "label,x\n\"a,b\",1.5000000000000000e0\n"
        );
    }

    #[test]
    fn numbers_round_trip_bit_exact() {
        let values = [
            0.1,
            -1.0 / 3.0,
            1e-300,
            6.02214076e23,
            f64::MIN_POSITIVE,
            f64::INFINITY,
            f64::NEG_INFINITY,
        ];
        let mut t = Table::new(&["v"]);
        for v in values {
            t.push(vec![v.into()]);
        }
        let csv = t.to_csv();
        let mut r = csv::Reader::from_reader(csv.as_slice());
        let back: Vec<f64> = r.records().map(|rec| rec.unwrap()[0].parse().unwrap()).collect();
        for (a, b) in values.iter().zip(&back) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
    }
}
