//! CSV output with a leading `# units: ...` line.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use crate::error::CliError;

pub struct Table {
    units: String,
    header: Vec<&'static str>,
    rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(units: impl Into<String>, header: &[&'static str]) -> Self {
        Self {
            units: units.into(),
            header: header.to_vec(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        assert_eq!(row.len(), self.header.len(), "row width");
        self.rows.push(row);
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn write(&self, path: &Path) -> Result<(), CliError> {
        let file = File::create(path).map_err(CliError::io(path))?;
        let mut out = BufWriter::new(file);
        writeln!(out, "# units: {}", self.units).map_err(CliError::io(path))?;
        let mut w = csv::Writer::from_writer(out);
        w.write_record(&self.header)?;
        for row in &self.rows {
            w.write_record(row)?;
        }
        w.flush().map_err(CliError::io(path))?;
        Ok(())
    }
}

/// Shortest representation that parses back to the same value; exponent
/// form for very small or large magnitudes.
pub fn num(x: f64) -> String {
    let a = x.abs();
    if a != 0.0 && a.is_finite() && !(1e-4..1e15).contains(&a) {
        format!("{x:e}")
    } else {
        format!("{x}")
    }
}

/// Reader that skips the units line.
pub fn reader(path: &Path) -> Result<csv::Reader<File>, CliError> {
    Ok(csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_path(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn numbers_round_trip() {
        for x in [0.0, -0.0, 1.0, 0.1, -2.5e-17, 3.3306690738754696e-16, 1e20, 12345.678, f64::MIN_POSITIVE] {
            let s = num(x);
            assert_eq!(s.parse::<f64>().unwrap().to_bits(), x.to_bits(), "{s}");
        }
        assert_eq!(num(2.5e-7), "2.5e-7");
        assert_eq!(num(0.25), "0.25");
    }

    #[test]
    fn tables_carry_a_units_line() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.csv");
        let mut t = Table::new("energy in units of 2D", &["a", "b"]);
        t.push(vec!["1".into(), "x,y".into()]);
        t.write(&path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert_eq!(text, "# units: energy in units of 2D\na,b\n1,\"x,y\"\n");
        let rows: Vec<csv::StringRecord> = reader(&path).unwrap().records().map(|r| r.unwrap()).collect();
        assert_eq!(rows.len(), 1);
        assert_eq!(&rows[0][1], "x,y");
    }
}
