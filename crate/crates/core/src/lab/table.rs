//! Plain CSV tables: written with a fixed float format, read back by column name.

use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};

/// Every float in emitted CSVs goes through this, so reruns are byte-identical.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.12e}")
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Self {
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> String {
        let mut out = Vec::new();
        self.write(&mut out).expect("writing to a Vec cannot fail");
        String::from_utf8(out).expect("cells are UTF-8")
    }

    pub fn write(&self, mut w: impl Write) -> Result<()> {
        writeln!(w, "{}", self.header.join(","))?;
        for r in &self.rows {
            writeln!(w, "{}", r.join(","))?;
        }
        Ok(())
    }

    pub fn read(path: &Path) -> Result<Self> {
        let mut rdr = csv::Reader::from_path(path)?;
        let header = rdr.headers()?.iter().map(str::to_string).collect();
        let rows = rdr
            .records()
            .map(|r| r.map(|r| r.iter().map(str::to_string).collect()))
            .collect::<std::result::Result<_, _>>()?;
        Ok(Self { header, rows })
    }

    pub fn column_index(&self, name: &str) -> Result<usize> {
        self.header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::ColumnMissing(name.to_string()))
    }

    pub fn column(&self, name: &str) -> Result<Vec<f64>> {
        let i = self.column_index(name)?;
        self.rows
            .iter()
            .map(|r| {
                r[i].trim()
                    .parse::<f64>()
                    .map_err(|_| Error::Config(format!("column `{name}`: `{}` is not a number", r[i])))
            })
            .collect()
    }

    /// Rows whose `column` parses to within `1e-12` (relative) of `value`.
    pub fn filter_eq(&self, column: &str, value: f64) -> Result<Self> {
        let i = self.column_index(column)?;
        let rows = self
            .rows
            .iter()
            .filter(|r| {
                r[i].trim()
                    .parse::<f64>()
                    .is_ok_and(|x| (x - value).abs() <= 1e-12 * value.abs().max(1.0))
            })
            .cloned()
            .collect();
        Ok(Self {
            header: self.header.clone(),
            rows,
        })
    }
}
