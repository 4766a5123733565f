//! Tabular experiment output with a reproducibility header.

use std::fs;
use std::io;
use std::path::Path;

/// One experiment's output: `#`-prefixed metadata lines followed by a CSV
/// table. Serialization is byte-deterministic for identical inputs.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentRecord {
    pub metadata: Vec<(String, String)>,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl ExperimentRecord {
    pub fn new(columns: &[&str]) -> Self {
        Self {
            metadata: Vec::new(),
            columns: columns.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn meta(&mut self, key: &str, value: impl ToString) {
        self.metadata.push((key.to_string(), value.to_string()));
    }

    pub fn push_row(&mut self, row: Vec<String>) {
        assert_eq!(row.len(), self.columns.len(), "row width mismatch");
        self.rows.push(row);
    }

    pub fn to_csv_string(&self) -> String {
        let mut out = String::new();
        for (key, value) in &self.metadata {
            out.push_str("# ");
            out.push_str(key);
            out.push_str(" = ");
            out.push_str(value);
            out.push('\n');
        }
        out.push_str(&self.columns.join(","));
        out.push('\n');
        for row in &self.rows {
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }

    pub fn write_to(&self, path: &Path) -> io::Result<()> {
        fs::write(path, self.to_csv_string())
    }
}

/// Shortest round-trip decimal form; deterministic for equal bit patterns.
pub fn fmt_f64(x: f64) -> String {
    format!("{x}")
}
