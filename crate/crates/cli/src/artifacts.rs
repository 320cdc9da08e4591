//! Atomic CSV/JSON artifact emission. Every file is written to a temporary
//! sibling and renamed into place, so interrupted runs never leave truncated
//! artifacts behind.

use std::fs;
use std::path::{Path, PathBuf};

use crate::error::CmdError;

pub const CSV_SCHEMA: &str = "# schema=v1";

pub fn write_atomic(path: &Path, contents: &str) -> Result<(), CmdError> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent)?;
    }
    let tmp = path.with_extension("tmp");
    fs::write(&tmp, contents)?;
    fs::rename(&tmp, path)?;
    Ok(())
}

/// CSV with the schema comment line, a header row, and full-roundtrip floats.
pub struct Csv {
    lines: Vec<String>,
}

impl Csv {
    pub fn new(columns: &[&str]) -> Self {
        Csv {
            lines: vec![CSV_SCHEMA.to_string(), columns.join(",")],
        }
    }

    pub fn row(&mut self, fields: &[CsvField]) {
        let rendered: Vec<String> = fields.iter().map(|f| f.render()).collect();
        self.lines.push(rendered.join(","));
    }

    pub fn write(&self, path: &Path) -> Result<(), CmdError> {
        write_atomic(path, &(self.lines.join("\n") + "\n"))
    }
}

pub enum CsvField {
    F(f64),
    I(i64),
    S(String),
}

impl CsvField {
    fn render(&self) -> String {
        match self {
            // Shortest round-trip formatting: deterministic and exact.
            CsvField::F(x) => format!("{x}"),
            CsvField::I(i) => format!("{i}"),
            CsvField::S(s) => s.clone(),
        }
    }
}

pub fn out_path(dir: &Path, name: &str) -> PathBuf {
    dir.join(name)
}
