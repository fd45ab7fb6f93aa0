//! Result emission: a summary object (`summary.json`, mirrored as
//! `summary.csv`), extra comma-separated tables and the run manifest.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::Value;

use crate::config::RunConfig;
use crate::error::CliError;

/// 17 significant digits, enough to re-read every `f64` exactly.
pub fn fmt17(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        format!("{x}")
    }
}

/// One summary record: a value, its units and the oracle it is compared
/// with (or how it was obtained).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Entry {
    pub key: String,
    pub value: Value,
    pub units: String,
    pub oracle: String,
}

impl Entry {
    pub fn num(key: &str, value: f64, units: &str, oracle: &str) -> Self {
        let value = serde_json::Number::from_f64(value).map_or_else(|| Value::String(value.to_string()), Value::Number);
        Self::new(key, value, units, oracle)
    }

    pub fn int(key: &str, value: u64, units: &str, oracle: &str) -> Self {
        Self::new(key, Value::from(value), units, oracle)
    }

    pub fn flag(key: &str, value: bool, oracle: &str) -> Self {
        Self::new(key, Value::Bool(value), "", oracle)
    }

    pub fn text(key: &str, value: &str, oracle: &str) -> Self {
        Self::new(key, Value::String(value.to_string()), "", oracle)
    }

    fn new(key: &str, value: Value, units: &str, oracle: &str) -> Self {
        Self {
            key: key.to_string(),
            value,
            units: units.to_string(),
            oracle: oracle.to_string(),
        }
    }

    pub fn value_text(&self) -> String {
        match &self.value {
            Value::Number(n) if n.is_f64() => fmt17(n.as_f64().unwrap_or(f64::NAN)),
            Value::String(s) => s.clone(),
            other => other.to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    /// File name relative to the output directory.
    pub file: PathBuf,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(file: impl Into<PathBuf>, header: &[&str]) -> Self {
        Self {
            file: file.into(),
            header: header.iter().map(|h| h.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        self.rows.push(row);
    }

    pub fn write(&self, dir: &Path) -> Result<PathBuf, CliError> {
        let path = dir.join(&self.file);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent)?;
        }
        let mut w = csv::Writer::from_path(&path)?;
        w.write_record(&self.header)?;
        for row in &self.rows {
            w.write_record(row)?;
        }
        w.flush()?;
        Ok(path)
    }
}

#[derive(Debug, Clone, Serialize)]
struct SummaryFile<'a> {
    subcommand: &'a str,
    status: &'a str,
    entries: &'a [Entry],
}

/// Everything a subcommand produced.
#[derive(Debug, Clone, Default)]
pub struct Report {
    pub entries: Vec<Entry>,
    pub tables: Vec<Table>,
    /// Files written directly by the subcommand (grid dumps, plots).
    pub files: Vec<PathBuf>,
    /// Free-form lines printed before the entries.
    pub lines: Vec<String>,
}

impl Report {
    pub fn push(&mut self, e: Entry) {
        self.entries.push(e);
    }
}

pub fn write_manifest(cfg: &RunConfig) -> Result<PathBuf, CliError> {
    fs::create_dir_all(&cfg.output_dir)?;
    let path = cfg.output_dir.join("manifest.txt");
    fs::write(&path, cfg.manifest())?;
    Ok(path)
}

/// Writes `summary.json`, `summary.csv` and every table, then prints the
/// entries to stdout.
pub fn emit(cfg: &RunConfig, report: &Report, status: &str) -> Result<(), CliError> {
    let dir = &cfg.output_dir;
    fs::create_dir_all(dir)?;
    let summary = SummaryFile {
        subcommand: cfg.subcommand.name(),
        status,
        entries: &report.entries,
    };
    let json = dir.join("summary.json");
    fs::write(&json, serde_json::to_string_pretty(&summary)? + "\n")?;
    let mut flat = Table::new("summary.csv", &["key", "value", "units", "oracle"]);
    for e in &report.entries {
        flat.push(vec![e.key.clone(), e.value_text(), e.units.clone(), e.oracle.clone()]);
    }
    let mut written = vec![dir.join("manifest.txt"), json, flat.write(dir)?];
    for t in &report.tables {
        written.push(t.write(dir)?);
    }
    written.extend(report.files.iter().cloned());

    for line in &report.lines {
        println!("{line}");
    }
    let width = report.entries.iter().map(|e| e.key.len()).max().unwrap_or(0);
    for e in &report.entries {
        let mut line = format!("{:width$}  {}", e.key, e.value_text());
        if !e.units.is_empty() {
            line.push_str(&format!(" {}", e.units));
        }
        if !e.oracle.is_empty() {
            line.push_str(&format!("  [{}]", e.oracle));
        }
        println!("{line}");
    }
    println!("status: {status}");
    for p in written {
        println!("wrote {}", p.display());
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fmt17_round_trips() {
        for x in [0.1, 1.0 / 3.0, 2.221441469079183, 1e-300, -7.5e12] {
            assert_eq!(fmt17(x).parse::<f64>().unwrap(), x);
        }
        assert_eq!(fmt17(f64::INFINITY), "inf");
    }

    #[test]
    fn non_finite_values_become_text() {
        let e = Entry::num("x", f64::NAN, "", "");
        assert_eq!(e.value, Value::String("NaN".into()));
        let e = Entry::num("y", 0.5, "m", "exact");
        assert_eq!(e.value_text(), "5.0000000000000000e-1");
    }
}
