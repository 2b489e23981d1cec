//! Result tables, CSV/JSON serialisation and all-or-nothing writes of a result bundle.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq)]
pub enum Value {
    Int(i64),
    Num(f64),
    Text(String),
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Int(i) => write!(f, "{i}"),
            // shortest representation that parses back to the same bits
            Value::Num(x) => write!(f, "{x:?}"),
            Value::Text(s) => f.write_str(s),
        }
    }
}

impl From<f64> for Value {
    fn from(x: f64) -> Self {
        Value::Num(x)
    }
}

impl From<usize> for Value {
    fn from(i: usize) -> Self {
        Value::Int(i as i64)
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

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kind {
    Int,
    Num,
    Text,
}

impl Kind {
    fn parse(self, s: &str) -> Result<Value> {
        Ok(match self {
            Kind::Int => Value::Int(s.parse().with_context(|| format!("integer cell `{s}`"))?),
            Kind::Num => Value::Num(s.parse().with_context(|| format!("numeric cell `{s}`"))?),
            Kind::Text => Value::Text(s.to_string()),
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    /// File stem of the CSV.
    pub name: String,
    pub columns: Vec<String>,
    pub kinds: Vec<Kind>,
    pub rows: Vec<Vec<Value>>,
}

impl Table {
    pub fn new(name: &str, columns: &[(&str, Kind)]) -> Self {
        Table {
            name: name.to_string(),
            columns: columns.iter().map(|c| c.0.to_string()).collect(),
            kinds: columns.iter().map(|c| c.1).collect(),
            rows: Vec::new(),
        }
    }

    pub fn with_columns(name: &str, columns: Vec<String>, kinds: Vec<Kind>) -> Self {
        Table { name: name.to_string(), columns, kinds, rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Value>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn file_name(&self) -> String {
        format!("{}.csv", self.name)
    }

    /// UTF-8 CSV with a leading `# config_sha256=...` comment line and a header row.
    pub fn to_csv(&self, hash: &str) -> Result<Vec<u8>> {
        let mut buf = format!("# config_sha256={hash}\n").into_bytes();
        {
            let mut w = csv::Writer::from_writer(&mut buf);
            w.write_record(&self.columns)?;
            for r in &self.rows {
                w.write_record(r.iter().map(|v| v.to_string()))?;
            }
            w.flush()?;
        }
        Ok(buf)
    }

    /// Parses a CSV written by [`Table::to_csv`] using this table's column kinds.
    pub fn from_csv(name: &str, kinds: &[Kind], bytes: &[u8]) -> Result<(String, Table)> {
        let text = std::str::from_utf8(bytes)?;
        let first = text.lines().next().unwrap_or_default();
        let Some(hash) = first.strip_prefix("# config_sha256=") else { bail!("missing config hash line") };
        let mut r = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(bytes);
        let columns: Vec<String> = r.headers()?.iter().map(String::from).collect();
        if columns.len() != kinds.len() {
            bail!("{} columns, expected {}", columns.len(), kinds.len());
        }
        let mut t = Table::with_columns(name, columns, kinds.to_vec());
        for rec in r.records() {
            let rec = rec?;
            t.rows.push(rec.iter().zip(kinds).map(|(s, k)| k.parse(s)).collect::<Result<_>>()?);
        }
        Ok((hash.to_string(), t))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metadata {
    pub config: serde_json::Value,
    pub config_sha256: String,
    pub code_version: String,
    pub task: String,
    pub wall_time_s: f64,
    pub files: Vec<String>,
    pub summary: BTreeMap<String, f64>,
    pub warnings: Vec<String>,
}

/// Files produced by one run, written only once everything has been computed.
#[derive(Debug, Default)]
pub struct Bundle {
    pub files: Vec<(String, Vec<u8>)>,
}

impl Bundle {
    pub fn add(&mut self, name: String, bytes: Vec<u8>) {
        self.files.push((name, bytes));
    }

    /// Writes into a staging directory and moves the files into place; on failure nothing is
    /// left behind.
    pub fn commit(&self, dir: &Path) -> Result<Vec<PathBuf>> {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        let staging = dir.join(format!(".staging-{}", std::process::id()));
        let result = (|| -> Result<Vec<PathBuf>> {
            fs::create_dir_all(&staging)?;
            for (name, bytes) in &self.files {
                fs::write(staging.join(name), bytes).with_context(|| format!("writing {name}"))?;
            }
            let mut out = Vec::new();
            for (name, _) in &self.files {
                let dest = dir.join(name);
                fs::rename(staging.join(name), &dest)?;
                out.push(dest);
            }
            Ok(out)
        })();
        let _ = fs::remove_dir_all(&staging);
        result
    }
}
