//! CSV tables, JSONL jump records and the run manifest.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use passage_core::trajectory::TrajectoryRecord;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// 17 significant digits, `.` decimal point, independent of locale.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(i64),
    Text(String),
    Empty,
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Cell::Num(x) => fmt_f64(*x),
            Cell::Int(i) => i.to_string(),
            Cell::Text(s) => s.clone(),
            Cell::Empty => String::new(),
        }
    }

    pub fn as_f64(&self) -> Option<f64> {
        match self {
            Cell::Num(x) => Some(*x),
            Cell::Int(i) => Some(*i as f64),
            _ => None,
        }
    }
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Num(x)
    }
}

impl From<usize> for Cell {
    fn from(x: usize) -> Self {
        Cell::Int(x as i64)
    }
}

impl From<String> for Cell {
    fn from(x: String) -> Self {
        Cell::Text(x)
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(header: Vec<String>) -> Self {
        Table { header, rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.header.iter().position(|h| h == name)
    }

    /// Numeric values of a column (`None` for non-numeric cells).
    pub fn column(&self, name: &str) -> Option<Vec<Option<f64>>> {
        let i = self.column_index(name)?;
        Some(self.rows.iter().map(|r| r[i].as_f64()).collect())
    }

    pub fn to_csv(&self) -> String {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
        w.write_record(&self.header).expect("in-memory write");
        for row in &self.rows {
            w.write_record(row.iter().map(Cell::render)).expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("csv output is utf-8")
    }
}

fn json_str(s: &str) -> String {
    serde_json::to_string(s).expect("strings serialize")
}

/// One JSON object per line; floats use [`fmt_f64`].
pub fn record_jsonl(point: usize, record: &TrajectoryRecord, channel_labels: &[String]) -> String {
    let jumps: Vec<String> = record
        .jumps
        .iter()
        .map(|j| {
            let label = channel_labels.get(j.channel).map_or_else(|| j.channel.to_string(), |l| l.clone());
            format!("{{\"t\":{},\"channel\":{}}}", fmt_f64(j.t), json_str(&label))
        })
        .collect();
    let atom = record.atom_outcome.map_or_else(|| "null".to_string(), |o| o.to_string());
    let accepted = record.accepted.map_or_else(|| "null".to_string(), |a| a.to_string());
    let warnings: Vec<String> = record.warnings.iter().map(|w| json_str(w)).collect();
    format!(
        "{{\"point\":{point},\"index\":{},\"seed\":{},\"jumps\":[{}],\"atom_outcome\":{atom},\"accepted\":{accepted},\"warnings\":[{}]}}\n",
        record.index,
        record.seed,
        jumps.join(","),
        warnings.join(",")
    )
}

#[derive(Debug, Clone, PartialEq)]
pub struct OutputFile {
    pub path: String,
    pub bytes: u64,
    pub sha256: String,
}

impl OutputFile {
    pub fn describe(path: &Path, contents: &[u8]) -> Self {
        OutputFile { path: path.display().to_string(), bytes: contents.len() as u64, sha256: hex::encode(Sha256::digest(contents)) }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunManifest {
    pub artifact: String,
    pub artifact_version: String,
    pub rng: String,
    pub kind: String,
    /// Resolved config in the input grammar.
    pub config: String,
    pub jobs: usize,
    pub wall_clock_seconds: f64,
    /// `None` on success, else the error message.
    pub error: Option<String>,
    pub results: BTreeMap<String, f64>,
    pub outputs: Vec<OutputFile>,
}

impl RunManifest {
    pub fn succeeded(&self) -> bool {
        self.error.is_none()
    }

    pub fn to_json(&self) -> String {
        let results: serde_json::Map<String, serde_json::Value> = self
            .results
            .iter()
            .map(|(k, &v)| (k.clone(), serde_json::Number::from_f64(v).map_or(serde_json::Value::Null, serde_json::Value::Number)))
            .collect();
        let outputs: Vec<serde_json::Value> =
            self.outputs.iter().map(|o| serde_json::json!({"path": o.path, "bytes": o.bytes, "sha256": o.sha256})).collect();
        let v = serde_json::json!({
            "artifact": self.artifact,
            "artifact_version": self.artifact_version,
            "rng": self.rng,
            "kind": self.kind,
            "status": if self.succeeded() { "ok" } else { "error" },
            "error": self.error,
            "jobs": self.jobs,
            "wall_clock_seconds": self.wall_clock_seconds,
            "results": results,
            "outputs": outputs,
            "config": self.config,
        });
        let mut s = serde_json::to_string_pretty(&v).expect("manifest serializes");
        s.push('\n');
        s
    }
}

/// Writes through a temporary sibling file and renames it into place.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<()> {
    let io = |source| Error::Io { path: path.to_path_buf(), source };
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(io)?;
    }
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(format!(".tmp{}", std::process::id()));
    let tmp = PathBuf::from(tmp);
    let result = (|| {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(contents)?;
        f.sync_all()?;
        fs::rename(&tmp, path)
    })();
    if result.is_err() {
        let _ = fs::remove_file(&tmp);
    }
    result.map_err(io)
}

/// `<prefix><suffix>`, e.g. `out/fig10` + `.csv`.
pub fn with_suffix(prefix: &Path, suffix: &str) -> PathBuf {
    let mut s = prefix.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}
