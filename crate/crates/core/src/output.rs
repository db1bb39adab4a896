//! CSV tables, dataset bundles and the run manifest.
//!
//! CSV: header row, values as `{:.16e}` (17 significant digits), complex elements as
//! `re_…`/`im_…` column pairs. Time series start with `t_ps`; scans start with the scan
//! variable. The manifest is written last, through a temporary file and a rename.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::dynamics::Trajectory;
use crate::error::{Error, Result};
use crate::scenarios::hex;

pub const MANIFEST_NAME: &str = "manifest.json";
pub const METADATA_NAME: &str = "metadata.json";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    /// File stem; the file is `<name>.csv`.
    pub name: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn new(name: impl Into<String>, columns: Vec<String>) -> Self {
        Table {
            name: name.into(),
            columns,
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<f64>) -> Result<()> {
        if row.len() != self.columns.len() {
            return Err(Error::Dimension {
                expected: self.columns.len(),
                found: row.len(),
            });
        }
        self.rows.push(row);
        Ok(())
    }

    pub fn file_name(&self) -> String {
        format!("{}.csv", self.name)
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let i = self.columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|r| r[i]).collect())
    }

    pub fn to_csv(&self) -> String {
        let mut s = self.columns.join(",");
        s.push('\n');
        for r in &self.rows {
            for (i, v) in r.iter().enumerate() {
                if i > 0 {
                    s.push(',');
                }
                let _ = write!(s, "{v:.16e}");
            }
            s.push('\n');
        }
        s
    }

    pub fn parse_csv(name: impl Into<String>, text: &str) -> Result<Table> {
        let mut lines = text.lines();
        let header = lines.next().ok_or_else(|| Error::Input("empty CSV".into()))?;
        let mut t = Table::new(name, header.split(',').map(String::from).collect());
        for (n, line) in lines.enumerate() {
            let row = line
                .split(',')
                .map(|v| v.parse::<f64>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|e| Error::Input(format!("CSV row {}: {e}", n + 2)))?;
            t.push(row)?;
        }
        Ok(t)
    }
}

/// `t_ps` followed by re/im pairs of the chosen density-matrix elements.
pub fn trajectory_table(
    name: impl Into<String>,
    traj: &Trajectory,
    elements: &[(usize, usize)],
    label: impl Fn(usize) -> String,
) -> Result<Table> {
    let mut cols = vec!["t_ps".to_string()];
    for &(a, b) in elements {
        let tag = format!("rho_{}_{}", label(a), label(b));
        cols.push(format!("re_{tag}"));
        cols.push(format!("im_{tag}"));
    }
    let d = traj.dimension();
    if let Some(&(a, b)) = elements.iter().find(|&&(a, b)| a >= d || b >= d) {
        return Err(Error::Input(format!("element ({a}, {b}) outside a {d}-dimensional state")));
    }
    let mut t = Table::new(name, cols);
    for (ti, s) in traj.times.iter().zip(&traj.states) {
        let mut row = vec![*ti];
        for &(a, b) in elements {
            row.push(s[(a, b)].re);
            row.push(s[(a, b)].im);
        }
        t.push(row)?;
    }
    Ok(t)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Bundle {
    pub tables: Vec<Table>,
    /// Metadata sidecar with the config echo, version and model hash.
    pub metadata: serde_json::Value,
    pub config: serde_json::Value,
    pub model_hash: String,
}

impl Bundle {
    pub fn table(&self, name: &str) -> Option<&Table> {
        self.tables.iter().find(|t| t.name == name)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FileEntry {
    pub path: String,
    pub sha256: String,
    pub bytes: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub config: serde_json::Value,
    pub model_hash: String,
    pub files: Vec<FileEntry>,
    pub wall_clock_seconds: f64,
    /// Reserved; the numerics use no randomness.
    pub seed: u64,
}

fn sha256_hex(data: &[u8]) -> String {
    hex(&Sha256::digest(data))
}

fn write_file(dir: &Path, name: &str, data: &[u8]) -> Result<FileEntry> {
    let p = dir.join(name);
    fs::write(&p, data).map_err(|e| Error::io(&p, e))?;
    Ok(FileEntry {
        path: name.to_string(),
        sha256: sha256_hex(data),
        bytes: data.len() as u64,
    })
}

fn atomic_write(path: &Path, data: &[u8]) -> Result<()> {
    let tmp: PathBuf = path.with_extension("json.tmp");
    fs::write(&tmp, data).map_err(|e| Error::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

/// Writes every CSV, then the metadata sidecar, then the manifest.
pub fn write_bundle(bundle: &Bundle, dir: &Path, command: &str, started: std::time::Instant) -> Result<RunManifest> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut files = Vec::new();
    for t in &bundle.tables {
        files.push(write_file(dir, &t.file_name(), t.to_csv().as_bytes())?);
    }
    let meta = serde_json::to_vec_pretty(&bundle.metadata).map_err(|e| Error::Numerical(e.to_string()))?;
    files.push(write_file(dir, METADATA_NAME, &meta)?);
    let manifest = RunManifest {
        tool: "sunlit".into(),
        version: VERSION.into(),
        command: command.into(),
        config: bundle.config.clone(),
        model_hash: bundle.model_hash.clone(),
        files,
        wall_clock_seconds: started.elapsed().as_secs_f64(),
        seed: 0,
    };
    let data = serde_json::to_vec_pretty(&manifest).map_err(|e| Error::Numerical(e.to_string()))?;
    atomic_write(&dir.join(MANIFEST_NAME), &data)?;
    Ok(manifest)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub enum FileStatus {
    Ok,
    Missing,
    Mismatch,
}

/// Re-hashes every file listed in the manifest.
pub fn check_bundle(dir: &Path) -> Result<Vec<(String, FileStatus)>> {
    let p = dir.join(MANIFEST_NAME);
    let text = fs::read(&p).map_err(|e| Error::io(&p, e))?;
    let m: RunManifest =
        serde_json::from_slice(&text).map_err(|e| Error::Input(format!("{}: {e}", p.display())))?;
    Ok(m.files
        .iter()
        .map(|f| {
            let status = match fs::read(dir.join(&f.path)) {
                Err(_) => FileStatus::Missing,
                Ok(d) if sha256_hex(&d) == f.sha256 => FileStatus::Ok,
                Ok(_) => FileStatus::Mismatch,
            };
            (f.path.clone(), status)
        })
        .collect())
}

/// Time-series metadata entry for a panel.
pub fn panel(file: &str, title: &str, x: &str, y: &str, log_y: bool) -> serde_json::Value {
    serde_json::json!({ "file": file, "title": title, "x": x, "y": y, "log_y": log_y })
}
