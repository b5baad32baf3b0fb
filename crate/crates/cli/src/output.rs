//! Run directories, file formats and manifests.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{CliError, CliResult};

pub const RUNS_DIR_ENV: &str = "CVTP_RUNS_DIR";
pub const MANIFEST: &str = "manifest.json";
pub const REPORT_SCHEMA: u32 = 1;

/// One CSV cell. Floats are written with 17 significant digits.
#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    F(f64),
    U(u64),
    S(String),
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::F(v)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::U(v as u64)
    }
}

impl From<u64> for Cell {
    fn from(v: u64) -> Self {
        Cell::U(v)
    }
}

fn push_cell(out: &mut String, cell: &Cell) {
    match cell {
        Cell::F(v) => write!(out, "{v:.16e}"),
        Cell::U(v) => write!(out, "{v}"),
        Cell::S(s) => write!(out, "{s}"),
    }
    .expect("writing to a String cannot fail");
}

pub fn csv_bytes<I>(header: &[&str], rows: I) -> Vec<u8>
where
    I: IntoIterator<Item = Vec<Cell>>,
{
    let mut out = header.join(",");
    out.push('\n');
    for row in rows {
        for (i, cell) in row.iter().enumerate() {
            if i > 0 {
                out.push(',');
            }
            push_cell(&mut out, cell);
        }
        out.push('\n');
    }
    out.into_bytes()
}

pub fn json_bytes<T: Serialize>(value: &T) -> Vec<u8> {
    let mut v = serde_json::to_vec_pretty(value).expect("report types serialise");
    v.push(b'\n');
    v
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileDigest {
    pub name: String,
    pub sha256: String,
    pub bytes: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub schema: u32,
    pub command: String,
    pub tool_version: String,
    pub seed: Option<u64>,
    pub config: serde_json::Value,
    pub started_at: String,
    pub finished_at: String,
    pub files: Vec<FileDigest>,
}

/// A single-writer output directory. Files are recorded as they are written;
/// [`RunDir::finish`] writes the manifest last, atomically.
#[derive(Debug)]
pub struct RunDir {
    path: PathBuf,
    files: Vec<FileDigest>,
    command: String,
    started: DateTime<Utc>,
}

impl RunDir {
    /// `out_dir` is used as-is; otherwise `$CVTP_RUNS_DIR` (or `runs`) gets a
    /// fresh `<timestamp>-<command>` subdirectory.
    pub fn create(out_dir: Option<&Path>, command: &str) -> CliResult<Self> {
        let started = Utc::now();
        let path = match out_dir {
            Some(p) => p.to_path_buf(),
            None => {
                let root = std::env::var_os(RUNS_DIR_ENV).map(PathBuf::from).unwrap_or_else(|| PathBuf::from("runs"));
                let stem = format!("{}-{command}", started.format("%Y%m%dT%H%M%SZ"));
                let mut candidate = root.join(&stem);
                let mut n = 2;
                while candidate.exists() {
                    candidate = root.join(format!("{stem}-{n}"));
                    n += 1;
                }
                candidate
            }
        };
        fs::create_dir_all(&path).map_err(|e| CliError::io(&path, e))?;
        Ok(Self {
            path,
            files: Vec::new(),
            command: command.to_string(),
            started,
        })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn write(&mut self, name: &str, bytes: &[u8]) -> CliResult<()> {
        let target = self.path.join(name);
        fs::write(&target, bytes).map_err(|e| CliError::io(&target, e))?;
        self.files.push(FileDigest {
            name: name.to_string(),
            sha256: sha256_hex(bytes),
            bytes: bytes.len() as u64,
        });
        Ok(())
    }

    pub fn write_csv<I>(&mut self, name: &str, header: &[&str], rows: I) -> CliResult<()>
    where
        I: IntoIterator<Item = Vec<Cell>>,
    {
        self.write(name, &csv_bytes(header, rows))
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> CliResult<()> {
        self.write(name, &json_bytes(value))
    }

    pub fn finish(self, seed: Option<u64>, config: serde_json::Value) -> CliResult<PathBuf> {
        let manifest = RunManifest {
            schema: REPORT_SCHEMA,
            command: self.command,
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            seed,
            config,
            started_at: self.started.to_rfc3339(),
            finished_at: Utc::now().to_rfc3339(),
            files: self.files,
        };
        let tmp = self.path.join(format!("{MANIFEST}.tmp"));
        let target = self.path.join(MANIFEST);
        fs::write(&tmp, json_bytes(&manifest)).map_err(|e| CliError::io(&tmp, e))?;
        fs::rename(&tmp, &target).map_err(|e| CliError::io(&target, e))?;
        Ok(self.path)
    }
}

/// Files whose digest no longer matches the manifest (missing files included).
pub fn verify_run(dir: &Path) -> CliResult<Vec<String>> {
    let mpath = dir.join(MANIFEST);
    let text = fs::read(&mpath).map_err(|e| CliError::io(&mpath, e))?;
    let manifest: RunManifest =
        serde_json::from_slice(&text).map_err(|e| CliError::config(MANIFEST, e))?;
    let mut bad = Vec::new();
    for f in &manifest.files {
        match fs::read(dir.join(&f.name)) {
            Ok(bytes) if sha256_hex(&bytes) == f.sha256 && bytes.len() as u64 == f.bytes => {}
            Ok(_) => bad.push(f.name.clone()),
            Err(_) => bad.push(format!("{} (missing)", f.name)),
        }
    }
    Ok(bad)
}
