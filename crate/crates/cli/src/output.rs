//! Run directory writer. Every file goes through [`OutputSet`], which records its digest
//! so the manifest written at the end lists exactly what the run produced.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::error::CliError;

#[derive(Debug, Clone, Serialize, PartialEq, Eq)]
pub struct ManifestEntry {
    pub path: String,
    pub bytes: usize,
    pub sha256: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct Manifest {
    pub scenario: String,
    pub config_sha256: String,
    pub complete: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    pub files: Vec<ManifestEntry>,
}

pub const MANIFEST_NAME: &str = "manifest.json";

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

#[derive(Debug)]
pub struct OutputSet {
    root: PathBuf,
    entries: Vec<ManifestEntry>,
}

impl OutputSet {
    pub fn create(root: &Path) -> Result<Self, CliError> {
        fs::create_dir_all(root).map_err(|e| CliError::io(root, e))?;
        Ok(Self {
            root: root.to_path_buf(),
            entries: Vec::new(),
        })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn entries(&self) -> &[ManifestEntry] {
        &self.entries
    }

    /// Write `bytes` to `rel` (relative, `/`-separated) and record it.
    pub fn write(&mut self, rel: &str, bytes: &[u8]) -> Result<(), CliError> {
        let path = self.root.join(rel);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent).map_err(|e| CliError::io(parent, e))?;
        }
        fs::write(&path, bytes).map_err(|e| CliError::io(&path, e))?;
        self.entries.retain(|e| e.path != rel);
        self.entries.push(ManifestEntry {
            path: rel.to_string(),
            bytes: bytes.len(),
            sha256: sha256_hex(bytes),
        });
        Ok(())
    }

    pub fn write_json(&mut self, rel: &str, value: &Value) -> Result<(), CliError> {
        let mut text = serde_json::to_string_pretty(value).expect("JSON values serialize");
        text.push('\n');
        self.write(rel, text.as_bytes())
    }

    pub fn write_table(&mut self, rel: &str, table: &Table) -> Result<(), CliError> {
        self.write(rel, table.to_csv().as_bytes())
    }

    /// One wavefunction frame, `t,x,re_psi,im_psi`.
    pub fn write_frame(
        &mut self,
        dir: &str,
        index: usize,
        t: f64,
        xs: &[f64],
        psi: &[Complex64],
    ) -> Result<(), CliError> {
        let mut text = String::with_capacity(48 * xs.len());
        text.push_str("t,x,re_psi,im_psi\n");
        for (x, z) in xs.iter().zip(psi) {
            let _ = writeln!(text, "{},{},{},{}", num(t), num(*x), num(z.re), num(z.im));
        }
        self.write(&format!("{dir}/frame_{index:06}.csv"), text.as_bytes())
    }

    /// Write the manifest last, via a temporary file and a rename so that readers never
    /// see a partial manifest.
    pub fn finish(self, scenario: &str, config_sha256: &str, error: Option<String>) -> Result<Manifest, CliError> {
        let mut files = self.entries;
        files.sort_by(|a, b| a.path.cmp(&b.path));
        let manifest = Manifest {
            scenario: scenario.to_string(),
            config_sha256: config_sha256.to_string(),
            complete: error.is_none(),
            error,
            files,
        };
        let mut text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
        text.push('\n');
        let tmp = self.root.join(format!("{MANIFEST_NAME}.tmp"));
        let dest = self.root.join(MANIFEST_NAME);
        fs::write(&tmp, text.as_bytes()).map_err(|e| CliError::io(&tmp, e))?;
        fs::rename(&tmp, &dest).map_err(|e| CliError::io(&dest, e))?;
        Ok(manifest)
    }
}

/// Shortest round-trip representation; identical input gives identical text.
pub fn num(x: f64) -> String {
    if x == 0.0 {
        "0".to_string()
    } else {
        format!("{x:e}")
    }
}

/// Column-oriented numeric table written as CSV.
#[derive(Debug, Clone, Default)]
pub struct Table {
    pub headers: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn new(headers: &[&str]) -> Self {
        Self {
            headers: headers.iter().map(|h| h.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<f64>) {
        debug_assert_eq!(row.len(), self.headers.len());
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Vec<f64> {
        let k = self.headers.iter().position(|h| h == name).expect("known column");
        self.rows.iter().map(|r| r[k]).collect()
    }

    pub fn to_csv(&self) -> String {
        let mut text = self.headers.join(",");
        text.push('\n');
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(|&x| num(x)).collect();
            text.push_str(&cells.join(","));
            text.push('\n');
        }
        text
    }
}
