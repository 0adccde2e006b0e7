//! Deterministic report writing: a manifest echoing the inputs, CSV
//! tables, and a human-readable summary. Identical configuration must
//! produce identical bytes, so every number is rendered with the shortest
//! round-trip formatting and the only volatile datum, the wall-clock
//! timestamp, sits alone on its own manifest line.

use std::fmt::Display;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use hbspace::quad::QuadratureSpec;

pub struct RunDir {
    dir: PathBuf,
}

impl RunDir {
    pub fn create(path: &Path) -> Result<Self, String> {
        fs::create_dir_all(path)
            .map_err(|e| format!("cannot create output directory {}: {e}", path.display()))?;
        Ok(RunDir {
            dir: path.to_path_buf(),
        })
    }

    pub fn write(&self, name: &str, content: &str) -> Result<(), String> {
        let path = self.dir.join(name);
        fs::write(&path, content).map_err(|e| format!("cannot write {}: {e}", path.display()))
    }
}

pub fn manifest(command: &str, seed: u64, spec: &QuadratureSpec, config_text: &str) -> String {
    let timestamp = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    let mut out = String::new();
    out.push_str(&format!("tool: hbspace {}\n", env!("CARGO_PKG_VERSION")));
    out.push_str(&format!("command: {command}\n"));
    out.push_str(&format!("seed: {seed}\n"));
    out.push_str(&format!("rel_tol: {}\n", spec.rel_tol));
    out.push_str(&format!("abs_tol: {}\n", spec.abs_tol));
    out.push_str(&format!("max_panels: {}\n", spec.max_panels));
    out.push_str(&format!("timestamp: {timestamp}\n"));
    out.push_str("-- config --\n");
    out.push_str(config_text);
    if !config_text.ends_with('\n') {
        out.push('\n');
    }
    out
}

/// Comma-separated table with a fixed header. Cells are preformatted
/// strings; [`cell`] renders one value.
pub struct Table {
    header: Vec<&'static str>,
    rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&'static str]) -> Self {
        Table {
            header: header.to_vec(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        assert_eq!(row.len(), self.header.len(), "row width mismatch");
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> String {
        let mut out = self.header.join(",");
        out.push('\n');
        for row in &self.rows {
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }
}

pub fn cell<T: Display>(value: T) -> String {
    format!("{value}")
}
