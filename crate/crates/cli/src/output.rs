//! CSV/JSON emission with atomic writes.

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use serde::Serialize;
use tempfile::NamedTempFile;

use crate::config::RunConfig;
use crate::CliError;

pub const TOOL_VERSION: &str = concat!(env!("CARGO_PKG_NAME"), " ", env!("CARGO_PKG_VERSION"));

/// Writes `contents` to `dir/name` through a temporary file in the same directory.
pub fn write_atomic(dir: &Path, name: &str, contents: &str) -> Result<PathBuf, CliError> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("cannot create {}: {e}", dir.display())))?;
    let target = dir.join(name);
    let io = |e: std::io::Error| CliError::Io(format!("cannot write {}: {e}", target.display()));
    let mut tmp = NamedTempFile::new_in(dir).map_err(io)?;
    tmp.write_all(contents.as_bytes()).map_err(io)?;
    tmp.as_file().sync_all().map_err(io)?;
    tmp.persist(&target).map_err(|e| io(e.error))?;
    Ok(target)
}

/// A CSV table whose cells are already formatted.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(columns: &[&'static str]) -> Self {
        Self { columns: columns.to_vec(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    /// CSV preceded by `#` lines carrying the tool version, command, seed and config.
    pub fn to_csv(&self, command: &str, cfg: &RunConfig) -> String {
        let mut out = String::new();
        writeln!(out, "# {TOOL_VERSION}").unwrap();
        writeln!(out, "# command: {command}").unwrap();
        writeln!(out, "# master_seed: {}", cfg.scenario.master_seed).unwrap();
        let compact = serde_json::to_string(cfg).expect("config serializes");
        writeln!(out, "# config: {compact}").unwrap();
        out.push_str(&self.columns.join(","));
        out.push('\n');
        for row in &self.rows {
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }

    /// Aligned plain-text rendering for the terminal.
    pub fn to_text(&self) -> String {
        let widths: Vec<usize> = (0..self.columns.len())
            .map(|i| self.rows.iter().map(|r| r[i].len()).chain([self.columns[i].len()]).max().unwrap_or(0))
            .collect();
        let line = |cells: Vec<&str>| {
            cells
                .iter()
                .zip(&widths)
                .map(|(c, w)| format!("{c:>w$}"))
                .collect::<Vec<_>>()
                .join("  ")
        };
        let mut out = line(self.columns.clone());
        for row in &self.rows {
            out.push('\n');
            out.push_str(&line(row.iter().map(String::as_str).collect()));
        }
        out
    }
}

/// JSON mirror of a CSV: the manifest plus the rows as records.
pub fn to_json<T: Serialize>(command: &str, cfg: &RunConfig, rows: &T) -> String {
    let doc = serde_json::json!({
        "tool": TOOL_VERSION,
        "command": command,
        "master_seed": cfg.scenario.master_seed,
        "config": cfg,
        "rows": rows,
    });
    serde_json::to_string_pretty(&doc).expect("rows serialize")
}

pub fn fmt(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.6}")
    } else if x.is_nan() {
        "nan".into()
    } else if x > 0.0 {
        "inf".into()
    } else {
        "-inf".into()
    }
}
