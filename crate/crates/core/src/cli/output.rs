//! CSV, JSON and SVG artifacts in an output directory.

use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::{json, Value};

use crate::error::Result;

pub const SOFTWARE: &str = concat!("compfront ", env!("CARGO_PKG_VERSION"));

pub struct OutputDir {
    dir: PathBuf,
}

impl OutputDir {
    pub fn create(dir: &Path) -> Result<Self> {
        std::fs::create_dir_all(dir)?;
        Ok(Self { dir: dir.to_path_buf() })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    /// Writes a CSV with a header row. Numbers use the shortest round-trip
    /// representation, so identical runs give identical bytes.
    pub fn csv<I, R>(&self, name: &str, header: &[&str], rows: I) -> Result<PathBuf>
    where
        I: IntoIterator<Item = R>,
        R: IntoIterator<Item = String>,
    {
        let path = self.path(name);
        let mut w = csv::Writer::from_path(&path)?;
        w.write_record(header)?;
        for row in rows {
            w.write_record(row)?;
        }
        w.flush()?;
        Ok(path)
    }

    pub fn json<T: Serialize + ?Sized>(&self, name: &str, value: &T) -> Result<PathBuf> {
        let path = self.path(name);
        let mut text = serde_json::to_string_pretty(value)?;
        text.push('\n');
        std::fs::write(&path, text)?;
        Ok(path)
    }

    /// JSON sidecar recording the command, the resolved config and a summary.
    pub fn sidecar<C: Serialize, S: Serialize>(&self, name: &str, command: &str, config: &C, summary: &S) -> Result<PathBuf> {
        let value: Value = json!({
            "software": SOFTWARE,
            "command": command,
            "config": config,
            "summary": summary,
        });
        self.json(name, &value)
    }

    pub fn text(&self, name: &str, content: &str) -> Result<PathBuf> {
        let path = self.path(name);
        std::fs::write(&path, content)?;
        Ok(path)
    }
}

/// Shortest round-trip formatting.
pub fn num(v: f64) -> String {
    format!("{v}")
}

pub fn nums<const N: usize>(v: [f64; N]) -> Vec<String> {
    v.iter().map(|&x| num(x)).collect()
}
