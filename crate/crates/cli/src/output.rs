//! Run manifest and result files.
//!
//! Numbers are written in their shortest round-trip form and maps in key
//! order, so identical inputs give byte-identical files.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use dualrail_core::experiments::{Curve, ExperimentResult, ExportedRecord};
use serde::Serialize;

/// Shortest round-trip decimal, in exponent form outside `[1e-3, 1e6)`.
pub fn num(v: f64) -> String {
    let a = v.abs();
    if v == 0.0 || !v.is_finite() || (1e-3..1e6).contains(&a) {
        v.to_string()
    } else {
        format!("{v:e}")
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub config_path: Option<String>,
    pub seed: u64,
    pub output_dir: String,
    pub tool_version: String,
    pub timestamp: String,
}

impl RunManifest {
    pub fn new(command: &str, config_path: Option<&Path>, seed: u64, output_dir: &Path) -> Self {
        RunManifest {
            command: command.to_string(),
            config_path: config_path.map(|p| p.display().to_string()),
            seed,
            output_dir: output_dir.display().to_string(),
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            timestamp: chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true),
        }
    }
}

/// Destination directory for one run.
pub struct Output {
    dir: PathBuf,
}

impl Output {
    pub fn create(dir: &Path) -> Result<Self> {
        fs::create_dir_all(dir).with_context(|| format!("creating output directory {}", dir.display()))?;
        Ok(Output { dir: dir.to_path_buf() })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    pub fn json<T: Serialize>(&self, name: &str, value: &T) -> Result<PathBuf> {
        let path = self.path(name);
        let mut text = serde_json::to_string_pretty(value)?;
        text.push('\n');
        fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?;
        Ok(path)
    }

    /// CSV with a fixed header; every row must match its length.
    pub fn csv(&self, name: &str, header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<PathBuf> {
        let path = self.path(name);
        let mut w = csv::Writer::from_path(&path).with_context(|| format!("writing {}", path.display()))?;
        w.write_record(header)?;
        for r in rows {
            w.write_record(&r)?;
        }
        w.flush()?;
        Ok(path)
    }

    /// Long-format curves: `curve, x, y, yerr`.
    pub fn curves(&self, name: &str, curves: &BTreeMap<String, Curve>) -> Result<PathBuf> {
        let rows = curves.iter().flat_map(|(label, c)| {
            (0..c.x.len()).map(move |i| vec![label.clone(), num(c.x[i]), num(c.y[i]), num(c.yerr[i])])
        });
        self.csv(name, &["curve", "x", "y", "yerr"], rows)
    }

    /// Exported raw records: `label, sample, time_s, i, q`.
    pub fn records(&self, name: &str, records: &[ExportedRecord]) -> Result<PathBuf> {
        let rows = records.iter().flat_map(|r| {
            r.record.samples.iter().enumerate().map(move |(k, s)| {
                vec![r.label.clone(), k.to_string(), num(r.record.time_of(k)), num(s.re), num(s.im)]
            })
        });
        self.csv(name, &["label", "sample", "time_s", "i", "q"], rows)
    }

    /// Curves, fits, derived scalars and warnings of an experiment.
    pub fn experiment(&self, stem: &str, res: &ExperimentResult) -> Result<Vec<PathBuf>> {
        let mut written = vec![self.curves(&format!("{stem}_curves.csv"), &res.curves)?, self.json(&format!("{stem}_summary.json"), res)?];
        if !res.records.is_empty() {
            written.push(self.records(&format!("{stem}_records.csv"), &res.records)?);
        }
        Ok(written)
    }
}
