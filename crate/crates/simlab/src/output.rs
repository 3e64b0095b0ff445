//! Experiment artifacts: tidy CSV tables, plot-ready power curves and a
//! JSON manifest.

use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use cpc_core::{Error, Result};
use serde::{Deserialize, Serialize};

use crate::models::ModelId;
use crate::power::{Method, PowerCurve};

fn io_err(path: &Path, e: impl std::fmt::Display) -> Error {
    Error::Output(format!("{}: {e}", path.display()))
}

/// One CSV row per item, header from the field names.
pub fn write_csv<T: Serialize>(rows: &[T], path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| io_err(path, e))?;
    for r in rows {
        w.serialize(r).map_err(|e| io_err(path, e))?;
    }
    w.flush().map_err(|e| io_err(path, e))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlotRow {
    pub a: f64,
    pub method: Method,
    pub alpha: f64,
    pub power: f64,
    pub se: f64,
}

pub fn plot_rows(curve: &PowerCurve, model: ModelId) -> Vec<PlotRow> {
    curve
        .cells
        .iter()
        .filter(|c| c.model == model)
        .map(|c| PlotRow {
            a: c.a,
            method: c.method,
            alpha: c.alpha,
            power: c.rejection_rate,
            se: c.mc_se,
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub experiment: String,
    pub config: serde_json::Value,
    pub seeds: Vec<u64>,
    pub versions: Versions,
    /// Seconds since the Unix epoch; the only non-reproducible field.
    pub created_unix: u64,
    pub files: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Versions {
    pub cpc_simlab: String,
    /// Bumped when the manifest layout changes.
    pub manifest_format: u32,
}

impl Manifest {
    pub fn new(experiment: &str, config: &impl Serialize, seeds: Vec<u64>, files: Vec<String>) -> Result<Self> {
        Ok(Self {
            experiment: experiment.into(),
            config: serde_json::to_value(config)?,
            seeds,
            versions: Versions {
                cpc_simlab: env!("CARGO_PKG_VERSION").into(),
                manifest_format: 1,
            },
            created_unix: SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0),
            files,
        })
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self).map_err(|e| io_err(path, e))?;
        std::fs::write(path, text + "\n").map_err(|e| io_err(path, e))
    }
}

/// Creates `dir` if needed and returns `dir/name`.
pub fn artifact_path(dir: &Path, name: &str) -> Result<PathBuf> {
    std::fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
    Ok(dir.join(name))
}
