use std::collections::BTreeMap;
use std::fs::File;
use std::io::BufWriter;
use std::path::Path;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use floquet_lattice_core::experiments::{ApproachReport, Grid};
use floquet_lattice_core::SystemSpec;

use crate::error::{AppError, AppResult};

pub const TOOL_VERSION: &str = concat!(env!("CARGO_PKG_NAME"), " ", env!("CARGO_PKG_VERSION"));

/// Everything needed to rerun a command. The only run-dependent fields are
/// `wall_time_seconds`, `timestamp` and `workers`; data files carry none.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub figure: Option<String>,
    pub command: String,
    pub spec: SystemSpec,
    pub grid: Option<Grid>,
    pub horizon_periods: Option<usize>,
    pub steps_per_period: usize,
    /// Positive `J0` zeros inside the scanned range.
    pub landmarks: Vec<f64>,
    pub classifications: Vec<ApproachReport>,
    pub metrics: BTreeMap<String, f64>,
    pub files: Vec<String>,
    pub warnings: Vec<String>,
    pub overrides: Vec<String>,
    pub tool_version: String,
    pub workers: usize,
    pub wall_time_seconds: f64,
    pub timestamp: String,
}

impl Manifest {
    pub fn new(command: &str, spec: SystemSpec, steps_per_period: usize) -> Self {
        Self {
            figure: None,
            command: command.to_string(),
            spec,
            grid: None,
            horizon_periods: None,
            steps_per_period,
            landmarks: Vec::new(),
            classifications: Vec::new(),
            metrics: BTreeMap::new(),
            files: Vec::new(),
            warnings: Vec::new(),
            overrides: Vec::new(),
            tool_version: TOOL_VERSION.to_string(),
            workers: 1,
            wall_time_seconds: 0.0,
            timestamp: String::new(),
        }
    }

    /// Stamps wall time and timestamp and writes pretty JSON to `path`.
    pub fn finish(&mut self, started: Instant, path: &Path) -> AppResult<()> {
        self.wall_time_seconds = started.elapsed().as_secs_f64();
        self.timestamp = chrono::Utc::now().to_rfc3339();
        let f = File::create(path).map_err(|e| AppError::io(path, e))?;
        serde_json::to_writer_pretty(BufWriter::new(f), self)?;
        Ok(())
    }
}
