//! JSON run configuration and `key=value` overrides.
//!
//! A config file is either a bare system spec
//!
//! ```json
//! {"n_sites": 3, "omega0": 1, "nu0": 0, "a1": 22, "a2": 0, "omega": 10}
//! ```
//!
//! or an object with a `spec` member plus optional run settings:
//!
//! ```json
//! {
//!   "spec": {"n_sites": 3, "omega0": 1, "nu0": 0, "a1": 22, "a2": 0, "omega": 10},
//!   "periods": 200,
//!   "grid": {"start": 0, "stop": 6, "points": 241}
//! }
//! ```
//!
//! Overrides name a spec field (`a2=24`), a top-level setting
//! (`periods=50`) or a nested one (`grid.points=61`). Values are parsed as
//! JSON and fall back to strings.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use floquet_lattice_core::experiments::{Grid, ScanConfig, ScanParameter};
use floquet_lattice_core::SystemSpec;

use crate::error::{AppError, AppResult};

pub const SPEC_KEYS: [&str; 6] = ["n_sites", "omega0", "nu0", "a1", "a2", "omega"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub spec: SystemSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial_site: Option<usize>,
    /// Horizon in drive periods.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub periods: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub steps_per_period: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stride: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<Grid>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scan_parameter: Option<ScanParameter>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub refine_half_width: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub refine_factor: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gap_factor: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub refinement_budget: Option<usize>,
}

impl RunConfig {
    pub fn scan_config(&self) -> ScanConfig {
        let mut c = ScanConfig::new(self.spec, self.grid.unwrap_or(Grid::DEFAULT));
        if let Some(v) = self.scan_parameter {
            c.scan_parameter = v;
        }
        if let Some(v) = self.periods {
            c.horizon_periods = v;
        }
        if let Some(v) = self.steps_per_period {
            c.steps_per_period = v;
        }
        if let Some(v) = self.initial_site {
            c.initial_site = v;
        }
        if let Some(v) = self.refine_half_width {
            c.refine_half_width = v;
        }
        if let Some(v) = self.refine_factor {
            c.refine_factor = v;
        }
        if let Some(v) = self.gap_factor {
            c.gap_factor = v;
        }
        if let Some(v) = self.refinement_budget {
            c.refinement_budget = v;
        }
        c
    }
}

pub fn read_json(path: &Path) -> AppResult<Value> {
    let text = fs::read_to_string(path).map_err(|e| AppError::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| AppError::Config(format!("{}: {e}", path.display())))
}

/// Applies `key=value` overrides. Spec fields go under `spec_key`.
pub fn apply_overrides(value: &mut Value, spec_key: &str, overrides: &[String]) -> AppResult<()> {
    for item in overrides {
        let (key, raw) = item
            .split_once('=')
            .ok_or_else(|| AppError::Config(format!("override `{item}` is not KEY=VALUE")))?;
        let key = key.trim();
        if key.is_empty() {
            return Err(AppError::Config(format!("override `{item}` has an empty key")));
        }
        let parsed = serde_json::from_str::<Value>(raw.trim())
            .unwrap_or_else(|_| Value::String(raw.trim().to_string()));
        let mut path: Vec<&str> = key.split('.').collect();
        if path.len() == 1 && SPEC_KEYS.contains(&path[0]) {
            path.insert(0, spec_key);
        }
        set_path(value, &path, parsed, item)?;
    }
    Ok(())
}

fn set_path(value: &mut Value, path: &[&str], v: Value, item: &str) -> AppResult<()> {
    let mut cur = value;
    for (i, k) in path.iter().enumerate() {
        let obj = match cur {
            Value::Object(m) => m,
            _ => {
                return Err(AppError::Config(format!(
                    "override `{item}`: `{}` is not an object",
                    path[..i].join(".")
                )))
            }
        };
        if i + 1 == path.len() {
            obj.insert((*k).to_string(), v);
            return Ok(());
        }
        cur = obj
            .entry((*k).to_string())
            .or_insert_with(|| Value::Object(Map::new()));
    }
    Ok(())
}

/// Loads a run config from `path` (or the three-site reference spec) and
/// applies `overrides`.
pub fn load_run_config(path: Option<&Path>, overrides: &[String]) -> AppResult<RunConfig> {
    let mut value = match path {
        Some(p) => read_json(p)?,
        None => serde_json::json!({ "spec": SystemSpec::three_site_reference() }),
    };
    let is_wrapped = matches!(&value, Value::Object(m) if m.contains_key("spec"));
    if !is_wrapped {
        value = serde_json::json!({ "spec": value });
    }
    let touches_grid = overrides.iter().any(|o| o.trim_start().starts_with("grid."));
    if touches_grid {
        if let Value::Object(m) = &mut value {
            m.entry("grid")
                .or_insert_with(|| serde_json::to_value(Grid::DEFAULT).expect("grid serializes"));
        }
    }
    apply_overrides(&mut value, "spec", overrides)?;
    let config: RunConfig =
        serde_json::from_value(value).map_err(|e| AppError::Config(e.to_string()))?;
    config.spec.validate()?;
    Ok(config)
}

/// Parses `START:STOP:POINTS`.
pub fn parse_grid(s: &str) -> Result<Grid, String> {
    let parts: Vec<&str> = s.split(':').collect();
    if parts.len() != 3 {
        return Err(format!("grid `{s}` is not START:STOP:POINTS"));
    }
    let start = parts[0].trim().parse::<f64>().map_err(|e| format!("grid start: {e}"))?;
    let stop = parts[1].trim().parse::<f64>().map_err(|e| format!("grid stop: {e}"))?;
    let points = parts[2].trim().parse::<usize>().map_err(|e| format!("grid points: {e}"))?;
    let grid = Grid { start, stop, points };
    grid.validate().map_err(|e| e.to_string())?;
    Ok(grid)
}
