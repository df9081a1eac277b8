//! Bundled figure recipes and their reproduction.

use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use floquet_lattice_core::effective::{analytic_min_p1, analytic_p1, effective_params};
use floquet_lattice_core::experiments::{scan_min_p1, scan_spectrum, Grid, GridExecutor, ScanConfig};
use floquet_lattice_core::propagator::{
    propagate_decimated, propagate_with, site_population_series, StateVector,
};
use floquet_lattice_core::specfun::j0_zeros_in;
use floquet_lattice_core::SystemSpec;

use crate::config::apply_overrides;
use crate::error::{AppError, AppResult};
use crate::executor::ThreadPool;
use crate::format;
use crate::manifest::Manifest;

pub const FIGURES: [(&str, &str); 7] = [
    ("fig2", include_str!("../configs/fig2.json")),
    ("fig3", include_str!("../configs/fig3.json")),
    ("fig4", include_str!("../configs/fig4.json")),
    ("fig5", include_str!("../configs/fig5.json")),
    ("fig6", include_str!("../configs/fig6.json")),
    ("fig7", include_str!("../configs/fig7.json")),
    ("fig8", include_str!("../configs/fig8.json")),
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeSeriesPanel {
    pub a2_over_omega: Vec<f64>,
    pub periods: usize,
    /// Keep every `stride`-th integrator step in the CSV.
    pub stride: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HeatmapPanel {
    pub periods: usize,
    pub stride: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FigureConfig {
    pub figure: String,
    pub description: String,
    pub spec: SystemSpec,
    pub grid: Grid,
    pub horizon_periods: usize,
    pub steps_per_period: usize,
    #[serde(default)]
    pub time_series: Option<TimeSeriesPanel>,
    #[serde(default)]
    pub min_p1: bool,
    #[serde(default)]
    pub heatmap: Option<HeatmapPanel>,
    #[serde(default)]
    pub spectrum: bool,
}

impl FigureConfig {
    pub fn scan_config(&self) -> ScanConfig {
        let mut c = ScanConfig::new(self.spec, self.grid);
        c.horizon_periods = self.horizon_periods;
        c.steps_per_period = self.steps_per_period;
        c
    }
}

pub fn figure_ids() -> Vec<&'static str> {
    FIGURES.iter().map(|(id, _)| *id).collect()
}

fn raw_figure(id: &str) -> AppResult<Value> {
    let text = FIGURES
        .iter()
        .find(|(k, _)| *k == id)
        .map(|(_, t)| *t)
        .ok_or_else(|| {
            AppError::Usage(format!(
                "unknown figure `{id}`; valid ids: {}",
                figure_ids().join(", ")
            ))
        })?;
    Ok(serde_json::from_str(text)?)
}

/// The bundled recipe for `id`.
pub fn figure_config(id: &str) -> AppResult<FigureConfig> {
    load_figure(id, &ReproduceOptions::default())
}

/// Settings layered over a bundled recipe.
#[derive(Debug, Clone, Default)]
pub struct ReproduceOptions {
    pub overrides: Vec<String>,
    pub horizon_periods: Option<usize>,
    pub steps_per_period: Option<usize>,
    pub grid: Option<Grid>,
    pub workers: Option<usize>,
}

fn load_figure(id: &str, opts: &ReproduceOptions) -> AppResult<FigureConfig> {
    let mut value = raw_figure(id)?;
    apply_overrides(&mut value, "spec", &opts.overrides)?;
    let mut cfg: FigureConfig =
        serde_json::from_value(value).map_err(|e| AppError::Config(e.to_string()))?;
    if let Some(h) = opts.horizon_periods {
        cfg.horizon_periods = h;
    }
    if let Some(s) = opts.steps_per_period {
        cfg.steps_per_period = s;
    }
    if let Some(g) = opts.grid {
        cfg.grid = g;
    }
    cfg.scan_config().validate()?;
    Ok(cfg)
}

fn create(out: &Path, name: &str, files: &mut Vec<String>) -> AppResult<BufWriter<File>> {
    let path = out.join(name);
    let f = File::create(&path).map_err(|e| AppError::io(&path, e))?;
    files.push(name.to_string());
    Ok(BufWriter::new(f))
}

/// Runs the recipe for `id`, writing `<id>_*.csv` and `<id>_manifest.json`
/// into `out`.
pub fn reproduce(id: &str, out: &Path, opts: &ReproduceOptions) -> AppResult<Manifest> {
    let started = Instant::now();
    let cfg = load_figure(id, opts)?;
    fs::create_dir_all(out).map_err(|e| AppError::io(out, e))?;
    let pool = opts.workers.map_or_else(ThreadPool::available, ThreadPool::new);
    let scan = cfg.scan_config();

    let mut m = Manifest::new("reproduce", cfg.spec, cfg.steps_per_period);
    m.figure = Some(cfg.figure.clone());
    m.grid = Some(cfg.grid);
    m.horizon_periods = Some(cfg.horizon_periods);
    m.overrides = opts.overrides.clone();
    m.workers = pool.workers();
    m.landmarks = j0_zeros_in(cfg.grid.start, cfg.grid.stop);

    if let Some(ts) = &cfg.time_series {
        time_series(&cfg, ts, &scan, &pool, out, &mut m)?;
    }
    if cfg.min_p1 {
        let result = scan_min_p1(&scan, &pool)?;
        format::write_min_p1_scan(create(out, &format!("{id}_minp1.csv"), &mut m.files)?, &result)?;
        if cfg.spec.n_sites == 3 && cfg.heatmap.is_some() {
            analytic_min_curve(&cfg, &scan, &result.points, out, &mut m)?;
        }
    }
    if let Some(hm) = &cfg.heatmap {
        heatmaps(&cfg, hm, &scan, &pool, out, &mut m)?;
    }
    if cfg.spectrum {
        let result = scan_spectrum(&scan, &pool)?;
        format::write_spectrum_scan(
            create(out, &format!("{id}_spectrum.csv"), &mut m.files)?,
            &result,
        )?;
        m.classifications = result.landmarks.approaches.clone();
        m.warnings.extend(result.warnings);
    }
    m.finish(started, &out.join(format!("{id}_manifest.json")))?;
    Ok(m)
}

fn label(x: f64) -> String {
    format::num(x)
}

fn time_series(
    cfg: &FigureConfig,
    ts: &TimeSeriesPanel,
    scan: &ScanConfig,
    pool: &ThreadPool,
    out: &Path,
    m: &mut Manifest,
) -> AppResult<()> {
    let runs = pool.map(ts.a2_over_omega.len(), |i| {
        let spec = scan.spec_at(ts.a2_over_omega[i]);
        let start = StateVector::localized(spec.n_sites, 1)?;
        let t_end = ts.periods as f64 * spec.period();
        let traj = propagate_decimated(&spec, &start, t_end, cfg.steps_per_period, ts.stride)?;
        let min = floquet_lattice_core::propagator::min_population(&traj, 1)?;
        Ok::<_, floquet_lattice_core::Error>((site_population_series(&traj, 1)?, min))
    });
    for (x, run) in ts.a2_over_omega.iter().zip(runs) {
        let (series, min) = run?;
        let name = format!("{}_p1_vs_t_a2_{}.csv", cfg.figure, label(*x));
        format::write_series(create(out, &name, &mut m.files)?, ["t", "p1"], &series)?;
        m.metrics.insert(format!("time_series_min_p1[a2_over_omega={}]", label(*x)), min);
    }
    Ok(())
}

/// Minimum of the analytic site-1 probability over the same horizon.
fn analytic_min_curve(
    cfg: &FigureConfig,
    scan: &ScanConfig,
    points: &[floquet_lattice_core::experiments::ScanPoint],
    out: &Path,
    m: &mut Manifest,
) -> AppResult<()> {
    let start = StateVector::localized(3, 1)?;
    let mut rows = Vec::with_capacity(points.len());
    let mut worst: f64 = 0.0;
    for p in points {
        let spec = scan.spec_at(p.param);
        let params = effective_params(&spec, &start)?;
        let t_end = cfg.horizon_periods as f64 * spec.period();
        let analytic = if params.k_rate * t_end >= std::f64::consts::PI {
            analytic_min_p1(&params)
        } else {
            analytic_p1(&params, t_end)
        };
        if let Some(num) = p.min_p1 {
            worst = worst.max((num - analytic).abs());
        }
        rows.push((p.param, analytic));
    }
    let name = format!("{}_minp1_analytic.csv", cfg.figure);
    format::write_series(
        create(out, &name, &mut m.files)?,
        [scan.scan_parameter.column_name(), "min_p1"],
        &rows,
    )?;
    m.metrics.insert("minp1_analytic_max_deviation".into(), worst);
    Ok(())
}

/// `(t, P1)` samples.
pub type Series = Vec<(f64, f64)>;

/// Long-form `P1(t, x)` maps from the lattice and from the effective model,
/// plus the largest pointwise deviation over every integrator step.
pub fn heatmap_rows(
    spec: &SystemSpec,
    periods: usize,
    steps_per_period: usize,
    stride: usize,
) -> AppResult<(Series, Series, f64)> {
    let start = StateVector::localized(spec.n_sites, 1)?;
    let params = effective_params(spec, &start)?;
    let mut numeric = Vec::new();
    let mut analytic = Vec::new();
    let mut worst: f64 = 0.0;
    let t_end = periods as f64 * spec.period();
    propagate_with(spec, &start, t_end, steps_per_period, |i, t, a| {
        let p = a[0].norm_sqr();
        let q = analytic_p1(&params, t);
        worst = worst.max((p - q).abs());
        if i % stride == 0 {
            numeric.push((t, p));
            analytic.push((t, q));
        }
    })?;
    Ok((numeric, analytic, worst))
}

fn heatmaps(
    cfg: &FigureConfig,
    hm: &HeatmapPanel,
    scan: &ScanConfig,
    pool: &ThreadPool,
    out: &Path,
    m: &mut Manifest,
) -> AppResult<()> {
    let xs = cfg.grid.values();
    let runs = pool.map(xs.len(), |i| {
        heatmap_rows(&scan.spec_at(xs[i]), hm.periods, cfg.steps_per_period, hm.stride)
    });
    let mut numeric = Vec::new();
    let mut analytic = Vec::new();
    let mut worst: f64 = 0.0;
    for (x, run) in xs.iter().zip(runs) {
        let (n, a, w) = run?;
        worst = worst.max(w);
        numeric.extend(n.into_iter().map(|(t, p)| (t, *x, p)));
        analytic.extend(a.into_iter().map(|(t, p)| (t, *x, p)));
    }
    let column = scan.scan_parameter.column_name();
    let name = format!("{}_heatmap_numeric.csv", cfg.figure);
    format::write_heatmap(create(out, &name, &mut m.files)?, column, &numeric)?;
    let name = format!("{}_heatmap_analytic.csv", cfg.figure);
    format::write_heatmap(create(out, &name, &mut m.files)?, column, &analytic)?;
    m.metrics.insert("heatmap_max_deviation".into(), worst);
    Ok(())
}

/// Paths of the data files listed in a manifest.
pub fn data_files(out: &Path, m: &Manifest) -> Vec<PathBuf> {
    m.files.iter().map(|f| out.join(f)).collect()
}
