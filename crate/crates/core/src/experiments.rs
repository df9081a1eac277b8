//! Parameter scans over a boundary drive amplitude.
//!
//! Grid points are independent; an executor maps over them and results are
//! reassembled in grid order, so output does not depend on scheduling.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::floquet::{
    averaged_populations_from, classify_closest_approach, eigenmodes, grid_minimum, link_branches,
    pair_gap_at, quasienergy_gap, ApproachKind, BranchSet, FloquetMode, MonodromyOperator,
    DEFAULT_GAP_FACTOR, DEFAULT_REFINEMENT_BUDGET,
};
use crate::propagator::{
    check_site, PeriodPropagator, StateVector, DEFAULT_STEPS_PER_PERIOD, MIN_STEPS_PER_PERIOD,
};
use crate::specfun::j0_zeros_in;
use crate::{Error, Result, SystemSpec};

/// `points` evenly spaced values from `start` to `stop` inclusive.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Grid {
    pub start: f64,
    pub stop: f64,
    pub points: usize,
}

impl Grid {
    /// 241 points over `[0, 6]`.
    pub const DEFAULT: Grid = Grid {
        start: 0.0,
        stop: 6.0,
        points: 241,
    };

    pub fn validate(&self) -> Result<()> {
        if !(self.start.is_finite() && self.stop.is_finite()) {
            return Err(Error::InvalidArgument("grid bounds must be finite".into()));
        }
        if self.points < 2 {
            return Err(Error::InvalidArgument("grid needs at least 2 points".into()));
        }
        if !(self.stop > self.start) {
            return Err(Error::InvalidArgument(format!(
                "grid stop {} must exceed start {}",
                self.stop, self.start
            )));
        }
        Ok(())
    }

    pub fn spacing(&self) -> f64 {
        (self.stop - self.start) / (self.points - 1) as f64
    }

    pub fn values(&self) -> Vec<f64> {
        let last = self.points - 1;
        let width = self.stop - self.start;
        (0..self.points)
            .map(|i| {
                if i == last {
                    self.stop
                } else {
                    self.start + width * i as f64 / last as f64
                }
            })
            .collect()
    }
}

/// The drive amplitude that is scanned, in units of `ω`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScanParameter {
    A1,
    #[default]
    A2,
}

impl ScanParameter {
    pub fn column_name(self) -> &'static str {
        match self {
            ScanParameter::A1 => "a1_over_omega",
            ScanParameter::A2 => "a2_over_omega",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScanConfig {
    pub base_spec: SystemSpec,
    #[serde(default)]
    pub scan_parameter: ScanParameter,
    pub grid: Grid,
    #[serde(default = "defaults::horizon_periods")]
    pub horizon_periods: usize,
    #[serde(default = "defaults::steps_per_period")]
    pub steps_per_period: usize,
    #[serde(default = "defaults::initial_site")]
    pub initial_site: usize,
    /// Half-width of the refined window around each `J0` zero.
    #[serde(default = "defaults::refine_half_width")]
    pub refine_half_width: f64,
    /// Refined spacing is the grid spacing divided by this.
    #[serde(default = "defaults::refine_factor")]
    pub refine_factor: usize,
    /// Crossing threshold in units of `ω`.
    #[serde(default = "defaults::gap_factor")]
    pub gap_factor: f64,
    #[serde(default = "defaults::refinement_budget")]
    pub refinement_budget: usize,
}

mod defaults {
    pub fn horizon_periods() -> usize {
        200
    }
    pub fn steps_per_period() -> usize {
        super::DEFAULT_STEPS_PER_PERIOD
    }
    pub fn initial_site() -> usize {
        1
    }
    pub fn refine_half_width() -> f64 {
        0.25
    }
    pub fn refine_factor() -> usize {
        10
    }
    pub fn gap_factor() -> f64 {
        super::DEFAULT_GAP_FACTOR
    }
    pub fn refinement_budget() -> usize {
        super::DEFAULT_REFINEMENT_BUDGET
    }
}

impl ScanConfig {
    pub fn new(base_spec: SystemSpec, grid: Grid) -> Self {
        Self {
            base_spec,
            scan_parameter: ScanParameter::A2,
            grid,
            horizon_periods: defaults::horizon_periods(),
            steps_per_period: defaults::steps_per_period(),
            initial_site: defaults::initial_site(),
            refine_half_width: defaults::refine_half_width(),
            refine_factor: defaults::refine_factor(),
            gap_factor: defaults::gap_factor(),
            refinement_budget: defaults::refinement_budget(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.base_spec.validate()?;
        self.grid.validate()?;
        if self.horizon_periods < 1 {
            return Err(Error::InvalidArgument("horizon_periods must be ≥ 1".into()));
        }
        if self.steps_per_period < MIN_STEPS_PER_PERIOD {
            return Err(Error::InvalidArgument(format!(
                "steps_per_period must be ≥ {MIN_STEPS_PER_PERIOD}"
            )));
        }
        check_site(self.initial_site, self.base_spec.n_sites)?;
        if !(self.refine_half_width >= 0.0) || self.refine_factor == 0 {
            return Err(Error::InvalidArgument("invalid refinement window".into()));
        }
        if !(self.gap_factor > 0.0) {
            return Err(Error::InvalidArgument("gap_factor must be positive".into()));
        }
        for x in [self.grid.start, self.grid.stop] {
            self.spec_at(x).validate()?;
        }
        Ok(())
    }

    /// The base spec with the scanned amplitude set to `x ω`.
    pub fn spec_at(&self, x: f64) -> SystemSpec {
        let mut s = self.base_spec;
        match self.scan_parameter {
            ScanParameter::A1 => s.a1 = x * s.omega,
            ScanParameter::A2 => s.a2 = x * s.omega,
        }
        s
    }

    pub fn gap_threshold(&self) -> f64 {
        self.gap_factor * self.base_spec.omega
    }
}

/// Maps an index range to results, preserving order.
pub trait GridExecutor {
    fn map<T, F>(&self, len: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync;
}

/// Runs every point on the calling thread.
#[derive(Debug, Clone, Copy, Default)]
pub struct Sequential;

impl GridExecutor for Sequential {
    fn map<T, F>(&self, len: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync,
    {
        (0..len).map(f).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeRecord {
    pub branch_id: usize,
    pub quasienergy: f64,
    pub avg_populations: Vec<f64>,
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanPoint {
    pub param: f64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub min_p1: Option<f64>,
    /// Ordered by branch id; empty for Min(P1) scans.
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub modes: Vec<ModeRecord>,
}

impl ScanPoint {
    pub fn quasienergies(&self) -> Vec<f64> {
        self.modes.iter().map(|m| m.quasienergy).collect()
    }
}

/// Closest approach of two branches inside the window around a `J0` zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ApproachReport {
    pub j0_zero: f64,
    pub window: (f64, f64),
    pub branches: (usize, usize),
    pub kind: ApproachKind,
    pub location: f64,
    pub gap: f64,
    pub gap_threshold: f64,
    /// `location - j0_zero`.
    pub offset: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Landmarks {
    pub j0_zeros: Vec<f64>,
    pub approaches: Vec<ApproachReport>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanResult {
    pub config: ScanConfig,
    pub points: Vec<ScanPoint>,
    pub landmarks: Landmarks,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ScanError {
    #[error("invalid scan configuration: {0}")]
    Config(Error),
    /// Points before the failing one (in grid order) are kept.
    #[error("scan failed at parameter {param} after {} points: {source}", completed.len())]
    PointFailed {
        completed: Vec<ScanPoint>,
        param: f64,
        source: Error,
    },
}

impl ScanError {
    pub fn cause(&self) -> &Error {
        match self {
            ScanError::Config(e) => e,
            ScanError::PointFailed { source, .. } => source,
        }
    }
}

fn collect_points(
    params: &[f64],
    results: Vec<Result<ScanPoint>>,
) -> core::result::Result<Vec<ScanPoint>, ScanError> {
    let mut done = Vec::with_capacity(results.len());
    for (p, r) in params.iter().zip(results) {
        match r {
            Ok(point) => done.push(point),
            Err(source) => {
                return Err(ScanError::PointFailed {
                    completed: done,
                    param: *p,
                    source,
                })
            }
        }
    }
    Ok(done)
}

/// Min(P_site) over `horizon_periods` periods for one spec, sampled at every
/// integrator step.
pub fn min_p1_at(spec: &SystemSpec, config: &ScanConfig) -> Result<f64> {
    let p = PeriodPropagator::new(spec, config.steps_per_period)?;
    let start = StateVector::localized(spec.n_sites, config.initial_site)?;
    p.min_population(&start, config.horizon_periods, config.initial_site)
}

pub fn scan_min_p1<E: GridExecutor>(
    config: &ScanConfig,
    exec: &E,
) -> core::result::Result<ScanResult, ScanError> {
    config.validate().map_err(ScanError::Config)?;
    let params = config.grid.values();
    let results = exec.map(params.len(), |i| {
        let x = params[i];
        min_p1_at(&config.spec_at(x), config).map(|m| ScanPoint {
            param: x,
            min_p1: Some(m),
            modes: Vec::new(),
        })
    });
    let points = collect_points(&params, results)?;
    Ok(ScanResult {
        config: *config,
        points,
        landmarks: Landmarks {
            j0_zeros: j0_zeros_in(config.grid.start, config.grid.stop),
            approaches: Vec::new(),
        },
        warnings: Vec::new(),
    })
}

/// Modes with time-averaged populations for one spec.
pub fn spectrum_at(spec: &SystemSpec, steps_per_period: usize) -> Result<Vec<FloquetMode>> {
    let p = PeriodPropagator::new(spec, steps_per_period)?;
    let u = MonodromyOperator::from_period_propagator(&p)?;
    let mut modes = eigenmodes(&u)?;
    for m in modes.iter_mut() {
        m.avg_populations = averaged_populations_from(&p, &m.eigenvector);
    }
    Ok(modes)
}

/// Floquet spectrum over the grid, tracked into branches, with the closest
/// approach inside a refined window around every `J0` zero classified.
pub fn scan_spectrum<E: GridExecutor>(
    config: &ScanConfig,
    exec: &E,
) -> core::result::Result<ScanResult, ScanError> {
    config.validate().map_err(ScanError::Config)?;
    let params = config.grid.values();
    let steps = config.steps_per_period;
    let raw = exec.map(params.len(), |i| spectrum_at(&config.spec_at(params[i]), steps));
    let mut modes = Vec::with_capacity(raw.len());
    let mut done = Vec::new();
    for (x, r) in params.iter().zip(raw) {
        match r {
            Ok(m) => {
                done.push(ScanPoint {
                    param: *x,
                    min_p1: None,
                    modes: Vec::new(),
                });
                modes.push(m);
            }
            Err(source) => {
                return Err(ScanError::PointFailed {
                    completed: done,
                    param: *x,
                    source,
                })
            }
        }
    }
    let omega = config.base_spec.omega;
    let set = link_branches(&params, modes, omega).map_err(|source| ScanError::PointFailed {
        completed: Vec::new(),
        param: params[0],
        source,
    })?;
    let points = points_from_branches(&params, &set);
    let mut warnings = set.warnings.clone();

    let zeros = j0_zeros_in(config.grid.start, config.grid.stop);
    let mut approaches = Vec::new();
    for z in &zeros {
        match classify_near(config, exec, *z) {
            Ok(Some(r)) => approaches.push(r),
            Ok(None) => warnings.push(format!("no closest approach found near J0 zero {z}")),
            Err(source) => {
                return Err(ScanError::PointFailed {
                    completed: points,
                    param: *z,
                    source,
                })
            }
        }
    }
    Ok(ScanResult {
        config: *config,
        points,
        landmarks: Landmarks {
            j0_zeros: zeros,
            approaches,
        },
        warnings,
    })
}

fn points_from_branches(params: &[f64], set: &BranchSet) -> Vec<ScanPoint> {
    params
        .iter()
        .enumerate()
        .map(|(i, x)| ScanPoint {
            param: *x,
            min_p1: None,
            modes: set
                .branches
                .iter()
                .map(|b| {
                    let m = &b.points[i].mode;
                    ModeRecord {
                        branch_id: b.id,
                        quasienergy: m.quasienergy,
                        avg_populations: m.avg_populations.clone(),
                        residual: m.eigen_residual,
                    }
                })
                .collect(),
        })
        .collect()
}

/// Refined grid around `zero`, clipped to the scan range.
pub fn refined_window(config: &ScanConfig, zero: f64) -> Option<Grid> {
    let lo = (zero - config.refine_half_width).max(config.grid.start);
    let hi = (zero + config.refine_half_width).min(config.grid.stop);
    let h = config.grid.spacing() / config.refine_factor as f64;
    let points = libm::round((hi - lo) / h) as usize + 1;
    (points >= 3).then_some(Grid {
        start: lo,
        stop: hi,
        points,
    })
}

fn classify_near<E: GridExecutor>(
    config: &ScanConfig,
    exec: &E,
    zero: f64,
) -> Result<Option<ApproachReport>> {
    let Some(window) = refined_window(config, zero) else {
        return Ok(None);
    };
    let params = window.values();
    let steps = config.steps_per_period;
    let omega = config.base_spec.omega;
    let raw = exec.map(params.len(), |i| {
        let spec = config.spec_at(params[i]);
        crate::floquet::monodromy(&spec, steps).and_then(|u| eigenmodes(&u))
    });
    let modes = raw.into_iter().collect::<Result<Vec<_>>>()?;
    let set = link_branches(&params, modes, omega)?;

    // Pair with the smallest interior local minimum of the gap.
    let mut best: Option<(usize, usize, usize, f64)> = None;
    let n = set.branches.len();
    for a in 0..n {
        for b in a + 1..n {
            let (ba, bb) = (&set.branches[a], &set.branches[b]);
            if let Ok(g) = grid_minimum(ba, bb, omega) {
                let gap = quasienergy_gap(
                    ba.points[g].mode.quasienergy,
                    bb.points[g].mode.quasienergy,
                    omega,
                );
                if best.is_none_or(|(_, _, _, d)| gap < d) {
                    best = Some((a, b, g, gap));
                }
            }
        }
    }
    let Some((a, b, g, _)) = best else {
        return Ok(None);
    };
    let (ba, bb) = (&set.branches[a], &set.branches[b]);
    let ra = ba.points[g].mode.eigenvector.clone();
    let rb = bb.points[g].mode.eigenvector.clone();
    let approach = classify_closest_approach(
        ba,
        bb,
        omega,
        config.gap_threshold(),
        config.refinement_budget,
        |x| pair_gap_at(&config.spec_at(x), steps, [&ra, &rb]),
    )?;
    Ok(Some(ApproachReport {
        j0_zero: zero,
        window: (window.start, window.stop),
        branches: (a, b),
        kind: approach.kind,
        location: approach.location,
        gap: approach.gap,
        gap_threshold: config.gap_threshold(),
        offset: approach.location - zero,
    }))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn reference() -> ScanConfig {
        ScanConfig::new(SystemSpec::three_site_reference(), Grid::DEFAULT)
    }

    #[test]
    fn grid_values() {
        let v = Grid::DEFAULT.values();
        assert_eq!(v.len(), 241);
        assert_eq!(v[0], 0.0);
        assert_eq!(v[240], 6.0);
        assert!((v[96] - 2.4).abs() < 1e-12);
        assert!(Grid { start: 0.0, stop: 1.0, points: 1 }.validate().is_err());
        assert!(Grid { start: 1.0, stop: 1.0, points: 5 }.validate().is_err());
    }

    #[test]
    fn config_validation() {
        let mut c = reference();
        assert!(c.validate().is_ok());
        c.horizon_periods = 0;
        assert!(c.validate().is_err());
        let mut c = reference();
        c.initial_site = 4;
        assert!(c.validate().is_err());
        let mut c = reference();
        c.base_spec.omega = -1.0;
        assert!(matches!(scan_min_p1(&c, &Sequential), Err(ScanError::Config(_))));
    }

    #[test]
    fn scanned_amplitude_is_scaled_by_omega() {
        let mut c = reference();
        assert_eq!(c.spec_at(2.0).a2, 20.0);
        c.scan_parameter = ScanParameter::A1;
        assert_eq!(c.spec_at(2.0).a1, 20.0);
        assert_eq!(c.spec_at(2.0).a2, 0.0);
    }

    #[test]
    fn identical_specs_give_identical_records() {
        let mut c = reference();
        c.base_spec.omega0 = 0.0;
        c.grid = Grid { start: 1.0, stop: 2.0, points: 2 };
        c.horizon_periods = 3;
        let r = scan_min_p1(&c, &Sequential).unwrap();
        assert_eq!(r.points.len(), 2);
        assert_eq!(r.points[0].min_p1, r.points[1].min_p1);
    }

    #[test]
    fn min_p1_scan_records_zeros_in_range() {
        let mut c = reference();
        c.grid = Grid { start: 2.3, stop: 2.5, points: 5 };
        c.horizon_periods = 200;
        let r = scan_min_p1(&c, &Sequential).unwrap();
        assert_eq!(r.landmarks.j0_zeros.len(), 1);
        let at_zero = r.points[2].min_p1.unwrap();
        assert!(at_zero < 0.05, "{at_zero}");
    }

    #[test]
    fn failing_point_keeps_completed_ones() {
        let mut c = reference();
        c.base_spec.a1 = 0.0;
        c.scan_parameter = ScanParameter::A1;
        c.grid = Grid { start: 0.0, stop: 80.0, points: 3 };
        c.steps_per_period = 100;
        c.horizon_periods = 2;
        match scan_min_p1(&c, &Sequential) {
            Err(ScanError::PointFailed { completed, param, source }) => {
                assert!(!completed.is_empty());
                assert!(param > 0.0);
                assert!(source.is_numerical());
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn refined_window_is_clipped() {
        let c = reference();
        let w = refined_window(&c, 2.404825557695773).unwrap();
        assert!((w.spacing() - 0.0025).abs() < 1e-4);
        let mut c = reference();
        c.grid = Grid { start: 2.3, stop: 3.0, points: 29 };
        let w = refined_window(&c, 2.404825557695773).unwrap();
        assert_eq!(w.start, 2.3);
    }

    #[test]
    fn three_site_spectrum_has_a_zero_branch() {
        let mut c = reference();
        c.grid = Grid { start: 1.0, stop: 1.5, points: 6 };
        let r = scan_spectrum(&c, &Sequential).unwrap();
        for p in &r.points {
            assert_eq!(p.modes.len(), 3);
            assert!(p.modes.iter().any(|m| m.quasienergy.abs() < 1e-6));
            assert_eq!(
                p.modes.iter().map(|m| m.branch_id).collect::<Vec<_>>(),
                alloc::vec![0, 1, 2]
            );
        }
        assert!(r.landmarks.j0_zeros.is_empty());
    }
}
