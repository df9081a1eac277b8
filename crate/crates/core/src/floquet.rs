//! One-period propagator, quasi-energies, Floquet modes and branch tracking.
//!
//! Eigenvalues of `U(T, 0)` are written `exp(-i ε T)` with `ε` folded into the
//! zone `(-ω/2, ω/2]`.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::linalg::{inner, norm_sqr, schur, CMatrix};
use crate::model::SystemSpec;
use crate::propagator::{propagate_with, PeriodPropagator, StateVector};
use crate::{Error, Result, C64};

/// Expected bound on `max |U†U - I|`.
pub const UNITARITY_TOLERANCE: f64 = 1e-8;
/// Unitarity residual that is reported as a numerical failure.
pub const UNITARITY_FAILURE: f64 = 1e-6;
/// Maximum accepted `‖U v - exp(-iεT) v‖`.
pub const EIGEN_RESIDUAL_LIMIT: f64 = 1e-7;
/// Crossing threshold as a fraction of `ω`.
pub const DEFAULT_GAP_FACTOR: f64 = 1e-4;
/// Overlaps closer than this are treated as an ambiguous match.
pub const AMBIGUITY_MARGIN: f64 = 1e-3;
pub const DEFAULT_REFINEMENT_BUDGET: usize = 40;

/// `U(T, 0)` for one system.
#[derive(Debug, Clone)]
pub struct MonodromyOperator {
    spec: SystemSpec,
    steps_per_period: usize,
    matrix: CMatrix,
}

impl MonodromyOperator {
    /// Wraps the last sample of a [`PeriodPropagator`].
    pub fn from_period_propagator(p: &PeriodPropagator) -> Result<Self> {
        let op = Self {
            spec: *p.spec(),
            steps_per_period: p.steps_per_period(),
            matrix: p.monodromy().clone(),
        };
        op.check_unitarity()?;
        Ok(op)
    }

    fn check_unitarity(&self) -> Result<()> {
        let r = self.matrix.unitarity_residual();
        if !(r <= UNITARITY_FAILURE) {
            return Err(Error::NumericalFailure(format!(
                "monodromy unitarity residual {r:e} exceeds {UNITARITY_FAILURE:e}; \
                 increase steps_per_period"
            )));
        }
        Ok(())
    }

    pub fn spec(&self) -> &SystemSpec {
        &self.spec
    }

    pub fn steps_per_period(&self) -> usize {
        self.steps_per_period
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.dim()
    }

    pub fn unitarity_residual(&self) -> f64 {
        self.matrix.unitarity_residual()
    }
}

/// Builds `U(T, 0)` column by column from basis-vector propagation.
pub fn monodromy(spec: &SystemSpec, steps_per_period: usize) -> Result<MonodromyOperator> {
    spec.validate()?;
    let n = spec.n_sites;
    let mut columns = Vec::with_capacity(n);
    for site in 1..=n {
        let e = StateVector::localized(n, site)?;
        let end = propagate_with(spec, &e, spec.period(), steps_per_period, |_, _, _| {})?;
        columns.push(end.amplitudes().to_vec());
    }
    let op = MonodromyOperator {
        spec: *spec,
        steps_per_period,
        matrix: CMatrix::from_columns(&columns),
    };
    op.check_unitarity()?;
    Ok(op)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FloquetMode {
    pub quasienergy: f64,
    /// Unit norm; the largest-modulus component is real and positive.
    pub eigenvector: Vec<C64>,
    pub eigen_residual: f64,
    /// `⟨P_j⟩` over one period; empty when not computed.
    pub avg_populations: Vec<f64>,
}

/// Maps `eps` into `(-ω/2, ω/2]`.
pub fn fold_quasienergy(eps: f64, omega: f64) -> f64 {
    let mut e = rem_euclid(eps, omega);
    if e > 0.5 * omega {
        e -= omega;
    }
    e
}

/// Distance between two quasi-energies on the circle of circumference `ω`.
pub fn quasienergy_gap(a: f64, b: f64, omega: f64) -> f64 {
    let d = rem_euclid(a - b, omega);
    d.min(omega - d)
}

fn rem_euclid(x: f64, m: f64) -> f64 {
    let r = libm::fmod(x, m);
    if r < 0.0 {
        r + m
    } else {
        r
    }
}

/// Quasi-energies and eigenvectors of `U`, sorted by ascending `ε`, without
/// time-averaged populations.
pub fn eigenmodes(u: &MonodromyOperator) -> Result<Vec<FloquetMode>> {
    let period = u.spec.period();
    let omega = u.spec.omega;
    let s = schur(&u.matrix)?;
    let n = u.dim();
    let mut modes = Vec::with_capacity(n);
    for j in 0..n {
        let lambda = s.t[(j, j)];
        let quasienergy = fold_quasienergy(-libm::atan2(lambda.im, lambda.re) / period, omega);
        let eigenvector = fix_phase(s.q.column(j));
        let phase = C64::from_polar(1.0, -quasienergy * period);
        let uv = u.matrix.mul_vec(&eigenvector);
        let eigen_residual = libm::sqrt(
            uv.iter()
                .zip(&eigenvector)
                .map(|(a, b)| (a - phase * b).norm_sqr())
                .sum(),
        );
        if !(eigen_residual < EIGEN_RESIDUAL_LIMIT) {
            return Err(Error::NumericalFailure(format!(
                "eigen-relation residual {eigen_residual:e} exceeds {EIGEN_RESIDUAL_LIMIT:e}"
            )));
        }
        modes.push(FloquetMode {
            quasienergy,
            eigenvector,
            eigen_residual,
            avg_populations: Vec::new(),
        });
    }
    modes.sort_by(|a, b| a.quasienergy.total_cmp(&b.quasienergy));
    Ok(modes)
}

/// [`eigenmodes`] with `avg_populations` filled in.
pub fn floquet_modes(u: &MonodromyOperator) -> Result<Vec<FloquetMode>> {
    let mut modes = eigenmodes(u)?;
    for m in modes.iter_mut() {
        m.avg_populations = averaged_populations(&u.spec, m, u.steps_per_period)?;
    }
    Ok(modes)
}

fn fix_phase(mut v: Vec<C64>) -> Vec<C64> {
    let norm = libm::sqrt(norm_sqr(&v));
    let pivot = v
        .iter()
        .copied()
        .enumerate()
        .fold((0, -1.0), |best, (i, z)| {
            if z.norm() > best.1 + 1e-12 {
                (i, z.norm())
            } else {
                best
            }
        })
        .0;
    let p = v[pivot];
    let rot = if p.norm() > 0.0 { p.conj() / p.norm() } else { C64::new(1.0, 0.0) };
    for z in v.iter_mut() {
        *z = *z * rot / norm;
    }
    v
}

/// `⟨P_j⟩ = (1/T) ∫_0^T |a_j|² dt` for the mode started at `t = 0`,
/// trapezoidal rule over the integrator samples.
pub fn averaged_populations(
    spec: &SystemSpec,
    mode: &FloquetMode,
    steps_per_period: usize,
) -> Result<Vec<f64>> {
    let n = spec.n_sites;
    let start = StateVector::normalized(mode.eigenvector.clone(), 0.0)?;
    let mut acc = vec![0.0; n];
    propagate_with(spec, &start, spec.period(), steps_per_period, |i, _, a| {
        let w = if i == 0 || i == steps_per_period { 0.5 } else { 1.0 };
        for (s, z) in acc.iter_mut().zip(a) {
            *s += w * z.norm_sqr();
        }
    })?;
    for s in acc.iter_mut() {
        *s /= steps_per_period as f64;
    }
    Ok(acc)
}

/// Time-averaged populations of each `vector` from stored one-period
/// propagator samples; equal to [`averaged_populations`] up to rounding.
pub fn averaged_populations_from(p: &PeriodPropagator, vector: &[C64]) -> Vec<f64> {
    let n = p.spec().n_sites;
    let s = p.steps_per_period();
    let mut acc = vec![0.0; n];
    for (k, u) in p.samples().iter().enumerate() {
        let w = if k == 0 || k == s { 0.5 } else { 1.0 };
        for (j, a) in u.mul_vec(vector).iter().enumerate() {
            acc[j] += w * a.norm_sqr();
        }
    }
    for x in acc.iter_mut() {
        *x /= s as f64;
    }
    acc
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BranchPoint {
    pub param: f64,
    pub mode: FloquetMode,
}

/// One quasi-energy curve followed through a parameter scan.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Branch {
    pub id: usize,
    pub points: Vec<BranchPoint>,
}

impl Branch {
    pub fn quasienergies(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.mode.quasienergy).collect()
    }

    pub fn params(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.param).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BranchSet {
    pub omega: f64,
    pub branches: Vec<Branch>,
    /// Ambiguous matches that were settled by quasi-energy proximity.
    pub warnings: Vec<String>,
}

/// Connects per-point mode lists into branches by maximal eigenvector
/// overlap. Branch ids follow the `ε` order at the first point.
pub fn link_branches(
    params: &[f64],
    modes: Vec<Vec<FloquetMode>>,
    omega: f64,
) -> Result<BranchSet> {
    if params.len() != modes.len() {
        return Err(Error::InvalidArgument(format!(
            "{} parameters for {} mode sets",
            params.len(),
            modes.len()
        )));
    }
    check_monotone(params)?;
    let mut iter = params.iter().zip(modes);
    let Some((p0, first)) = iter.next() else {
        return Ok(BranchSet {
            omega,
            branches: Vec::new(),
            warnings: Vec::new(),
        });
    };
    let n = first.len();
    let mut branches: Vec<Branch> = first
        .into_iter()
        .enumerate()
        .map(|(id, mode)| Branch {
            id,
            points: vec![BranchPoint { param: *p0, mode }],
        })
        .collect();
    let mut warnings = Vec::new();

    for (param, next) in iter {
        if next.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: next.len(),
            });
        }
        let predicted: Vec<f64> = branches.iter().map(|b| predict(b, *param, omega)).collect();
        let overlap: Vec<Vec<f64>> = branches
            .iter()
            .map(|b| {
                let prev = &b.points.last().unwrap().mode.eigenvector;
                next.iter().map(|m| inner(prev, &m.eigenvector).norm()).collect()
            })
            .collect();
        let mut branch_free = vec![true; n];
        let mut mode_free = vec![true; n];
        let mut assignment = vec![usize::MAX; n];
        for _ in 0..n {
            let mut best = (usize::MAX, usize::MAX, -1.0);
            for (i, row) in overlap.iter().enumerate() {
                if !branch_free[i] {
                    continue;
                }
                for (j, &o) in row.iter().enumerate() {
                    if mode_free[j] && o > best.2 {
                        best = (i, j, o);
                    }
                }
            }
            let (i, mut j, top) = best;
            let rivals: Vec<usize> = (0..n)
                .filter(|&k| mode_free[k] && top - overlap[i][k] < AMBIGUITY_MARGIN)
                .collect();
            if rivals.len() > 1 {
                j = *rivals
                    .iter()
                    .min_by(|&&a, &&b| {
                        let da = quasienergy_gap(next[a].quasienergy, predicted[i], omega);
                        let db = quasienergy_gap(next[b].quasienergy, predicted[i], omega);
                        da.total_cmp(&db)
                    })
                    .unwrap();
                warnings.push(format!(
                    "ambiguous overlap for branch {i} at param {param}: {} candidates within \
                     {AMBIGUITY_MARGIN:e}, chose by quasi-energy proximity",
                    rivals.len()
                ));
            }
            branch_free[i] = false;
            mode_free[j] = false;
            assignment[i] = j;
        }
        let mut next: Vec<Option<FloquetMode>> = next.into_iter().map(Some).collect();
        for (b, j) in branches.iter_mut().zip(&assignment) {
            b.points.push(BranchPoint {
                param: *param,
                mode: next[*j].take().unwrap(),
            });
        }
    }
    Ok(BranchSet {
        omega,
        branches,
        warnings,
    })
}

fn check_monotone(params: &[f64]) -> Result<()> {
    let increasing = params.windows(2).all(|w| w[1] > w[0]);
    let decreasing = params.windows(2).all(|w| w[1] < w[0]);
    if !(increasing || decreasing) || params.iter().any(|p| !p.is_finite()) {
        return Err(Error::InvalidArgument(
            "scan parameters must be finite and strictly monotone".into(),
        ));
    }
    Ok(())
}

/// Linear extrapolation of a branch's quasi-energy to `param`.
fn predict(b: &Branch, param: f64, omega: f64) -> f64 {
    let pts = &b.points;
    let last = &pts[pts.len() - 1];
    if pts.len() < 2 {
        return last.mode.quasienergy;
    }
    let prev = &pts[pts.len() - 2];
    let mut d = last.mode.quasienergy - prev.mode.quasienergy;
    // Unwrap across the zone edge.
    d -= omega * libm::round(d / omega);
    let slope = d / (last.param - prev.param);
    fold_quasienergy(last.mode.quasienergy + slope * (param - last.param), omega)
}

/// Computes modes at each `(param, spec)` and links them into branches.
pub fn track_branches(points: &[(f64, SystemSpec)], steps_per_period: usize) -> Result<BranchSet> {
    let Some((_, first)) = points.first() else {
        return Err(Error::InvalidArgument("empty scan".into()));
    };
    let omega = first.omega;
    if points.iter().any(|(_, s)| s.omega != omega || s.n_sites != first.n_sites) {
        return Err(Error::InvalidArgument(
            "tracked specs must share omega and n_sites".into(),
        ));
    }
    let mut params = Vec::with_capacity(points.len());
    let mut modes = Vec::with_capacity(points.len());
    for (p, spec) in points {
        params.push(*p);
        modes.push(floquet_modes(&monodromy(spec, steps_per_period)?)?);
    }
    link_branches(&params, modes, omega)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ApproachKind {
    Crossing,
    Avoided,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Approach {
    pub kind: ApproachKind,
    pub location: f64,
    pub gap: f64,
}

/// Index of the interior grid point with the smallest gap among local
/// minima of `|ε_a - ε_b|` (leftmost on ties).
pub fn grid_minimum(a: &Branch, b: &Branch, omega: f64) -> Result<usize> {
    if a.points.len() != b.points.len() {
        return Err(Error::DimensionMismatch {
            expected: a.points.len(),
            got: b.points.len(),
        });
    }
    let gaps: Vec<f64> = a
        .points
        .iter()
        .zip(&b.points)
        .map(|(p, q)| quasienergy_gap(p.mode.quasienergy, q.mode.quasienergy, omega))
        .collect();
    let mut best: Option<usize> = None;
    for i in 1..gaps.len().saturating_sub(1) {
        if gaps[i] <= gaps[i - 1] && gaps[i] <= gaps[i + 1] && best.is_none_or(|k| gaps[i] < gaps[k]) {
            best = Some(i);
        }
    }
    best.ok_or(Error::NoLocalMinimum)
}

/// Locates the closest approach of two branches and classifies it.
///
/// The smallest interior local minimum on the grid is refined by
/// golden-section search over its two neighbouring cells, evaluating
/// `gap_at(param)` at most `refinement_budget` times. With a zero budget
/// the grid minimum is reported.
pub fn classify_closest_approach<F>(
    a: &Branch,
    b: &Branch,
    omega: f64,
    gap_threshold: f64,
    refinement_budget: usize,
    mut gap_at: F,
) -> Result<Approach>
where
    F: FnMut(f64) -> Result<f64>,
{
    let g = grid_minimum(a, b, omega)?;
    let grid_gap = quasienergy_gap(
        a.points[g].mode.quasienergy,
        b.points[g].mode.quasienergy,
        omega,
    );
    let mut best = (a.points[g].param, grid_gap);
    if refinement_budget > 0 {
        let (lo, hi) = (a.points[g - 1].param, a.points[g + 1].param);
        let found = golden_section(lo, hi, refinement_budget, &mut gap_at)?;
        if found.1 < best.1 {
            best = found;
        }
    }
    let kind = if best.1 < gap_threshold {
        ApproachKind::Crossing
    } else {
        ApproachKind::Avoided
    };
    Ok(Approach {
        kind,
        location: best.0,
        gap: best.1,
    })
}

/// Minimizes `f` on `[lo, hi]` with `budget` evaluations; returns the best
/// evaluated point.
fn golden_section<F>(lo: f64, hi: f64, budget: usize, f: &mut F) -> Result<(f64, f64)>
where
    F: FnMut(f64) -> Result<f64>,
{
    let r = 0.5 * (libm::sqrt(5.0) - 1.0);
    let (mut a, mut b) = (lo.min(hi), lo.max(hi));
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    if budget == 1 {
        let x = 0.5 * (a + b);
        return Ok((x, f(x)?));
    }
    let mut fc = f(c)?;
    let mut fd = f(d)?;
    let mut best = if fc <= fd { (c, fc) } else { (d, fd) };
    for _ in 2..budget {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = f(c)?;
            if fc < best.1 {
                best = (c, fc);
            }
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = f(d)?;
            if fd < best.1 {
                best = (d, fd);
            }
        }
    }
    Ok(best)
}

/// Gap between the two modes of `spec` that overlap most with the span of
/// `reference`, a pair of orthonormal vectors.
pub fn pair_gap_at(
    spec: &SystemSpec,
    steps_per_period: usize,
    reference: [&[C64]; 2],
) -> Result<f64> {
    let modes = eigenmodes(&monodromy(spec, steps_per_period)?)?;
    let mut weights: Vec<(usize, f64)> = modes
        .iter()
        .enumerate()
        .map(|(k, m)| {
            let w = reference
                .iter()
                .map(|r| inner(r, &m.eigenvector).norm_sqr())
                .sum::<f64>();
            (k, w)
        })
        .collect();
    weights.sort_by(|x, y| y.1.total_cmp(&x.1).then(x.0.cmp(&y.0)));
    let (i, j) = (weights[0].0, weights[1].0);
    Ok(quasienergy_gap(
        modes[i].quasienergy,
        modes[j].quasienergy,
        spec.omega,
    ))
}

/// `2π / T`-periodic phase `exp(-iεT)` of a mode.
pub fn floquet_multiplier(mode: &FloquetMode, spec: &SystemSpec) -> C64 {
    C64::from_polar(1.0, -mode.quasienergy * spec.period())
}

#[cfg(test)]
mod tests {
    use super::*;
    use core::f64::consts::PI;
    use proptest::prelude::*;

    fn reference(a2_over_omega: f64) -> SystemSpec {
        SystemSpec {
            a2: a2_over_omega * 10.0,
            ..SystemSpec::three_site_reference()
        }
    }

    fn static_spec(n_sites: usize) -> SystemSpec {
        SystemSpec {
            n_sites,
            omega0: 1.0,
            nu0: 0.0,
            a1: 0.0,
            a2: 0.0,
            omega: 10.0,
        }
    }

    fn quasienergies(spec: &SystemSpec) -> Vec<f64> {
        eigenmodes(&monodromy(spec, 2000).unwrap())
            .unwrap()
            .iter()
            .map(|m| m.quasienergy)
            .collect()
    }

    #[test]
    fn folding_convention() {
        assert_eq!(fold_quasienergy(5.0, 10.0), 5.0);
        assert_eq!(fold_quasienergy(-5.0, 10.0), 5.0);
        assert!((fold_quasienergy(6.0, 10.0) + 4.0).abs() < 1e-12);
        assert!((fold_quasienergy(-13.0, 10.0) + 3.0).abs() < 1e-12);
        assert!((quasienergy_gap(4.9, -4.9, 10.0) - 0.2).abs() < 1e-12);
    }

    #[test]
    fn decoupled_sites_give_identity() {
        let spec = SystemSpec {
            n_sites: 4,
            omega0: 0.0,
            nu0: 0.0,
            a1: 17.0,
            a2: 3.0,
            omega: 7.0,
        };
        let u = monodromy(&spec, 2000).unwrap();
        assert!(u.matrix().max_abs_diff(&CMatrix::identity(4)) < 1e-9);
        assert!(quasienergies(&spec).iter().all(|e| e.abs() < 1e-9));
    }

    #[test]
    fn static_three_site_spectrum() {
        let eps = quasienergies(&static_spec(3));
        let expected = [-core::f64::consts::SQRT_2, 0.0, core::f64::consts::SQRT_2];
        for (e, x) in eps.iter().zip(expected) {
            assert!((e - x).abs() < 1e-8, "{eps:?}");
        }
    }

    #[test]
    fn static_four_site_spectrum() {
        let eps = quasienergies(&static_spec(4));
        let mut expected: Vec<f64> = (1..=4)
            .map(|k| 2.0 * libm::cos(k as f64 * PI / 5.0))
            .collect();
        expected.sort_by(f64::total_cmp);
        for (e, x) in eps.iter().zip(&expected) {
            assert!((e - x).abs() < 1e-8, "{eps:?}");
        }
    }

    #[test]
    fn static_zero_mode_populations() {
        let u = monodromy(&static_spec(3), 2000).unwrap();
        let modes = floquet_modes(&u).unwrap();
        let p = &modes[1].avg_populations;
        assert!((p[0] - 0.5).abs() < 1e-9 && p[1].abs() < 1e-9 && (p[2] - 0.5).abs() < 1e-9);
    }

    #[test]
    fn dark_mode_of_three_site_chain() {
        for x in [0.0, 1.0, 2.405, 3.7] {
            let spec = reference(x);
            let modes = floquet_modes(&monodromy(&spec, 2000).unwrap()).unwrap();
            let dark = modes.iter().find(|m| m.quasienergy.abs() < 1e-6).expect("dark mode");
            assert!(dark.avg_populations[1] < 0.02, "x={x}");
            if x == 0.0 {
                assert!(dark.avg_populations[0] > 0.5);
            }
        }
    }

    #[test]
    fn floquet_periodicity_and_completeness() {
        let spec = SystemSpec {
            n_sites: 5,
            nu0: 0.2,
            a2: 13.0,
            ..reference(0.0)
        };
        let u = monodromy(&spec, 2000).unwrap();
        assert!(u.unitarity_residual() < UNITARITY_TOLERANCE);
        let modes = floquet_modes(&u).unwrap();
        for m in &modes {
            assert!(m.eigen_residual < EIGEN_RESIDUAL_LIMIT);
            let s: f64 = m.avg_populations.iter().sum();
            assert!((s - 1.0).abs() < 1e-6);
            let start = StateVector::new(m.eigenvector.clone(), 0.0).unwrap();
            let end = propagate_with(&spec, &start, spec.period(), 2000, |_, _, _| {}).unwrap();
            let phase = floquet_multiplier(m, &spec);
            for (a, v) in end.amplitudes().iter().zip(&m.eigenvector) {
                assert!((a - phase * v).norm() < 1e-6);
                assert!((a.norm() - v.norm()).abs() < 1e-6);
            }
        }
        for (i, a) in modes.iter().enumerate() {
            for (j, b) in modes.iter().enumerate() {
                let ip = inner(&a.eigenvector, &b.eigenvector);
                let expected = if i == j { 1.0 } else { 0.0 };
                assert!((ip - C64::new(expected, 0.0)).norm() < 1e-7);
            }
        }
    }

    #[test]
    fn sampled_averages_match_direct() {
        let spec = SystemSpec {
            n_sites: 4,
            a2: 21.0,
            ..reference(0.0)
        };
        let p = PeriodPropagator::new(&spec, 2000).unwrap();
        let u = MonodromyOperator::from_period_propagator(&p).unwrap();
        for m in floquet_modes(&u).unwrap() {
            let fast = averaged_populations_from(&p, &m.eigenvector);
            for (x, y) in fast.iter().zip(&m.avg_populations) {
                assert!((x - y).abs() < 1e-10);
            }
        }
    }

    fn constant_branch(id: usize, eps: f64, params: &[f64]) -> Branch {
        Branch {
            id,
            points: params
                .iter()
                .map(|p| BranchPoint {
                    param: *p,
                    mode: FloquetMode {
                        quasienergy: eps,
                        eigenvector: vec![],
                        eigen_residual: 0.0,
                        avg_populations: vec![],
                    },
                })
                .collect(),
        }
    }

    #[test]
    fn parallel_branches_are_avoided() {
        let params = [0.0, 0.1, 0.2, 0.3, 0.4];
        let a = constant_branch(0, 0.5, &params);
        let b = constant_branch(1, -0.5, &params);
        let r = classify_closest_approach(&a, &b, 10.0, 1e-3, 10, |_| Ok(1.0)).unwrap();
        assert_eq!(r.kind, ApproachKind::Avoided);
        assert_eq!(r.gap, 1.0);
        assert_eq!(r.location, 0.1);
    }

    #[test]
    fn monotone_gap_has_no_local_minimum() {
        let params = [0.0, 0.1, 0.2];
        let mut a = constant_branch(0, 0.0, &params);
        for (k, p) in a.points.iter_mut().enumerate() {
            p.mode.quasienergy = k as f64;
        }
        let b = constant_branch(1, -1.0, &params);
        assert_eq!(grid_minimum(&a, &b, 10.0), Err(Error::NoLocalMinimum));
    }

    #[test]
    fn golden_section_finds_a_kink() {
        let mut count = 0;
        let (x, fx) = golden_section(0.0, 1.0, 40, &mut |x: f64| {
            count += 1;
            Ok((x - 0.3141).abs())
        })
        .unwrap();
        assert_eq!(count, 40);
        assert!((x - 0.3141).abs() < 1e-7 && fx < 1e-7);
    }

    #[test]
    fn single_point_scan_is_identity_matching() {
        let spec = reference(1.0);
        let set = track_branches(&[(1.0, spec)], 2000).unwrap();
        assert_eq!(set.branches.len(), 3);
        let direct = eigenmodes(&monodromy(&spec, 2000).unwrap()).unwrap();
        for (b, m) in set.branches.iter().zip(&direct) {
            assert_eq!(b.points[0].mode.quasienergy, m.quasienergy);
        }
    }

    #[test]
    fn tracking_follows_an_exact_crossing() {
        // Two decoupled two-level blocks whose levels cross linearly.
        let make = |x: f64, swap: bool| {
            let mut m = vec![
                FloquetMode {
                    quasienergy: x,
                    eigenvector: vec![C64::new(1.0, 0.0), C64::new(0.0, 0.0)],
                    eigen_residual: 0.0,
                    avg_populations: vec![],
                },
                FloquetMode {
                    quasienergy: -x,
                    eigenvector: vec![C64::new(0.0, 0.0), C64::new(1.0, 0.0)],
                    eigen_residual: 0.0,
                    avg_populations: vec![],
                },
            ];
            m.sort_by(|a, b| a.quasienergy.total_cmp(&b.quasienergy));
            if swap {
                m.reverse();
            }
            m
        };
        let params = [-0.2, -0.1, 0.1, 0.2];
        let modes = params.iter().map(|&x| make(x, false)).collect();
        let set = link_branches(&params, modes, 10.0).unwrap();
        let e0 = set.branches[0].quasienergies();
        // Branch 0 starts as the +x level and must stay on it.
        assert_eq!(e0, vec![-0.2, -0.1, 0.1, 0.2]);
        assert!(set.warnings.is_empty());
    }

    #[test]
    fn ambiguous_overlaps_use_quasienergy_proximity() {
        let h = C64::new(core::f64::consts::FRAC_1_SQRT_2, 0.0);
        let mode = |e: f64, v: Vec<C64>| FloquetMode {
            quasienergy: e,
            eigenvector: v,
            eigen_residual: 0.0,
            avg_populations: vec![],
        };
        let basis0 = vec![
            mode(-1.0, vec![C64::new(1.0, 0.0), C64::new(0.0, 0.0)]),
            mode(1.0, vec![C64::new(0.0, 0.0), C64::new(1.0, 0.0)]),
        ];
        let basis1 = vec![
            mode(-0.9, vec![h, h]),
            mode(0.9, vec![h, -h]),
        ];
        let set = link_branches(&[0.0, 1.0], vec![basis0, basis1], 10.0).unwrap();
        assert_eq!(set.branches[0].quasienergies(), vec![-1.0, -0.9]);
        assert_eq!(set.branches[1].quasienergies(), vec![1.0, 0.9]);
        assert!(!set.warnings.is_empty());
    }

    #[test]
    fn rejects_non_monotone_grid() {
        let spec = reference(0.0);
        assert!(track_branches(&[(1.0, spec), (0.5, spec), (2.0, spec)], 2000).is_err());
    }

    #[test]
    fn coarse_steps_fail_unitarity() {
        let spec = SystemSpec {
            a1: 400.0,
            ..reference(0.0)
        };
        assert!(monodromy(&spec, 100).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(12))]

        #[test]
        fn spectrum_is_symmetric_without_second_order_coupling(
            n in 2usize..7,
            a1_over_omega in 0.0f64..3.0,
            a2_over_omega in 0.0f64..6.0,
        ) {
            let spec = SystemSpec {
                n_sites: n,
                omega0: 1.0,
                nu0: 0.0,
                a1: a1_over_omega * 10.0,
                a2: a2_over_omega * 10.0,
                omega: 10.0,
            };
            let u = monodromy(&spec, 2000).unwrap();
            prop_assert!(u.unitarity_residual() < UNITARITY_TOLERANCE);
            let eps: Vec<f64> = eigenmodes(&u).unwrap().iter().map(|m| m.quasienergy).collect();
            for (e, f) in eps.iter().zip(eps.iter().rev()) {
                prop_assert!(quasienergy_gap(*e, -*f, spec.omega) < 1e-7, "{:?}", eps);
            }
            if n % 2 == 1 {
                prop_assert!(eps.iter().any(|e| e.abs() < 1e-7));
            }
        }
    }
}
