//! Fixed-step RK4 integration of `i da/dt = H(t) a` in the Wannier basis.
//!
//! The step is always `h = T / steps_per_period`, so samples land on the same
//! drive phases every period. [`PeriodPropagator`] exploits that: it stores
//! the RK4 propagator at every step of one period and replays it, which
//! reproduces the step-by-step trajectory over many periods (the RK4 step is
//! a linear map that depends on `t` only through `cos ωt`) at a fraction of
//! the cost.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::linalg::{norm_sqr, CMatrix};
use crate::model::SystemSpec;
use crate::{Error, Result, C64};

pub const DEFAULT_STEPS_PER_PERIOD: usize = 2000;
pub const MIN_STEPS_PER_PERIOD: usize = 100;
/// Tolerance on `Σ|a_j|² = 1` when a state is constructed.
pub const NORM_TOLERANCE: f64 = 1e-9;
/// Norm drift at which integration is abandoned.
pub const NORM_FAILURE_LIMIT: f64 = 1e-6;

/// Amplitudes `a_j(t)`, `j = 1..N`, at a time `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    amplitudes: Vec<C64>,
    time: f64,
}

impl StateVector {
    /// Fails unless `Σ|a_j|²` is within [`NORM_TOLERANCE`] of one.
    pub fn new(amplitudes: Vec<C64>, time: f64) -> Result<Self> {
        let deviation = (norm_sqr(&amplitudes) - 1.0).abs();
        if !(deviation <= NORM_TOLERANCE) {
            return Err(Error::NotNormalized { deviation });
        }
        Ok(Self { amplitudes, time })
    }

    /// Rescales `amplitudes` to unit norm.
    pub fn normalized(mut amplitudes: Vec<C64>, time: f64) -> Result<Self> {
        let norm = libm::sqrt(norm_sqr(&amplitudes));
        if !(norm > 0.0 && norm.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "cannot normalize a state with norm {norm}"
            )));
        }
        for a in amplitudes.iter_mut() {
            *a /= norm;
        }
        Ok(Self { amplitudes, time })
    }

    /// The Wannier state `|site⟩` (1-based) at `t = 0`.
    pub fn localized(n_sites: usize, site: usize) -> Result<Self> {
        check_site(site, n_sites)?;
        let mut amplitudes = vec![C64::new(0.0, 0.0); n_sites];
        amplitudes[site - 1] = C64::new(1.0, 0.0);
        Ok(Self {
            amplitudes,
            time: 0.0,
        })
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amplitudes
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn norm_sqr(&self) -> f64 {
        norm_sqr(&self.amplitudes)
    }

    /// `P_j = |a_j|²`.
    pub fn populations(&self) -> Vec<f64> {
        self.amplitudes.iter().map(|a| a.norm_sqr()).collect()
    }
}

pub(crate) fn check_site(site: usize, n_sites: usize) -> Result<()> {
    if site == 0 || site > n_sites {
        return Err(Error::SiteOutOfRange { site, n_sites });
    }
    Ok(())
}

/// Classical fourth-order Runge-Kutta stepper with reusable scratch space.
#[derive(Debug, Clone)]
pub struct Stepper {
    spec: SystemSpec,
    k1: Vec<C64>,
    k2: Vec<C64>,
    k3: Vec<C64>,
    k4: Vec<C64>,
    tmp: Vec<C64>,
}

impl Stepper {
    pub fn new(spec: SystemSpec) -> Self {
        let n = spec.n_sites;
        let z = vec![C64::new(0.0, 0.0); n];
        Self {
            spec,
            k1: z.clone(),
            k2: z.clone(),
            k3: z.clone(),
            k4: z.clone(),
            tmp: z,
        }
    }

    /// `-i H(t) a`.
    #[inline]
    fn derivative(spec: &SystemSpec, t: f64, a: &[C64], out: &mut [C64]) {
        spec.apply_hamiltonian(t, a, out);
        for z in out.iter_mut() {
            *z = C64::new(z.im, -z.re);
        }
    }

    /// Advances `a` from `t` to `t + h`. A negative `h` integrates backwards.
    pub fn step(&mut self, a: &mut [C64], t: f64, h: f64) {
        let spec = &self.spec;
        let half = 0.5 * h;
        Self::derivative(spec, t, a, &mut self.k1);
        for ((x, a), k) in self.tmp.iter_mut().zip(a.iter()).zip(&self.k1) {
            *x = a + half * k;
        }
        Self::derivative(spec, t + half, &self.tmp, &mut self.k2);
        for ((x, a), k) in self.tmp.iter_mut().zip(a.iter()).zip(&self.k2) {
            *x = a + half * k;
        }
        Self::derivative(spec, t + half, &self.tmp, &mut self.k3);
        for ((x, a), k) in self.tmp.iter_mut().zip(a.iter()).zip(&self.k3) {
            *x = a + h * k;
        }
        Self::derivative(spec, t + h, &self.tmp, &mut self.k4);
        let w = h / 6.0;
        for (j, aj) in a.iter_mut().enumerate() {
            *aj += w * (self.k1[j] + 2.0 * (self.k2[j] + self.k3[j]) + self.k4[j]);
        }
    }
}

/// Uniformly sampled solution of the amplitude equations.
#[derive(Debug, Clone)]
pub struct Trajectory {
    spec: SystemSpec,
    times: Vec<f64>,
    states: Vec<Vec<C64>>,
    step_size: f64,
    stride: usize,
    /// Per-site minimum of `|a_j|²` over every integrator step, including
    /// steps dropped by decimation.
    site_minima: Vec<f64>,
}

impl Trajectory {
    /// Wraps externally produced samples; minima are taken over `states`.
    pub fn from_samples(
        spec: SystemSpec,
        times: Vec<f64>,
        states: Vec<Vec<C64>>,
        step_size: f64,
    ) -> Self {
        let mut site_minima = vec![f64::INFINITY; spec.n_sites];
        for s in &states {
            for (m, a) in site_minima.iter_mut().zip(s) {
                *m = m.min(a.norm_sqr());
            }
        }
        Self {
            spec,
            times,
            states,
            step_size,
            stride: 1,
            site_minima,
        }
    }

    pub fn spec(&self) -> &SystemSpec {
        &self.spec
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn states(&self) -> &[Vec<C64>] {
        &self.states
    }

    /// Integrator step `h`.
    pub fn step_size(&self) -> f64 {
        self.step_size
    }

    /// Number of integrator steps between stored samples.
    pub fn stride(&self) -> usize {
        self.stride
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn final_state(&self) -> Option<StateVector> {
        let t = *self.times.last()?;
        Some(StateVector {
            amplitudes: self.states.last()?.clone(),
            time: t,
        })
    }
}

fn check_steps(steps_per_period: usize) -> Result<()> {
    if steps_per_period < MIN_STEPS_PER_PERIOD {
        return Err(Error::InvalidArgument(format!(
            "steps_per_period = {steps_per_period}, must be ≥ {MIN_STEPS_PER_PERIOD}"
        )));
    }
    Ok(())
}

/// Integrates from `initial.time()` to (at least) `t_final`, calling
/// `observe(step_index, t, amplitudes)` at every integrator step including
/// the initial one. Returns the final state.
///
/// The number of steps is rounded up so the grid stays uniform; the last
/// sample may overshoot `t_final` by less than one step.
pub fn propagate_with<F>(
    spec: &SystemSpec,
    initial: &StateVector,
    t_final: f64,
    steps_per_period: usize,
    mut observe: F,
) -> Result<StateVector>
where
    F: FnMut(usize, f64, &[C64]),
{
    spec.validate()?;
    check_steps(steps_per_period)?;
    if initial.dim() != spec.n_sites {
        return Err(Error::DimensionMismatch {
            expected: spec.n_sites,
            got: initial.dim(),
        });
    }
    let t0 = initial.time;
    if !(t_final > t0) {
        return Err(Error::InvalidArgument(format!(
            "t_final = {t_final} must exceed the initial time {t0}"
        )));
    }
    let h = spec.period() / steps_per_period as f64;
    let n_steps = libm::ceil((t_final - t0) / h - 1e-9).max(1.0) as usize;

    let norm0 = initial.norm_sqr();
    let mut stepper = Stepper::new(*spec);
    let mut a = initial.amplitudes.clone();
    observe(0, t0, &a);
    for i in 0..n_steps {
        let t = t0 + i as f64 * h;
        stepper.step(&mut a, t, h);
        let t_next = t0 + (i + 1) as f64 * h;
        let drift = (norm_sqr(&a) - norm0).abs();
        if !(drift <= NORM_FAILURE_LIMIT) {
            return Err(Error::IntegrationFailure {
                time: t_next,
                drift,
                limit: NORM_FAILURE_LIMIT,
            });
        }
        observe(i + 1, t_next, &a);
    }
    Ok(StateVector {
        amplitudes: a,
        time: t0 + n_steps as f64 * h,
    })
}

/// Integrates and keeps every sample.
pub fn propagate(
    spec: &SystemSpec,
    initial: &StateVector,
    t_final: f64,
    steps_per_period: usize,
) -> Result<Trajectory> {
    propagate_decimated(spec, initial, t_final, steps_per_period, 1)
}

/// Integrates and keeps every `stride`-th sample (the first and last are
/// always kept). Per-site minima still cover every step.
pub fn propagate_decimated(
    spec: &SystemSpec,
    initial: &StateVector,
    t_final: f64,
    steps_per_period: usize,
    stride: usize,
) -> Result<Trajectory> {
    if stride == 0 {
        return Err(Error::InvalidArgument("stride must be ≥ 1".into()));
    }
    let mut times = Vec::new();
    let mut states = Vec::new();
    let mut site_minima = vec![f64::INFINITY; spec.n_sites];
    let mut last_kept = None;
    let last = propagate_with(spec, initial, t_final, steps_per_period, |i, t, a| {
        for (m, z) in site_minima.iter_mut().zip(a) {
            *m = m.min(z.norm_sqr());
        }
        if i % stride == 0 {
            times.push(t);
            states.push(a.to_vec());
            last_kept = Some(i);
        }
    })?;
    if times.last() != Some(&last.time) {
        times.push(last.time);
        states.push(last.amplitudes);
    }
    Ok(Trajectory {
        spec: *spec,
        times,
        states,
        step_size: spec.period() / steps_per_period as f64,
        stride,
        site_minima,
    })
}

/// Minimum of `|a_site|²` (1-based site) over the trajectory.
pub fn min_population(traj: &Trajectory, site: usize) -> Result<f64> {
    if traj.is_empty() {
        return Err(Error::EmptyTrajectory);
    }
    check_site(site, traj.spec.n_sites)?;
    Ok(traj.site_minima[site - 1])
}

/// `(t, |a_site(t)|²)` for every stored sample.
pub fn site_population_series(traj: &Trajectory, site: usize) -> Result<Vec<(f64, f64)>> {
    check_site(site, traj.spec.n_sites)?;
    Ok(traj
        .times
        .iter()
        .zip(&traj.states)
        .map(|(t, s)| (*t, s[site - 1].norm_sqr()))
        .collect())
}

/// The RK4 propagator `U(t_k, 0)` at every step `t_k = k T / S`,
/// `k = 0..=S`, of the first drive period.
#[derive(Debug, Clone)]
pub struct PeriodPropagator {
    spec: SystemSpec,
    steps_per_period: usize,
    samples: Vec<CMatrix>,
}

impl PeriodPropagator {
    /// Propagates every basis vector over one period.
    pub fn new(spec: &SystemSpec, steps_per_period: usize) -> Result<Self> {
        spec.validate()?;
        check_steps(steps_per_period)?;
        let n = spec.n_sites;
        let mut samples = vec![CMatrix::zeros(n); steps_per_period + 1];
        for col in 0..n {
            let e = StateVector::localized(n, col + 1)?;
            propagate_with(spec, &e, spec.period(), steps_per_period, |k, _, a| {
                for (row, z) in a.iter().enumerate() {
                    samples[k][(row, col)] = *z;
                }
            })?;
        }
        Ok(Self {
            spec: *spec,
            steps_per_period,
            samples,
        })
    }

    pub fn spec(&self) -> &SystemSpec {
        &self.spec
    }

    pub fn steps_per_period(&self) -> usize {
        self.steps_per_period
    }

    /// `U(T, 0)`.
    pub fn monodromy(&self) -> &CMatrix {
        &self.samples[self.steps_per_period]
    }

    /// `U(t_k, 0)` for `k = 0..=steps_per_period`.
    pub fn samples(&self) -> &[CMatrix] {
        &self.samples
    }

    /// Replays the period propagator for `periods` periods starting from
    /// `initial` at `t = 0`, calling `observe(t, amplitude_of_site)` at every
    /// integrator step (1-based site).
    pub fn observe_site<F>(
        &self,
        initial: &StateVector,
        periods: usize,
        site: usize,
        mut observe: F,
    ) -> Result<()>
    where
        F: FnMut(f64, C64),
    {
        check_site(site, self.spec.n_sites)?;
        if initial.dim() != self.spec.n_sites {
            return Err(Error::DimensionMismatch {
                expected: self.spec.n_sites,
                got: initial.dim(),
            });
        }
        let s = self.steps_per_period;
        let period = self.spec.period();
        let h = period / s as f64;
        let norm0 = initial.norm_sqr();
        let mut a = initial.amplitudes.clone();
        for m in 0..periods {
            for k in 0..s {
                let row = self.samples[k].row(site - 1);
                let amp: C64 = row.iter().zip(&a).map(|(u, x)| u * x).sum();
                observe(m as f64 * period + k as f64 * h, amp);
            }
            a = self.monodromy().mul_vec(&a);
            let drift = (norm_sqr(&a) - norm0).abs();
            if !(drift <= NORM_FAILURE_LIMIT) {
                return Err(Error::IntegrationFailure {
                    time: (m + 1) as f64 * period,
                    drift,
                    limit: NORM_FAILURE_LIMIT,
                });
            }
        }
        observe(periods as f64 * period, a[site - 1]);
        Ok(())
    }

    /// Minimum of `|a_site|²` over every integrator step of `periods` drive
    /// periods, starting from `initial` at `t = 0`.
    pub fn min_population(&self, initial: &StateVector, periods: usize, site: usize) -> Result<f64> {
        let mut min = f64::INFINITY;
        self.observe_site(initial, periods, site, |_, amp| {
            min = min.min(amp.norm_sqr());
        })?;
        Ok(min)
    }
}
