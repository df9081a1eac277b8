//! High-frequency effective model of the three-site chain.
//!
//! Keeping only the zeroth Bessel harmonic of the boundary drives leaves a
//! static chain with renormalized couplings `Ω0 J01` and `Ω0 J02`, where
//! `J0k = J0(Ak/ω)`, written in the rotating-frame amplitudes `b_j`:
//!
//! ```text
//! i db1/dt = Ω0 J01 b2
//! i db2/dt = Ω0 (J01 b1 + J02 b3)
//! i db3/dt = Ω0 J02 b2
//! ```
//!
//! The solution is
//!
//! ```text
//! b1 = -(J02/J01) C1 - i (J01/s) (C2 sin Kt - C3 cos Kt)
//! b2 = C2 cos Kt + C3 sin Kt
//! b3 = C1 - i (J02/s) (C2 sin Kt - C3 cos Kt)
//! ```
//!
//! with `s = sqrt(J01² + J02²)` and `K = Ω0 s`. Starting from site 1,
//! `|b1|² = (J02²/s² + J01²/s² cos Kt)²`.

use alloc::vec::Vec;

use crate::propagator::StateVector;
use crate::specfun::bessel_j;
use crate::{Error, Result, SystemSpec, C64};

const I: C64 = C64::new(0.0, 1.0);

/// Renormalized couplings, oscillation rate and integration constants.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EffectiveParams {
    pub j01: f64,
    pub j02: f64,
    pub omega0: f64,
    /// `K = Ω0 sqrt(J01² + J02²)`.
    pub k_rate: f64,
    pub c1: C64,
    pub c2: C64,
    pub c3: C64,
    /// Amplitude on the zero-energy state `(J02, 0, -J01)/s`. Equals
    /// `-(s/J01) C1` whenever `J01 ≠ 0` and stays defined when it vanishes.
    pub dark: C64,
}

impl EffectiveParams {
    fn norm(&self) -> f64 {
        libm::hypot(self.j01, self.j02)
    }

    /// Bright direction `(J01, 0, J02)/s` and dark direction `(J02, 0, -J01)/s`.
    fn directions(&self) -> ([f64; 3], [f64; 3]) {
        let s = self.norm();
        (
            [self.j01 / s, 0.0, self.j02 / s],
            [self.j02 / s, 0.0, -self.j01 / s],
        )
    }

    /// Rotating-frame amplitudes `b(t)`.
    pub fn state_at(&self, t: f64) -> [C64; 3] {
        let (u, v0) = self.directions();
        // C3 = -i (u·b0), C2 = b2(0).
        let bright = I * self.c3;
        let middle = self.c2;
        let (sin, cos) = libm::sincos(self.k_rate * t);
        let mut b = [C64::new(0.0, 0.0); 3];
        for j in [0, 2] {
            b[j] = v0[j] * self.dark + u[j] * (cos * bright - I * sin * middle);
        }
        b[1] = cos * middle - I * sin * bright;
        b
    }
}

/// Fits the integration constants to `initial` (the lab and rotating
/// frames coincide at `t = 0`).
pub fn effective_params(spec: &SystemSpec, initial: &StateVector) -> Result<EffectiveParams> {
    spec.validate()?;
    if spec.n_sites != 3 {
        return Err(Error::InvalidArgument(alloc::format!(
            "the effective model needs n_sites = 3, got {}",
            spec.n_sites
        )));
    }
    if initial.dim() != 3 {
        return Err(Error::DimensionMismatch {
            expected: 3,
            got: initial.dim(),
        });
    }
    let j01 = bessel_j(0, spec.a1 / spec.omega)?;
    let j02 = bessel_j(0, spec.a2 / spec.omega)?;
    let s = libm::hypot(j01, j02);
    if s == 0.0 {
        return Err(Error::DegenerateModel);
    }
    let b0 = initial.amplitudes();
    let bright = (j01 * b0[0] + j02 * b0[2]) / s;
    let dark = (j02 * b0[0] - j01 * b0[2]) / s;
    Ok(EffectiveParams {
        j01,
        j02,
        omega0: spec.omega0,
        k_rate: spec.omega0.abs() * s,
        c1: -(j01 / s) * dark,
        c2: b0[1],
        c3: -I * bright,
        dark,
    })
}

/// `|b1(t)|²` for a start on site 1.
pub fn analytic_p1(params: &EffectiveParams, t: f64) -> f64 {
    let s2 = params.j01 * params.j01 + params.j02 * params.j02;
    let x = (params.j02 * params.j02 + params.j01 * params.j01 * libm::cos(params.k_rate * t)) / s2;
    x * x
}

/// Smallest value of [`analytic_p1`] over all `t`.
pub fn analytic_min_p1(params: &EffectiveParams) -> f64 {
    let a = params.j01 * params.j01;
    let b = params.j02 * params.j02;
    if b <= a {
        0.0
    } else {
        let x = (b - a) / (a + b);
        x * x
    }
}

/// Closed-form samples of `b(t)` on a uniform grid.
#[derive(Debug, Clone, PartialEq)]
pub struct EffectiveTrajectory {
    pub times: Vec<f64>,
    pub states: Vec<[C64; 3]>,
}

/// Samples `b(t)` at `t = i h` for `i = 0..=ceil(t_final / h)`.
pub fn effective_propagate(
    params: &EffectiveParams,
    t_final: f64,
    step: f64,
) -> Result<EffectiveTrajectory> {
    if !(step > 0.0) || !(t_final > 0.0) || !t_final.is_finite() {
        return Err(Error::InvalidArgument(alloc::format!(
            "need t_final > 0 and step > 0, got t_final = {t_final}, step = {step}"
        )));
    }
    let n = libm::ceil(t_final / step - 1e-9) as usize;
    let times: Vec<f64> = (0..=n).map(|i| i as f64 * step).collect();
    let states = times.iter().map(|&t| params.state_at(t)).collect();
    Ok(EffectiveTrajectory { times, states })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::propagator::propagate;
    use core::f64::consts::PI;
    use proptest::prelude::*;

    fn reference(a2: f64) -> SystemSpec {
        SystemSpec {
            a2,
            ..SystemSpec::three_site_reference()
        }
    }

    fn site1() -> StateVector {
        StateVector::localized(3, 1).unwrap()
    }

    fn rhs(p: &EffectiveParams, b: &[C64; 3]) -> [C64; 3] {
        let w = p.omega0;
        [
            -I * w * p.j01 * b[1],
            -I * w * (p.j01 * b[0] + p.j02 * b[2]),
            -I * w * p.j02 * b[1],
        ]
    }

    /// `J0(x) = (1/π) ∫_0^π cos(x sin τ) dτ`, trapezoid rule.
    fn j0_quadrature(x: f64) -> f64 {
        let n = 4000;
        let h = PI / n as f64;
        let f = |tau: f64| (x * tau.sin()).cos();
        let inner: f64 = (1..n).map(|i| f(i as f64 * h)).sum();
        (inner + 0.5 * (f(0.0) + f(PI))) * h / PI
    }

    #[test]
    fn reference_constants() {
        let p = effective_params(&reference(0.0), &site1()).unwrap();
        let j01 = j0_quadrature(2.2);
        assert!((p.j01 - j01).abs() < 1e-12);
        assert!((p.j01 - 0.110362).abs() < 1e-6);
        assert_eq!(p.j02, 1.0);
        let k = (1.0 + j01 * j01).sqrt();
        assert!((p.k_rate - k).abs() < 1e-12);
        assert!((p.k_rate - 1.00607).abs() < 5e-6);
        let s2 = p.j01 * p.j01 + p.j02 * p.j02;
        assert!((p.c1.re + p.j01 * p.j02 / s2).abs() < 1e-15);
        assert_eq!(p.c2, C64::new(0.0, 0.0));
        assert!((p.c3 + I * p.j01 / s2.sqrt()).norm() < 1e-15);
    }

    #[test]
    fn symmetric_drive_constants() {
        let p = effective_params(&reference(22.0), &site1()).unwrap();
        assert!((p.c1 - C64::new(-0.5, 0.0)).norm() < 1e-14);
        assert!((p.c3 + I * core::f64::consts::FRAC_1_SQRT_2).norm() < 1e-14);
        assert!(analytic_p1(&p, PI / p.k_rate) < 1e-28);
    }

    #[test]
    fn constants_at_a_bessel_zero() {
        let z = crate::specfun::j0_zero(1).unwrap();
        let p = effective_params(&reference(10.0 * z), &site1()).unwrap();
        assert!(p.c1.norm() < 1e-12);
        assert!((p.c3.norm() - 1.0).abs() < 1e-10);
        // With J02 = 0 the site-1 probability is cos²(Kt).
        assert!(analytic_p1(&p, PI / (2.0 * p.k_rate)) < 1e-28);
        assert!((analytic_p1(&p, PI / p.k_rate) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn partial_transfer_floor() {
        let spec = SystemSpec {
            a1: 22.0,
            a2: 0.0,
            ..reference(0.0)
        };
        let p = effective_params(&spec, &site1()).unwrap();
        assert_eq!(analytic_p1(&p, 0.0), 1.0);
        let j01 = j0_quadrature(2.2);
        let oracle = ((1.0 - j01 * j01) / (1.0 + j01 * j01)).powi(2);
        let v = analytic_p1(&p, PI / p.k_rate);
        assert!((v - oracle).abs() < 1e-12, "{v} vs {oracle}");
        assert!((v - 0.952445).abs() < 2e-6, "{v}");
    }

    #[test]
    fn degenerate_and_wrong_size() {
        let z = crate::specfun::j0_zero(1).unwrap() * 10.0;
        let mut spec = reference(z);
        spec.a1 = z;
        // J0 at the computed zero is ~1e-16, not exactly 0.
        let p = effective_params(&spec, &site1());
        assert!(p.map(|p| p.k_rate < 1e-14).unwrap_or(true));
        let four = SystemSpec {
            n_sites: 4,
            ..reference(0.0)
        };
        assert!(effective_params(&four, &StateVector::localized(4, 1).unwrap()).is_err());
    }

    #[test]
    fn matches_the_constants_form_of_the_solution() {
        let b0 = StateVector::normalized(
            alloc::vec![C64::new(0.3, 0.2), C64::new(-0.4, 0.5), C64::new(0.1, -0.6)],
            0.0,
        )
        .unwrap();
        let p = effective_params(&reference(13.0), &b0).unwrap();
        let s = p.j01.hypot(p.j02);
        for t in [0.0, 0.7, 3.3, 11.0] {
            let (sin, cos) = (p.k_rate * t).sin_cos();
            let osc = -I * (p.c2 * sin - p.c3 * cos);
            let b = p.state_at(t);
            let b1 = -(p.j02 / p.j01) * p.c1 + (p.j01 / s) * osc;
            let b2 = p.c2 * cos + p.c3 * sin;
            let b3 = p.c1 + (p.j02 / s) * osc;
            assert!((b[0] - b1).norm() < 1e-14);
            assert!((b[1] - b2).norm() < 1e-14);
            assert!((b[2] - b3).norm() < 1e-14);
        }
    }

    #[test]
    fn middle_start_with_one_coupling_off() {
        let z = crate::specfun::j0_zero(1).unwrap() * 10.0;
        let b0 = StateVector::localized(3, 2).unwrap();
        let p = effective_params(&reference(z), &b0).unwrap();
        for t in [0.0, 1.0, 5.0, 20.0] {
            let b = p.state_at(t);
            assert!(b[2].norm() < 1e-14);
            assert!((b[0].norm_sqr() + b[1].norm_sqr() - 1.0).abs() < 1e-14);
        }
        let t = PI / (2.0 * p.k_rate);
        assert!(p.state_at(t)[1].norm() < 1e-14);
    }

    #[test]
    fn periodic_in_the_rabi_time() {
        let p = effective_params(&reference(7.0), &site1()).unwrap();
        let t = 2.0 * PI / p.k_rate;
        assert!((analytic_p1(&p, t) - 1.0).abs() < 1e-12);
        assert!((p.state_at(t)[0].norm_sqr() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn sampled_trajectory() {
        let p = effective_params(&reference(7.0), &site1()).unwrap();
        let tr = effective_propagate(&p, 1.0, 0.1).unwrap();
        assert_eq!(tr.times.len(), 11);
        assert_eq!(tr.states[0][0], C64::new(1.0, 0.0));
        assert!(effective_propagate(&p, 1.0, 0.0).is_err());
    }

    fn worst_modulus_gap(a2: f64) -> [f64; 3] {
        let spec = reference(a2);
        let traj = propagate(&spec, &site1(), 10.0 * spec.period(), 2000).unwrap();
        let p = effective_params(&spec, &site1()).unwrap();
        let mut worst = [0.0f64; 3];
        for (t, a) in traj.times().iter().zip(traj.states()) {
            let b = p.state_at(*t);
            for j in 0..3 {
                worst[j] = worst[j].max((a[j].norm() - b[j].norm()).abs());
            }
        }
        worst
    }

    #[test]
    fn site_one_modulus_tracks_the_lab_frame() {
        for a2 in [0.0, 5.0] {
            let worst = worst_modulus_gap(a2);
            assert!(worst[0] < 0.05, "a2={a2}: {worst:?}");
        }
    }

    #[test]
    fn undriven_middle_site_carries_drive_harmonics() {
        // The middle amplitude picks up the k ≠ 0 harmonics of the site-1
        // drive, which the effective model drops.
        let worst = worst_modulus_gap(0.0);
        assert!(worst[1] > 0.15 && worst[1] < 0.3, "{worst:?}");
    }

    proptest! {
        #[test]
        fn closed_form_solves_the_effective_equations(
            a1 in 0.0f64..60.0,
            a2 in 0.0f64..60.0,
            raw in proptest::collection::vec(-1.0f64..1.0, 6),
            t in 0.0f64..50.0,
        ) {
            let amps: Vec<C64> = (0..3).map(|j| C64::new(raw[2 * j], raw[2 * j + 1])).collect();
            prop_assume!(amps.iter().map(|z| z.norm_sqr()).sum::<f64>() > 0.01);
            let b0 = StateVector::normalized(amps, 0.0).unwrap();
            let p = effective_params(&SystemSpec { a1, a2, ..reference(0.0) }, &b0).unwrap();
            let b = p.state_at(t);
            prop_assert!((b.iter().map(|z| z.norm_sqr()).sum::<f64>() - 1.0).abs() < 1e-12);
            if t == 0.0 {
                for (x, y) in b.iter().zip(b0.amplitudes()) {
                    prop_assert!((x - y).norm() < 1e-14);
                }
            }
            let h = 1e-4;
            let (bp, bm) = (p.state_at(t + h), p.state_at(t - h));
            let f = rhs(&p, &b);
            for j in 0..3 {
                let d = (bp[j] - bm[j]) / (2.0 * h);
                prop_assert!((d - f[j]).norm() < 1e-8);
            }
        }

        #[test]
        fn minimum_over_a_dense_grid(a2 in 0.0f64..60.0) {
            let p = effective_params(&reference(a2), &site1()).unwrap();
            let period = 2.0 * PI / p.k_rate;
            let grid_min = (0..=4000)
                .map(|i| analytic_p1(&p, period * i as f64 / 4000.0))
                .fold(f64::INFINITY, f64::min);
            let m = analytic_min_p1(&p);
            prop_assert!(grid_min >= m - 1e-12);
            prop_assert!(grid_min - m < 1e-5);
        }
    }
}
