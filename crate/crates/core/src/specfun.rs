//! Bessel functions of the first kind, integer order, real argument.
//!
//! Small arguments use the ascending power series. Larger arguments use
//! Miller's backward recurrence normalized by `J0 + 2 Σ J_2m = 1`, which is
//! stable in the oscillatory region and needs no asymptotic expansion in the
//! supported range.

use alloc::format;
use core::f64::consts::PI;

use crate::{Error, Result};

pub const MAX_ORDER: u32 = 10;
pub const MAX_ARGUMENT: f64 = 60.0;
pub const MAX_ZERO_INDEX: usize = 5;

/// Below this |x| the power series is used.
const SERIES_LIMIT: f64 = 2.0;
const RESCALE_ABOVE: f64 = 1e250;
const RESCALE_BY: f64 = 1e-250;

/// One evaluation of `J_k(x)` with an error estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BesselEval {
    pub order: u32,
    pub argument: f64,
    pub value: f64,
    pub abs_error_bound: f64,
}

/// `J_k(x)` with a conservative absolute error estimate.
pub fn bessel_j_eval(k: u32, x: f64) -> Result<BesselEval> {
    check_domain(k, x)?;
    let value = bessel_j_unchecked(k, x);
    // Backward recurrence and series are accurate to a few ulps of the
    // normalization sum, which is O(1); scale generously with |x|.
    let abs_error_bound = 64.0 * f64::EPSILON * (1.0 + x.abs());
    Ok(BesselEval {
        order: k,
        argument: x,
        value,
        abs_error_bound,
    })
}

/// `J_k(x)` for `k <= 10` and `|x| <= 60`.
pub fn bessel_j(k: u32, x: f64) -> Result<f64> {
    check_domain(k, x)?;
    Ok(bessel_j_unchecked(k, x))
}

/// The `n`-th positive zero of `J0`, `1 <= n <= 5`, by bisection.
pub fn j0_zero(n: usize) -> Result<f64> {
    if !(1..=MAX_ZERO_INDEX).contains(&n) {
        return Err(Error::Domain {
            name: "zero index",
            detail: format!("n = {n}, supported 1..={MAX_ZERO_INDEX}"),
        });
    }
    // The n-th zero lies in [(n - 3/4)π, (n + 1/4)π], and J0 changes sign
    // exactly once there.
    let mut lo = (n as f64 - 0.75) * PI;
    let mut hi = (n as f64 + 0.25) * PI;
    let mut f_lo = bessel_j_unchecked(0, lo);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if hi - lo <= 4.0 * f64::EPSILON * mid {
            break;
        }
        let f_mid = bessel_j_unchecked(0, mid);
        if f_mid == 0.0 {
            return Ok(mid);
        }
        if (f_mid < 0.0) == (f_lo < 0.0) {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// All positive zeros of `J0` (up to the supported index) inside `[lo, hi]`.
pub fn j0_zeros_in(lo: f64, hi: f64) -> alloc::vec::Vec<f64> {
    (1..=MAX_ZERO_INDEX)
        .filter_map(|n| j0_zero(n).ok())
        .filter(|z| *z >= lo && *z <= hi)
        .collect()
}

fn check_domain(k: u32, x: f64) -> Result<()> {
    if k > MAX_ORDER {
        return Err(Error::Domain {
            name: "order",
            detail: format!("k = {k}, limit is {MAX_ORDER}"),
        });
    }
    if !x.is_finite() || x.abs() > MAX_ARGUMENT {
        return Err(Error::Domain {
            name: "argument",
            detail: format!("x = {x}, limit is |x| <= {MAX_ARGUMENT}"),
        });
    }
    Ok(())
}

pub(crate) fn bessel_j_unchecked(k: u32, x: f64) -> f64 {
    let ax = x.abs();
    let magnitude = if ax < SERIES_LIMIT {
        power_series(k, ax)
    } else {
        miller(k, ax)
    };
    if x < 0.0 && k % 2 == 1 {
        -magnitude
    } else {
        magnitude
    }
}

/// `Σ_m (-1)^m (x/2)^(2m+k) / (m! (m+k)!)`.
fn power_series(k: u32, x: f64) -> f64 {
    let half = 0.5 * x;
    let mut term = 1.0;
    for i in 1..=k {
        term *= half / i as f64;
    }
    let q = -half * half;
    let mut sum = term;
    for m in 1..60u32 {
        term *= q / (m as f64 * (m + k) as f64);
        sum += term;
        if term.abs() <= f64::EPSILON * 1e-3 * sum.abs() {
            break;
        }
    }
    sum
}

/// Miller's backward recurrence for `x >= SERIES_LIMIT`.
fn miller(k: u32, x: f64) -> f64 {
    // J_n(x) is negligible once n - x exceeds ~50 for x <= 60.
    let mut start = libm::ceil(x) as u32 + k + 60;
    if start % 2 == 1 {
        start += 1;
    }

    let mut f_above = 0.0; // f_{n+1}
    let mut f = 1e-30; // f_n, n = start
    let mut even_sum = f; // start is even
    let mut target = 0.0;

    for n in (1..=start).rev() {
        let below = (2.0 * n as f64 / x) * f - f_above;
        f_above = f;
        f = below;
        let index = n - 1;
        if f.abs() > RESCALE_ABOVE {
            f *= RESCALE_BY;
            f_above *= RESCALE_BY;
            even_sum *= RESCALE_BY;
            target *= RESCALE_BY;
        }
        if index == k {
            target = f;
        }
        if index > 0 && index % 2 == 0 {
            even_sum += f;
        }
    }
    target / (f + 2.0 * even_sum)
}
