//! Coherent control of tunneling in a tight-binding chain whose two boundary
//! sites are driven by `A cos(ωt)` fields.
//!
//! The crate is `no_std` (with `alloc`) and contains only numerics:
//!
//! - [`specfun`]: Bessel functions of the first kind and zeros of `J0`.
//! - [`model`]: system parameters and the instantaneous Hamiltonian.
//! - [`propagator`]: fixed-step RK4 integration of `i da/dt = H(t) a`.
//! - [`floquet`]: one-period propagator, quasi-energies, time-averaged
//!   populations, branch tracking and crossing classification.
//! - [`effective`]: the three-site high-frequency model in closed form.
//! - [`experiments`]: parameter scans over the right-boundary drive.
//!
//! File formats, the worker pool and the command-line tool live in the
//! `floquet-lattice` crate.

#![cfg_attr(not(test), no_std)]
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod effective;
mod error;
pub mod experiments;
pub mod floquet;
pub mod linalg;
pub mod model;
pub mod propagator;
pub mod specfun;

pub use error::Error;
pub use model::SystemSpec;

/// Complex amplitude type used throughout.
pub type C64 = num_complex::Complex64;

pub type Result<T, E = Error> = core::result::Result<T, E>;
