//! System parameters and the instantaneous tight-binding Hamiltonian
//!
//! ```text
//! H(t) = A1 cos(ωt) |1⟩⟨1| + A2 cos(ωt) |N⟩⟨N|
//!      + Ω0 Σ_j (|j-1⟩⟨j| + h.c.) + ν0 Σ_j (|j-1⟩⟨j+1| + h.c.)
//! ```
//!
//! Only the two boundary sites are driven. Couplings that would reach past
//! either end of the chain are dropped (open boundary).

use alloc::string::ToString;
use core::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use crate::linalg::CMatrix;
use crate::{Error, Result, C64};

/// Lattice geometry, couplings and boundary-drive parameters.
///
/// All couplings and amplitudes are in energy units (ħ = 1); `omega` is an
/// angular frequency.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemSpec {
    pub n_sites: usize,
    /// Nearest-neighbour coupling Ω0.
    pub omega0: f64,
    /// Next-nearest-neighbour (second-order) coupling ν0.
    pub nu0: f64,
    /// Left-boundary drive amplitude.
    pub a1: f64,
    /// Right-boundary drive amplitude.
    pub a2: f64,
    /// Drive angular frequency.
    pub omega: f64,
}

impl SystemSpec {
    /// The three-site parameters used for most of the tunneling-control
    /// figures: `A1 = 22`, `ω = 10`, `Ω0 = 1`, `ν0 = 0`, `A2 = 0`.
    pub const fn three_site_reference() -> Self {
        Self {
            n_sites: 3,
            omega0: 1.0,
            nu0: 0.0,
            a1: 22.0,
            a2: 0.0,
            omega: 10.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_sites < 2 {
            return Err(invalid("n_sites", "must be ≥ 2"));
        }
        for (field, value) in [
            ("omega0", self.omega0),
            ("nu0", self.nu0),
            ("a1", self.a1),
            ("a2", self.a2),
            ("omega", self.omega),
        ] {
            if !value.is_finite() {
                return Err(invalid(field, "must be finite"));
            }
        }
        if self.omega <= 0.0 {
            return Err(invalid("omega", "must be positive"));
        }
        Ok(())
    }

    /// Drive period `T = 2π/ω`.
    pub fn period(&self) -> f64 {
        TAU / self.omega
    }

    /// Diagonal drive energies `(E_1(t), E_N(t))`.
    #[inline]
    pub fn boundary_energies(&self, t: f64) -> (f64, f64) {
        let c = libm::cos(self.omega * t);
        (self.a1 * c, self.a2 * c)
    }

    /// Writes `H(t) a` into `out`, exploiting the band structure.
    #[inline]
    pub(crate) fn apply_hamiltonian(&self, t: f64, a: &[C64], out: &mut [C64]) {
        let n = self.n_sites;
        let (e1, en) = self.boundary_energies(t);
        for j in 0..n {
            let mut acc = C64::new(0.0, 0.0);
            if j >= 1 {
                acc += self.omega0 * a[j - 1];
            }
            if j + 1 < n {
                acc += self.omega0 * a[j + 1];
            }
            if self.nu0 != 0.0 {
                if j >= 2 {
                    acc += self.nu0 * a[j - 2];
                }
                if j + 2 < n {
                    acc += self.nu0 * a[j + 2];
                }
            }
            out[j] = acc;
        }
        out[0] += e1 * a[0];
        out[n - 1] += en * a[n - 1];
    }
}

fn invalid(field: &'static str, reason: &str) -> Error {
    Error::InvalidSpec {
        field,
        reason: reason.to_string(),
    }
}

/// `H(t)` as a dense matrix (real-valued entries stored as complex).
#[derive(Debug, Clone, PartialEq)]
pub struct HamiltonianMatrix {
    pub time: f64,
    pub matrix: CMatrix,
}

impl HamiltonianMatrix {
    pub fn dim(&self) -> usize {
        self.matrix.dim()
    }
}

pub fn hamiltonian_at(spec: &SystemSpec, t: f64) -> Result<HamiltonianMatrix> {
    spec.validate()?;
    let n = spec.n_sites;
    let mut m = CMatrix::zeros(n);
    for j in 0..n {
        if j + 1 < n {
            m[(j, j + 1)] = C64::new(spec.omega0, 0.0);
            m[(j + 1, j)] = C64::new(spec.omega0, 0.0);
        }
        if j + 2 < n {
            m[(j, j + 2)] = C64::new(spec.nu0, 0.0);
            m[(j + 2, j)] = C64::new(spec.nu0, 0.0);
        }
    }
    let (e1, en) = spec.boundary_energies(t);
    m[(0, 0)] += e1;
    m[(n - 1, n - 1)] += en;
    Ok(HamiltonianMatrix { time: t, matrix: m })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn re(h: &HamiltonianMatrix, i: usize, j: usize) -> f64 {
        h.matrix[(i, j)].re
    }

    #[test]
    fn three_site_at_t0() {
        let spec = SystemSpec::three_site_reference();
        let h = hamiltonian_at(&spec, 0.0).unwrap();
        let expected = [[22.0, 1.0, 0.0], [1.0, 0.0, 1.0], [0.0, 1.0, 0.0]];
        for (i, row) in expected.iter().enumerate() {
            for (j, &x) in row.iter().enumerate() {
                assert_eq!(h.matrix[(i, j)], C64::new(x, 0.0));
            }
        }
    }

    #[test]
    fn quarter_period_has_zero_diagonal() {
        let spec = SystemSpec {
            a2: 13.0,
            ..SystemSpec::three_site_reference()
        };
        let h = hamiltonian_at(&spec, spec.period() / 4.0).unwrap();
        for i in 0..3 {
            assert!(re(&h, i, i).abs() < 1e-14);
        }
        assert_eq!(re(&h, 0, 1), 1.0);
        assert_eq!(re(&h, 1, 2), 1.0);
    }

    #[test]
    fn four_site_second_order_entries() {
        let spec = SystemSpec {
            n_sites: 4,
            nu0: 0.2,
            ..SystemSpec::three_site_reference()
        };
        let h = hamiltonian_at(&spec, 0.37).unwrap();
        assert_eq!(re(&h, 0, 2), 0.2);
        assert_eq!(re(&h, 1, 3), 0.2);
        assert_eq!(re(&h, 2, 0), 0.2);
        assert_eq!(re(&h, 0, 3), 0.0);
    }

    #[test]
    fn two_sites_have_no_second_order_terms() {
        let spec = SystemSpec {
            n_sites: 2,
            nu0: 0.5,
            ..SystemSpec::three_site_reference()
        };
        let h = hamiltonian_at(&spec, 0.0).unwrap();
        assert_eq!(re(&h, 0, 0), 22.0);
        assert_eq!(re(&h, 0, 1), 1.0);
        assert_eq!(re(&h, 1, 1), 0.0);
    }

    #[test]
    fn validation_messages() {
        assert!(SystemSpec::three_site_reference().validate().is_ok());
        let bad_n = SystemSpec {
            n_sites: 1,
            ..SystemSpec::three_site_reference()
        };
        assert_eq!(
            alloc::format!("{}", bad_n.validate().unwrap_err()),
            "n_sites must be ≥ 2"
        );
        let bad_omega = SystemSpec {
            omega: 0.0,
            ..SystemSpec::three_site_reference()
        };
        assert_eq!(
            alloc::format!("{}", bad_omega.validate().unwrap_err()),
            "omega must be positive"
        );
        let nan = SystemSpec {
            nu0: f64::NAN,
            ..SystemSpec::three_site_reference()
        };
        assert!(matches!(
            nan.validate(),
            Err(Error::InvalidSpec { field: "nu0", .. })
        ));
        assert!(hamiltonian_at(&bad_n, 0.0).is_err());
    }

    fn arb_spec() -> impl Strategy<Value = SystemSpec> {
        (2usize..8, -2.0f64..2.0, -1.0f64..1.0, -30.0f64..30.0, -30.0f64..30.0, 0.5f64..40.0)
            .prop_map(|(n_sites, omega0, nu0, a1, a2, omega)| SystemSpec {
                n_sites,
                omega0,
                nu0,
                a1,
                a2,
                omega,
            })
    }

    proptest! {
        #[test]
        fn periodic_in_time(spec in arb_spec(), t in -50.0f64..50.0) {
            let h0 = hamiltonian_at(&spec, t).unwrap();
            let h1 = hamiltonian_at(&spec, t + spec.period()).unwrap();
            prop_assert!(h0.matrix.max_abs_diff(&h1.matrix) < 1e-9 * (1.0 + spec.a1.abs() + spec.a2.abs()));
        }

        #[test]
        fn half_period_flips_the_diagonal(spec in arb_spec(), t in -50.0f64..50.0) {
            let h0 = hamiltonian_at(&spec, t).unwrap();
            let h1 = hamiltonian_at(&spec, t + 0.5 * spec.period()).unwrap();
            let tol = 1e-9 * (1.0 + spec.a1.abs() + spec.a2.abs());
            for i in 0..spec.n_sites {
                for j in 0..spec.n_sites {
                    let (a, b) = (h0.matrix[(i, j)], h1.matrix[(i, j)]);
                    if i == j {
                        prop_assert!((a + b).norm() < tol);
                    } else {
                        prop_assert_eq!(a, b);
                    }
                }
            }
        }

        #[test]
        fn hermitian_and_banded(spec in arb_spec(), t in -50.0f64..50.0) {
            let h = hamiltonian_at(&spec, t).unwrap();
            prop_assert_eq!(&h.matrix, &h.matrix.adjoint());
            let n = spec.n_sites;
            for i in 0..n {
                for j in 0..n {
                    let v = h.matrix[(i, j)];
                    prop_assert_eq!(v.im, 0.0);
                    match i.abs_diff(j) {
                        0 if i != 0 && i != n - 1 => prop_assert_eq!(v.re, 0.0),
                        1 => prop_assert_eq!(v.re, spec.omega0),
                        2 => prop_assert_eq!(v.re, spec.nu0),
                        d if d > 2 => prop_assert_eq!(v.re, 0.0),
                        _ => {}
                    }
                }
            }
        }

        #[test]
        fn banded_product_matches_dense(spec in arb_spec(), t in -5.0f64..5.0,
                                         raw in proptest::collection::vec(-1.0f64..1.0, 16)) {
            let n = spec.n_sites;
            let a: alloc::vec::Vec<C64> = (0..n).map(|j| C64::new(raw[2 * j], raw[2 * j + 1])).collect();
            let mut out = alloc::vec![C64::new(0.0, 0.0); n];
            spec.apply_hamiltonian(t, &a, &mut out);
            let dense = hamiltonian_at(&spec, t).unwrap().matrix.mul_vec(&a);
            for (x, y) in out.iter().zip(&dense) {
                prop_assert!((x - y).norm() < 1e-12);
            }
        }
    }
}
