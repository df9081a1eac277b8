use alloc::string::String;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    /// A [`SystemSpec`](crate::SystemSpec) field violates its constraint.
    #[error("{field} {reason}")]
    InvalidSpec { field: &'static str, reason: String },

    /// Argument outside the supported domain of a special function.
    #[error("{name} out of range: {detail}")]
    Domain { name: &'static str, detail: String },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("state is not normalized (|sum |a_j|^2 - 1| = {deviation:e})")]
    NotNormalized { deviation: f64 },

    #[error("state has {got} amplitudes but the lattice has {expected} sites")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("site {site} out of range 1..={n_sites}")]
    SiteOutOfRange { site: usize, n_sites: usize },

    #[error("trajectory is empty")]
    EmptyTrajectory,

    /// The norm drifted past the failure limit; the step is too coarse.
    #[error("integration failure at t = {time}: norm drift {drift:e} exceeds {limit:e}")]
    IntegrationFailure { time: f64, drift: f64, limit: f64 },

    #[error("numerical failure: {0}")]
    NumericalFailure(String),

    #[error("effective model is degenerate: J0(A1/omega) and J0(A2/omega) both vanish")]
    DegenerateModel,

    #[error("no local minimum of the quasi-energy gap in range")]
    NoLocalMinimum,
}

impl Error {
    /// True for failures of the numerics themselves (as opposed to bad input).
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::IntegrationFailure { .. } | Error::NumericalFailure(_) | Error::NoLocalMinimum
        )
    }
}
