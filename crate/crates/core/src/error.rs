//! Error type shared by all modules.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// A parameter or functional ingredient violates its admissibility
    /// conditions; `name` identifies the offending input.
    #[error("invalid parameter `{name}`: {detail}")]
    InvalidParameter { name: String, detail: String },

    /// A kernel or rate function returned a non-finite value.
    #[error("invalid kernel: non-finite evaluation of {input}")]
    InvalidKernel { input: String },

    /// Kernel atom/continuous weights exceed unit mass at some level.
    #[error("kernel invariant violated: c_max + c0 = {total} > 1 at z = {z}")]
    KernelMassExceedsOne { z: f64, total: f64 },

    /// An immunity level lies outside `[z_min, z_max]`.
    #[error("immunity level {z} outside domain [{z_min}, {z_max}]")]
    OutsideDomain { z: f64, z_min: f64, z_max: f64 },

    /// Adaptive quadrature did not reach the requested tolerance.
    #[error("quadrature failed to converge: {0}")]
    QuadratureNonConvergence(String),

    /// No population equilibrium `b(N) = dN` could be bracketed.
    #[error("no equilibrium: {0}")]
    NoEquilibrium(String),

    /// Total population fell below the extinction floor during a run.
    #[error("population extinction at t = {t} (N = {n})")]
    Extinction { t: f64, n: f64 },

    /// The scheme produced a density below the negativity tolerance;
    /// this indicates a bug or an inadmissible time step, never data.
    #[error("positivity violated at t = {t}: cell {cell} has density {value:e}")]
    PositivityViolated { t: f64, cell: usize, value: f64 },

    /// The queried point lies below the separating characteristic, so it
    /// was emitted before t = 0; the initial-density branch applies.
    #[error("pre-initial characteristic: point predates the inflow branch")]
    PreInitialCharacteristic,

    /// A history interpolant does not cover the requested time.
    #[error("history too short: need t = {needed}, history ends at {have}")]
    HistoryTooShort { needed: f64, have: f64 },

    /// Invalid run configuration (time step, grid, model preconditions).
    #[error("configuration error: {0}")]
    Config(String),

    /// The abstract point has `x̂` too close to zero; the operator is not
    /// defined at the zero element of the state space.
    #[error("degenerate point: |x1 + x2 + ∫x3| = {x_hat:e} below {floor:e}")]
    DegeneratePoint { x_hat: f64, floor: f64 },

    /// Stationary analysis is implemented for the disease-free case only.
    #[error("endemic analysis out of scope: I* must be 0, got {i_star}")]
    EndemicOutOfScope { i_star: f64 },

    /// A normalized model received an unnormalized state.
    #[error("normalization error: {0}")]
    Normalization(String),
}

impl Error {
    pub(crate) fn param(name: &str, detail: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name: name.to_string(),
            detail: detail.into(),
        }
    }
}
