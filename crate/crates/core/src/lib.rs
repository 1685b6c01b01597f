//! Immuno-epidemiological SIRS dynamics with an immunity-structured
//! recovered population.
//!
//! The recovered class is structured by a continuous immunity level
//! `z ∈ [z_min, z_max]`. Immunity wanes at speed `g(z)` toward `z_min`
//! (where hosts become susceptible again) and is boosted on contact with
//! infectives by a jump kernel `p(z, z̃)` made of an atom at `z_max`, a
//! continuous part `p0`, and a "no effect" atom at `z̃` itself. The crate
//! provides:
//!
//! - the full transport + jump model (`m1`) and its boost-to-maximum
//!   special case (`m2`), stepped by a positivity-preserving upwind
//!   finite-volume scheme ([`pde`]);
//! - an exact characteristic solution of `m2` used as a verification
//!   oracle ([`oracle`]);
//! - the finite-dimensional reductions: a three-compartment waning chain
//!   and two constant-delay systems ([`reductions`]);
//! - disease-free equilibrium and threshold analysis ([`equilibria`]);
//! - the nonlinear operator of the abstract formulation together with its
//!   directional derivative and a finite-difference check ([`operator`]).
//!
//! All numerics are generic over the scalar type through [`Real`]; the
//! aliases at the crate root pin the common double-precision choice.

pub mod birth;
pub mod decay;
pub mod equilibria;
pub mod error;
pub mod grid;
pub mod kernel;
pub mod numerics;
pub mod operator;
pub mod oracle;
pub mod params;
pub mod pde;
pub mod real;
pub mod reductions;
pub mod state;
pub mod validate;

pub use birth::BirthFunction;
pub use decay::{flow_characteristic, transit_time, DecayFunction};
pub use equilibria::{
    classify_dfe, compute_r0, compute_r0_tilde, dfe_report, find_n_star, linear_growth_rate,
    stationary_r_profile, stationary_residual, Classification, EquilibriumReport,
};
pub use error::Error;
pub use grid::ImmunityGrid;
pub use kernel::{kernel_cell_masses, BoostingKernel, CellMasses, LevelFunction, P0Family};
pub use numerics::PiecewiseCubic;
pub use operator::{eval_dq, eval_q, fd_directional, kernel_apply, AbstractPoint};
pub use oracle::{backtrace_emission_time, exact_r_m2, no_boost_exact, CharacteristicInputs};
pub use params::ModelParameters;
pub use pde::{
    cfl_dt, conservation_residual, sample_initial_density, simulate, steady_recovery_profile,
    step_m1, ConservationResidual, PdeSimulator, SimulationConfig, TimeStep,
};
pub use real::Real;
pub use reductions::{
    integrate_dde, integrate_ode, mol_rhs, mol_simulate, sirs_dde_rhs, sirs_dde_simulate,
    sis_dde_rhs, sis_dde_simulate, DdeHistory, DelaySystem, MolRates, MolState, Series, SirsDde,
    SisDde,
};
pub use state::{ImmuneDensity, InitialDensity, ModelTag, State, Trajectory};
pub use validate::{validate_model, AssumptionCheck, ValidationReport};

/// Result alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;

// Concrete double-precision aliases for the main entry types.
pub type ModelParameters64 = ModelParameters<f64>;
pub type BirthFunction64 = BirthFunction<f64>;
pub type DecayFunction64 = DecayFunction<f64>;
pub type BoostingKernel64 = BoostingKernel<f64>;
pub type ImmunityGrid64 = ImmunityGrid<f64>;
pub type State64 = State<f64>;
pub type Trajectory64 = Trajectory<f64>;
pub type SimulationConfig64 = SimulationConfig<f64>;
pub type EquilibriumReport64 = EquilibriumReport<f64>;
