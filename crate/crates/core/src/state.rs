//! Simulation state and recorded trajectories.

use crate::error::Error;
use crate::grid::ImmunityGrid;
use crate::real::Real;
use crate::Result;

/// Cell-average density values of the structured immune population,
/// in individuals per immunity unit.
pub type ImmuneDensity<T> = Vec<T>;

/// Which model a run or trajectory belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelTag {
    /// Full transport + jump-kernel model.
    M1,
    /// Boost-to-maximum special case.
    M2,
    /// Three-compartment waning chain (method of lines).
    Mol,
    /// SIRS with constant delay.
    SirsDde,
    /// SIS-type system with constant delay.
    SisDde,
}

impl ModelTag {
    pub fn is_pde(self) -> bool {
        matches!(self, ModelTag::M1 | ModelTag::M2)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            ModelTag::M1 => "m1",
            ModelTag::M2 => "m2",
            ModelTag::Mol => "mol",
            ModelTag::SirsDde => "sirs-dde",
            ModelTag::SisDde => "sis-dde",
        }
    }
}

/// Instantaneous state `(S, I, r(·))` on a fixed immunity grid.
#[derive(Debug, Clone, PartialEq)]
pub struct State<T> {
    pub s: T,
    pub i: T,
    pub r: ImmuneDensity<T>,
}

impl<T: Real> State<T> {
    pub fn new(s: T, i: T, r: ImmuneDensity<T>) -> Self {
        Self { s, i, r }
    }

    /// Total immune population `R = Σ r_i·Δz_i`.
    pub fn total_immune(&self, grid: &ImmunityGrid<T>) -> T {
        grid.integrate(&self.r)
    }

    /// Total population `N = S + I + R`; the zero state is excluded, so a
    /// vanishing total is an error at the call sites that enforce it.
    pub fn total_population(&self, grid: &ImmunityGrid<T>) -> T {
        self.s + self.i + self.total_immune(grid)
    }

    /// Basic admissibility: nonnegative compartments (densities up to the
    /// scheme's negativity tolerance) and positive total population.
    pub fn check_admissible(&self, grid: &ImmunityGrid<T>) -> Result<()> {
        if !(self.s.is_finite() && self.i.is_finite()) {
            return Err(Error::Config("non-finite S or I".into()));
        }
        if self.s < T::zero() || self.i < T::zero() {
            return Err(Error::Config("S and I must be nonnegative".into()));
        }
        let sup = self
            .r
            .iter()
            .fold(T::zero(), |a, &v| a.max(v.abs()));
        let tol = T::of(1e-12) * sup;
        for (cell, &v) in self.r.iter().enumerate() {
            if !v.is_finite() || v < -tol {
                return Err(Error::PositivityViolated {
                    t: 0.0,
                    cell,
                    value: v.as_f64(),
                });
            }
        }
        if self.total_population(grid) <= T::zero() {
            return Err(Error::Config("total population must be positive".into()));
        }
        Ok(())
    }
}

/// Initial immune-density profile `ψ(z)`, sampled to cell averages.
#[derive(Debug, Clone, PartialEq)]
pub enum InitialDensity<T> {
    Zero,
    /// Constant density value on the whole interval.
    Constant(T),
    /// Gaussian bump with total mass `mass` (before domain truncation).
    Gaussian { center: T, width: T, mass: T },
    /// Density left by a constant past incidence `I ≡ i0` with no
    /// boosting: `γ·i0·e^{−d·a(z)}/g(z)` where `a(z)` is the age of the
    /// cohort currently sitting at level `z`.
    SteadyRecovery { i0: T },
    /// Precomputed cell averages on the run's grid.
    CellAverages(Vec<T>),
}

/// Time series of a run: columnar samples plus the per-sample diagnostic
/// fluxes of the structured models.
#[derive(Debug, Clone)]
pub struct Trajectory<T> {
    pub model: ModelTag,
    pub dt: T,
    pub t: Vec<T>,
    pub s: Vec<T>,
    pub i: Vec<T>,
    pub r: Vec<T>,
    pub n: Vec<T>,
    /// Immunity-loss flux `Λ(t) = g(z_min)·r(t, z_min)`; empty for the
    /// reduced (non-structured) models.
    pub lambda: Vec<T>,
    /// Boundary inflow `B(t)` at `z_max`; empty for the reduced models.
    pub b_inflow: Vec<T>,
    /// Density field per sample; empty for the reduced models.
    pub density: Vec<ImmuneDensity<T>>,
    pub grid: Option<ImmunityGrid<T>>,
}

impl<T: Real> Trajectory<T> {
    pub fn new(model: ModelTag, dt: T, grid: Option<ImmunityGrid<T>>) -> Self {
        Self {
            model,
            dt,
            t: Vec::new(),
            s: Vec::new(),
            i: Vec::new(),
            r: Vec::new(),
            n: Vec::new(),
            lambda: Vec::new(),
            b_inflow: Vec::new(),
            density: Vec::new(),
            grid,
        }
    }

    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    pub(crate) fn push_reduced(&mut self, t: T, s: T, i: T, r: T) {
        debug_assert!(self.t.last().map_or(true, |&last| t > last));
        self.t.push(t);
        self.s.push(s);
        self.i.push(i);
        self.r.push(r);
        self.n.push(s + i + r);
    }

    pub(crate) fn push_pde(
        &mut self,
        t: T,
        state: &State<T>,
        grid: &ImmunityGrid<T>,
        lambda: T,
        b_inflow: T,
        keep_density: bool,
    ) {
        debug_assert!(self.t.last().map_or(true, |&last| t > last));
        let r_tot = state.total_immune(grid);
        self.t.push(t);
        self.s.push(state.s);
        self.i.push(state.i);
        self.r.push(r_tot);
        self.n.push(state.s + state.i + r_tot);
        self.lambda.push(lambda);
        self.b_inflow.push(b_inflow);
        if keep_density {
            self.density.push(state.r.clone());
        }
    }

    pub fn final_time(&self) -> Option<T> {
        self.t.last().copied()
    }
}
