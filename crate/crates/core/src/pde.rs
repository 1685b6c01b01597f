//! Explicit upwind finite-volume stepping of the structured SIRS model.
//!
//! The immune density is transported downward (waning) with edge fluxes
//! taking the upwind value, loses mass to death, and exchanges mass
//! through the boosting kernel at hazard `λ_B = multiplier·β·I/N`. Newly
//! recovered hosts and boost-to-maximum jumps enter as an inflow flux at
//! the top edge; the flux `Λ(t) = g(z_min)·r(t, z_min)` through the bottom
//! edge leaves the structured class and feeds the susceptibles. The
//! scheme is conservative: per step, `R' = γI − Λ − dR` and
//! `N' = b(N) − dN − d_I·I` hold exactly, and every update coefficient is
//! nonnegative under the CFL bound, so nonnegative data stay nonnegative.

use crate::birth::BirthFunction;
use crate::decay::DecayFunction;
use crate::error::Error;
use crate::grid::ImmunityGrid;
use crate::kernel::{kernel_cell_masses, BoostingKernel};
use crate::params::ModelParameters;
use crate::real::Real;
use crate::state::{ImmuneDensity, InitialDensity, ModelTag, State, Trajectory};
use crate::Result;

const CFL_SAFETY: f64 = 0.9;
const EXTINCTION_REL: f64 = 1e-12;
const NEGATIVITY_REL: f64 = 1e-12;

/// Time-step policy for explicit stepping.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TimeStep<T> {
    /// CFL-limited step.
    Auto,
    /// Fixed step; rejected when it exceeds the CFL limit.
    Fixed(T),
}

/// Everything a structured-model run needs.
#[derive(Debug, Clone)]
pub struct SimulationConfig<T> {
    pub params: ModelParameters<T>,
    pub birth: BirthFunction<T>,
    pub decay: DecayFunction<T>,
    pub kernel: BoostingKernel<T>,
    pub grid: ImmunityGrid<T>,
    pub dt: TimeStep<T>,
    pub t_end: T,
    pub s0: T,
    pub i0: T,
    pub psi: InitialDensity<T>,
    pub model: ModelTag,
    pub output_stride: usize,
}

/// Largest admissible explicit step: transport and all linear loss rates
/// jointly below `0.9`, which keeps every update coefficient nonnegative.
/// This is at most `0.9·min Δz / max g` and also keeps
/// `dt·(d + β·multiplier + γ + d_I) ≤ 0.9`.
pub fn cfl_dt<T: Real>(
    grid: &ImmunityGrid<T>,
    decay: &DecayFunction<T>,
    params: &ModelParameters<T>,
) -> T {
    let transport = decay.max_speed() / grid.min_width();
    let rates = params.d
        + params.beta * params.boost_contact_multiplier
        + params.gamma
        + params.d_i;
    T::of(CFL_SAFETY) / (transport + rates)
}

/// Precomputed stepping tables for one configuration.
#[derive(Debug, Clone)]
pub struct PdeSimulator<T> {
    params: ModelParameters<T>,
    birth: BirthFunction<T>,
    grid: ImmunityGrid<T>,
    /// `g` at the cell edges (flux speeds).
    g_edges: Vec<T>,
    /// Whether the kernel moves any mass at all.
    has_boost: bool,
    /// Row-major `(M−1)×M` continuous-exchange weights: entry `(i, j)` is
    /// the mass fraction from source cell `j` landing in cell `i`, already
    /// multiplied by `Δz_j`. The top cell's share travels via the
    /// boundary flux instead, so it has no row here.
    exchange: Vec<T>,
    /// Per-source weight of the boundary inflow: `(atom + top-cell
    /// continuous mass)·Δz_j`.
    inflow_w: Vec<T>,
    /// Stay-put fraction per cell.
    stay: Vec<T>,
    n_floor: T,
    cfl: T,
}

impl<T: Real> PdeSimulator<T> {
    pub fn new(cfg: &SimulationConfig<T>) -> Result<Self> {
        if !cfg.model.is_pde() {
            return Err(Error::Config(format!(
                "model `{}` is not a structured model",
                cfg.model.as_str()
            )));
        }
        if !(cfg.t_end > T::zero()) {
            return Err(Error::Config("t_end must be positive".into()));
        }
        let span_tol = T::of(1e-9) * cfg.params.z_span();
        if (cfg.grid.z_min() - cfg.params.z_min).abs() > span_tol
            || (cfg.grid.z_max() - cfg.params.z_max).abs() > span_tol
        {
            return Err(Error::Config(
                "grid does not cover [z_min, z_max] of the parameters".into(),
            ));
        }
        // The boost-to-maximum tag overrides whatever kernel the
        // configuration carries.
        let kernel = match cfg.model {
            ModelTag::M2 => BoostingKernel::boost_to_max(cfg.params.z_min, cfg.params.z_max),
            _ => cfg.kernel.clone(),
        };
        let grid = cfg.grid.clone();
        let m = grid.n_cells();
        let g_edges: Vec<T> = grid.edges().iter().map(|&e| cfg.decay.eval(e)).collect();
        if g_edges.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidKernel {
                input: "g at a grid edge".into(),
            });
        }
        let has_boost = kernel.has_any_boost();
        let mut exchange = vec![T::zero(); m.saturating_sub(1) * m];
        let mut inflow_w = vec![T::zero(); m];
        let mut stay = vec![T::zero(); m];
        for j in 0..m {
            let masses = kernel_cell_masses(&kernel, grid.centers()[j], &grid)?;
            let w = grid.widths()[j];
            stay[j] = masses.mass_stay;
            inflow_w[j] = (masses.mass_at_zmax + masses.per_cell[m - 1]) * w;
            for i in 0..m - 1 {
                exchange[i * m + j] = masses.per_cell[i] * w;
            }
        }
        let psi = sample_initial_density(&cfg.psi, &cfg.params, &cfg.decay, &grid)?;
        let initial = State::new(cfg.s0, cfg.i0, psi);
        initial.check_admissible(&grid)?;
        let n0 = initial.total_population(&grid);
        Ok(Self {
            params: cfg.params,
            birth: cfg.birth.clone(),
            grid,
            g_edges,
            has_boost,
            exchange,
            inflow_w,
            stay,
            n_floor: T::of(EXTINCTION_REL) * n0,
            cfl: cfl_dt(&cfg.grid, &cfg.decay, &cfg.params),
        })
    }

    pub fn grid(&self) -> &ImmunityGrid<T> {
        &self.grid
    }

    pub fn cfl(&self) -> T {
        self.cfl
    }

    /// Initial state sampled from the configuration's `ψ`.
    pub fn initial_state(&self, cfg: &SimulationConfig<T>) -> Result<State<T>> {
        let psi = sample_initial_density(&cfg.psi, &cfg.params, &cfg.decay, &self.grid)?;
        Ok(State::new(cfg.s0, cfg.i0, psi))
    }

    /// Diagnostic fluxes at a state: `(Λ, B)`.
    pub fn fluxes(&self, state: &State<T>) -> (T, T) {
        let lambda = self.g_edges[0] * state.r[0];
        let n = state.total_population(&self.grid);
        let hazard = self.boost_hazard(state, n);
        (lambda, self.boundary_inflow(state, hazard))
    }

    fn boost_hazard(&self, state: &State<T>, n: T) -> T {
        self.params.boost_contact_multiplier * self.params.beta * state.i / n
    }

    fn boundary_inflow(&self, state: &State<T>, hazard: T) -> T {
        let mut b = self.params.gamma * state.i;
        if self.has_boost {
            let boosted: T = self
                .inflow_w
                .iter()
                .zip(&state.r)
                .map(|(&w, &r)| w * r)
                .sum();
            b = b + hazard * boosted;
        }
        b
    }

    /// One explicit Euler step of the coupled system; `t` is only used to
    /// stamp error reports.
    pub fn step_at(&self, state: &State<T>, dt: T, t: T) -> Result<State<T>> {
        let m = self.grid.n_cells();
        debug_assert_eq!(state.r.len(), m);
        let n = state.total_population(&self.grid);
        if n <= self.n_floor {
            return Err(Error::Extinction {
                t: t.as_f64(),
                n: n.as_f64(),
            });
        }
        let infection = self.params.beta * state.s * state.i / n;
        let hazard = self.boost_hazard(state, n);
        let b_in = self.boundary_inflow(state, hazard);
        let lambda = self.g_edges[0] * state.r[0];

        let widths = self.grid.widths();
        let mut r_new: ImmuneDensity<T> = Vec::with_capacity(m);
        for i in 0..m {
            let flux_in = if i + 1 < m {
                self.g_edges[i + 1] * state.r[i + 1]
            } else {
                b_in
            };
            let flux_out = self.g_edges[i] * state.r[i];
            let mut dr = (flux_in - flux_out) / widths[i] - self.params.d * state.r[i];
            if self.has_boost {
                // Full contact loss, stay-put gain, and the continuous
                // exchange; the top cell's continuous share arrived in
                // flux_in already.
                let mut gain = hazard * (self.stay[i] - T::one()) * state.r[i];
                if i + 1 < m {
                    let row = &self.exchange[i * m..(i + 1) * m];
                    let landed: T = row
                        .iter()
                        .zip(&state.r)
                        .map(|(&w, &r)| w * r)
                        .sum();
                    gain = gain + hazard * landed / widths[i];
                } else {
                    // The stay atom is the only in-cell gain at the top.
                }
                dr = dr + gain;
            }
            r_new.push(state.r[i] + dt * dr);
        }

        let s_new = state.s
            + dt * (self.birth.eval(n) - infection - self.params.d * state.s + lambda);
        let i_new = state.i + dt * (infection - self.params.infective_exit_rate() * state.i);

        let sup = r_new.iter().fold(T::zero(), |a, &v| a.max(v.abs()));
        let tol = T::of(NEGATIVITY_REL) * sup;
        for (cell, &v) in r_new.iter().enumerate() {
            if v < -tol {
                return Err(Error::PositivityViolated {
                    t: t.as_f64(),
                    cell,
                    value: v.as_f64(),
                });
            }
        }
        Ok(State::new(s_new, i_new, r_new))
    }
}

/// One explicit step of the structured model (builds the stepping tables
/// on each call; loops should use [`PdeSimulator`] directly).
pub fn step_m1<T: Real>(state: &State<T>, cfg: &SimulationConfig<T>, dt: T) -> Result<State<T>> {
    let sim = PdeSimulator::new(cfg)?;
    if dt > sim.cfl() * (T::one() + T::of(1e-12)) {
        return Err(Error::Config(format!(
            "dt exceeds CFL limit: {} > {}",
            dt.as_f64(),
            sim.cfl().as_f64()
        )));
    }
    sim.step_at(state, dt, T::zero())
}

/// Run a structured-model simulation to `t_end`.
pub fn simulate<T: Real>(cfg: &SimulationConfig<T>) -> Result<Trajectory<T>> {
    let sim = PdeSimulator::new(cfg)?;
    let dt_target = match cfg.dt {
        TimeStep::Auto => sim.cfl(),
        TimeStep::Fixed(dt) => {
            if !(dt > T::zero()) {
                return Err(Error::Config("dt must be positive".into()));
            }
            if dt > sim.cfl() * (T::one() + T::of(1e-12)) {
                return Err(Error::Config(format!(
                    "dt exceeds CFL limit: {} > {}",
                    dt.as_f64(),
                    sim.cfl().as_f64()
                )));
            }
            dt
        }
    };
    let steps = (cfg.t_end / dt_target).as_f64().ceil().max(1.0) as usize;
    let dt = cfg.t_end / T::from_count(steps);
    let stride = cfg.output_stride.max(1);

    let mut state = sim.initial_state(cfg)?;
    state.check_admissible(&sim.grid)?;
    let mut traj = Trajectory::new(cfg.model, dt, Some(sim.grid.clone()));
    let (lambda, b_in) = sim.fluxes(&state);
    traj.push_pde(T::zero(), &state, &sim.grid, lambda, b_in, true);

    for k in 0..steps {
        let t = T::from_count(k) * dt;
        state = sim.step_at(&state, dt, t)?;
        if (k + 1) % stride == 0 || k + 1 == steps {
            let t_next = if k + 1 == steps {
                cfg.t_end
            } else {
                T::from_count(k + 1) * dt
            };
            let (lambda, b_in) = sim.fluxes(&state);
            traj.push_pde(t_next, &state, &sim.grid, lambda, b_in, true);
        }
    }
    Ok(traj)
}

/// Max residuals of the two conservation identities over a recorded
/// trajectory, by centered differences: `R' = γI − Λ − dR` and
/// `N' = b(N) − dN − d_I·I`.
#[derive(Debug, Clone, Copy)]
pub struct ConservationResidual<T> {
    pub immune: T,
    pub total: T,
}

pub fn conservation_residual<T: Real>(
    traj: &Trajectory<T>,
    params: &ModelParameters<T>,
    birth: &BirthFunction<T>,
) -> Result<ConservationResidual<T>> {
    if traj.len() < 3 {
        return Err(Error::Config(
            "need at least three samples for centered differences".into(),
        ));
    }
    if traj.lambda.len() != traj.len() {
        return Err(Error::Config(
            "conservation residual needs the structured diagnostics".into(),
        ));
    }
    let mut worst_r = T::zero();
    let mut worst_n = T::zero();
    for k in 1..traj.len() - 1 {
        let span = traj.t[k + 1] - traj.t[k - 1];
        let dr = (traj.r[k + 1] - traj.r[k - 1]) / span;
        let rhs_r = params.gamma * traj.i[k] - traj.lambda[k] - params.d * traj.r[k];
        worst_r = worst_r.max((dr - rhs_r).abs());
        let dn = (traj.n[k + 1] - traj.n[k - 1]) / span;
        let rhs_n = birth.eval(traj.n[k]) - params.d * traj.n[k] - params.d_i * traj.i[k];
        worst_n = worst_n.max((dn - rhs_n).abs());
    }
    Ok(ConservationResidual {
        immune: worst_r,
        total: worst_n,
    })
}

/// Sample an initial-density specification to cell averages.
pub fn sample_initial_density<T: Real>(
    psi: &InitialDensity<T>,
    params: &ModelParameters<T>,
    decay: &DecayFunction<T>,
    grid: &ImmunityGrid<T>,
) -> Result<ImmuneDensity<T>> {
    let values = match *psi {
        InitialDensity::Zero => vec![T::zero(); grid.n_cells()],
        InitialDensity::Constant(v) => {
            if v < T::zero() {
                return Err(Error::Config("initial density must be nonnegative".into()));
            }
            vec![v; grid.n_cells()]
        }
        InitialDensity::Gaussian {
            center,
            width,
            mass,
        } => {
            if !(width > T::zero()) || mass < T::zero() {
                return Err(Error::Config(
                    "gaussian profile needs width > 0 and mass >= 0".into(),
                ));
            }
            let norm = mass / (width * (T::of(2.0) * T::PI()).sqrt());
            grid.cell_averages(&|z: T| {
                let u = (z - center) / width;
                norm * (-u * u / T::of(2.0)).exp()
            })
        }
        InitialDensity::SteadyRecovery { i0 } => {
            if i0 < T::zero() {
                return Err(Error::Config("steady_recovery needs i0 >= 0".into()));
            }
            steady_recovery_profile(params.gamma * i0, params.d, decay, grid)?
        }
        InitialDensity::CellAverages(ref cells) => {
            if cells.len() != grid.n_cells() {
                return Err(Error::Config(format!(
                    "initial density has {} cells, grid has {}",
                    cells.len(),
                    grid.n_cells()
                )));
            }
            cells.clone()
        }
    };
    Ok(values)
}

/// Cell averages of the density left behind by a constant inflow
/// `B` at `z_max` under hazard `h`: `B·e^{−h·a(z)}/g(z)` with `a(z)` the
/// elapsed decay time from `z_max` down to `z`.
pub fn steady_recovery_profile<T: Real>(
    inflow: T,
    hazard: T,
    decay: &DecayFunction<T>,
    grid: &ImmunityGrid<T>,
) -> Result<ImmuneDensity<T>> {
    let mut out = Vec::with_capacity(grid.n_cells());
    for w in grid.edges().windows(2) {
        let f = |z: T| -> Result<T> {
            let age = crate::decay::emission_elapsed(z, decay)?;
            Ok(inflow * (-hazard * age).exp() / decay.eval(z))
        };
        let (a, b) = (w[0], w[1]);
        let m = (a + b) / T::of(2.0);
        let v = (f(a)? + T::of(4.0) * f(m)? + f(b)?) / T::of(6.0);
        out.push(v);
    }
    Ok(out)
}
