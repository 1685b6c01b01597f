//! Exact solution of the boost-to-maximum model along characteristics.
//!
//! With every boost restoring `z_max`, the structured equation is linear
//! along the downward characteristics: a value emitted from the boundary
//! at time `t*` (or carried from the initial density) decays under the
//! hazard `μ(t, z) = d − g'(z) + β·I(t)/N(t)`. The accumulated `g'` part
//! integrates in closed form — along a characteristic,
//! `d/ds ln g(φ(s)) = −g'(φ(s))` — leaving only the exposure integral
//! `∫ I/N` to quadrature. This module is the verification oracle for the
//! finite-volume scheme and must stay independent of it.

use crate::decay::{emission_elapsed, DecayFunction};
use crate::error::Error;
use crate::numerics::{adaptive_simpson, PiecewiseCubic};
use crate::params::ModelParameters;
use crate::real::Real;
use crate::state::Trajectory;
use crate::Result;

const EXPOSURE_REL_TOL: f64 = 1e-9;

/// Histories and ingredients of the characteristic formula.
pub struct CharacteristicInputs<'a, T: Real> {
    /// Boundary inflow history `B(t) = γI + β·(I/N)·R` (the boosting term
    /// vanishes in the no-boost specialization).
    pub b_inflow: PiecewiseCubic<T>,
    /// Prevalence history `I(t)/N(t)`.
    pub i_over_n: PiecewiseCubic<T>,
    /// Exposure hazard coefficient multiplying `I/N` in `μ` (zero when
    /// boosting is off, `multiplier·β` otherwise).
    pub exposure_rate: T,
    pub d: T,
    pub decay: &'a DecayFunction<T>,
    /// Initial density `ψ(z)`.
    pub psi: &'a dyn Fn(T) -> T,
}

impl<'a, T: Real> CharacteristicInputs<'a, T> {
    /// Build the histories from a recorded trajectory of the
    /// boost-to-maximum model.
    pub fn from_trajectory(
        traj: &Trajectory<T>,
        params: &ModelParameters<T>,
        decay: &'a DecayFunction<T>,
        psi: &'a dyn Fn(T) -> T,
    ) -> Self {
        let i_over_n: Vec<T> = traj
            .i
            .iter()
            .zip(&traj.n)
            .map(|(&i, &n)| i / n)
            .collect();
        let scale = params.boost_contact_multiplier * params.beta;
        let b: Vec<T> = traj
            .i
            .iter()
            .zip(traj.n.iter().zip(&traj.r))
            .map(|(&i, (&n, &r))| params.gamma * i + scale * i / n * r)
            .collect();
        Self {
            b_inflow: PiecewiseCubic::from_samples(&traj.t, &b),
            i_over_n: PiecewiseCubic::from_samples(&traj.t, &i_over_n),
            exposure_rate: scale,
            d: params.d,
            decay,
            psi,
        }
    }

    /// Separating characteristic `ζ(t)`: the level reached at time `t` by
    /// the cohort that was at `z_max` at time zero.
    pub fn zeta(&self, t: T) -> Result<T> {
        let (_, z_max) = self.decay.domain();
        self.decay.flow_down(z_max, t)
    }

    fn exposure_integral(&self, from: T, to: T) -> Result<T> {
        if self.exposure_rate == T::zero() {
            return Ok(T::zero());
        }
        let f = |s: T| self.i_over_n.eval(s).unwrap_or(T::nan());
        let v = adaptive_simpson(&f, from, to, T::of(EXPOSURE_REL_TOL))?;
        Ok(self.exposure_rate * v)
    }
}

/// Emission time `t*` of the characteristic through `(t, z)`: the time
/// the boundary value now sitting at `z` left `z_max`. Bisection on the
/// flow, accurate to 1e-10 in elapsed time.
pub fn backtrace_emission_time<T: Real>(
    t: T,
    z: T,
    decay: &DecayFunction<T>,
) -> Result<T> {
    let elapsed = emission_elapsed(z, decay)?;
    if elapsed > t {
        return Err(Error::PreInitialCharacteristic);
    }
    Ok(t - elapsed)
}

/// Density of the boost-to-maximum model at `(t, z)`.
///
/// Inflow branch (`z ≥ ζ(t)`): `B(t*)/g(z)·exp(−d·(t−t*) − λ∫I/N)`, the
/// `g(z_max)/g(z)` dilation having been folded in via the closed-form
/// `g'` integral. Initial branch: `ψ(z0)·g(z0)/g(z)·exp(−d·t − λ∫I/N)`
/// with `z0` the level that decays to `z` in time `t`.
pub fn exact_r_m2<T: Real>(t: T, z: T, inputs: &CharacteristicInputs<'_, T>) -> Result<T> {
    if t < T::zero() {
        return Err(Error::Config("query time must be >= 0".into()));
    }
    let have = inputs.b_inflow.t_end();
    if t > have * (T::one() + T::of(1e-9)) {
        return Err(Error::HistoryTooShort {
            needed: t.as_f64(),
            have: have.as_f64(),
        });
    }
    let (_, z_max) = inputs.decay.domain();
    match backtrace_emission_time(t, z, inputs.decay) {
        Ok(t_star) => {
            let decay_factor =
                (-(inputs.d * (t - t_star)) - inputs.exposure_integral(t_star, t)?).exp();
            Ok(inputs.b_inflow.eval(t_star)? / inputs.decay.eval(z) * decay_factor)
        }
        Err(Error::PreInitialCharacteristic) => {
            let z0 = inputs.decay.flow_up(z, t)?;
            debug_assert!(z0 <= z_max);
            let dilation = inputs.decay.eval(z0) / inputs.decay.eval(z);
            let decay_factor = (-(inputs.d * t) - inputs.exposure_integral(T::zero(), t)?).exp();
            Ok((inputs.psi)(z0) * dilation * decay_factor)
        }
        Err(e) => Err(e),
    }
}

/// Exact density of the no-boosting specialization: inflow `B = γI`,
/// hazard `d` (exposure without boosting has no effect on the level).
pub fn no_boost_exact<T: Real>(
    t: T,
    z: T,
    i_history: &PiecewiseCubic<T>,
    psi: &dyn Fn(T) -> T,
    params: &ModelParameters<T>,
    decay: &DecayFunction<T>,
) -> Result<T> {
    let inputs = CharacteristicInputs {
        b_inflow: i_history.scaled(params.gamma),
        i_over_n: i_history.scaled(T::zero()),
        exposure_rate: T::zero(),
        d: params.d,
        decay,
        psi,
    };
    exact_r_m2(t, z, &inputs)
}
