//! Method-of-lines reduction: the structured class collapsed onto three
//! grid points, giving the fully-immune / waned / critical chain.
//!
//! `R_F` holds hosts with high immunity (no boosting effect on them),
//! `R_W` intermediate hosts boosted back to `R_F`, and `R_C` hosts at
//! critically low immunity whose boosts land in `R_W` with probability
//! `θ` and in `R_F` otherwise; unboosted `R_C` hosts wane into `S`.

use crate::birth::BirthFunction;
use crate::decay::DecayFunction;
use crate::error::Error;
use crate::params::ModelParameters;
use crate::real::Real;
use crate::reductions::{integrate_ode, Series};
use crate::state::{ModelTag, Trajectory};
use crate::Result;

/// Compartment counts of the reduced chain.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MolState<T> {
    pub s: T,
    pub i: T,
    pub r_f: T,
    pub r_w: T,
    pub r_c: T,
}

impl<T: Real> MolState<T> {
    pub fn total(&self) -> T {
        self.s + self.i + self.r_f + self.r_w + self.r_c
    }

    pub fn immune_total(&self) -> T {
        self.r_f + self.r_w + self.r_c
    }

    fn to_vec(self) -> Vec<T> {
        vec![self.s, self.i, self.r_f, self.r_w, self.r_c]
    }

    fn from_slice(y: &[T]) -> Self {
        Self {
            s: y[0],
            i: y[1],
            r_f: y[2],
            r_w: y[3],
            r_c: y[4],
        }
    }
}

/// Waning rates of the chain and the boost-split probability.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MolRates<T> {
    /// Waning out of the high-immunity class, `g(z_f)/h`.
    pub mu_f: T,
    /// Waning out of the intermediate class, `g(z_w)/h`.
    pub nu_w: T,
    /// Waning out of the critical class (into `S`), `g(z_min)/h`.
    pub sigma_c: T,
    /// Probability that a boost from `R_C` targets `R_W` (else `R_F`).
    pub theta: T,
}

impl<T: Real> MolRates<T> {
    pub fn new(mu_f: T, nu_w: T, sigma_c: T, theta: T) -> Result<Self> {
        if !(mu_f > T::zero() && nu_w > T::zero() && sigma_c > T::zero()) {
            return Err(Error::param("mol rates", "waning rates must be > 0"));
        }
        if !(theta >= T::zero() && theta <= T::one()) {
            return Err(Error::param("theta", "must lie in [0, 1]"));
        }
        Ok(Self {
            mu_f,
            nu_w,
            sigma_c,
            theta,
        })
    }

    /// Rates from the decay speed on a uniform 3-interval split of
    /// `[z_min, z_max]`; the spacing is absorbed into the rates, so a
    /// unit spacing reproduces the plain grid-point values.
    pub fn from_decay(decay: &DecayFunction<T>, theta: T) -> Result<Self> {
        let (z_min, z_max) = decay.domain();
        let h = (z_max - z_min) / T::of(3.0);
        let z_w = z_min + h;
        let z_f = z_min + T::of(2.0) * h;
        Self::new(
            decay.eval(z_f) / h,
            decay.eval(z_w) / h,
            decay.eval(z_min) / h,
            theta,
        )
    }
}

/// Right-hand side of the reduced chain.
pub fn mol_rhs<T: Real>(
    state: &MolState<T>,
    rates: &MolRates<T>,
    params: &ModelParameters<T>,
    birth: &BirthFunction<T>,
) -> Result<MolState<T>> {
    let n = state.total();
    if !(n > T::zero()) {
        return Err(Error::Config(format!(
            "total population must be positive, got {}",
            n.as_f64()
        )));
    }
    let infection = params.beta * state.s * state.i / n;
    let boost = params.boost_contact_multiplier * params.beta * state.i / n;
    let theta = rates.theta;
    Ok(MolState {
        s: birth.eval(n) - infection - params.d * state.s + rates.sigma_c * state.r_c,
        i: infection - params.infective_exit_rate() * state.i,
        r_f: params.gamma * state.i - (rates.mu_f + params.d) * state.r_f
            + boost * ((T::one() - theta) * state.r_c + state.r_w),
        r_w: rates.mu_f * state.r_f - (rates.nu_w + params.d) * state.r_w
            + boost * (theta * state.r_c - state.r_w),
        r_c: rates.nu_w * state.r_w - (rates.sigma_c + params.d) * state.r_c
            - boost * state.r_c,
    })
}

/// Integrate the chain with RK4 and map to an S/I/R trajectory.
pub fn mol_simulate<T: Real>(
    initial: &MolState<T>,
    rates: &MolRates<T>,
    params: &ModelParameters<T>,
    birth: &BirthFunction<T>,
    t_end: T,
    dt: T,
) -> Result<Trajectory<T>> {
    let rhs = |_t: T, y: &[T], out: &mut [T]| -> Result<()> {
        let d = mol_rhs(&MolState::from_slice(y), rates, params, birth)?;
        out.copy_from_slice(&d.to_vec());
        Ok(())
    };
    let series: Series<T> = integrate_ode(&rhs, &initial.to_vec(), t_end, dt)?;
    let mut traj = Trajectory::new(ModelTag::Mol, dt, None);
    for (t, y) in series.t.iter().zip(&series.y) {
        let st = MolState::from_slice(y);
        traj.push_reduced(*t, st.s, st.i, st.immune_total());
    }
    Ok(traj)
}
