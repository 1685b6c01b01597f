//! Finite-dimensional reductions of the structured model: the
//! three-compartment waning chain obtained by the method of lines, the
//! classical SIRS system with constant delay, and the SIS-type delay
//! system that the boost-to-maximum model collapses to.

mod dde;
mod mol;

pub use dde::{
    integrate_dde, sirs_dde_rhs, sirs_dde_simulate, sis_dde_rhs, sis_dde_simulate, DdeHistory,
    DelaySystem, SirsDde, SisDde,
};
pub use mol::{mol_rhs, mol_simulate, MolRates, MolState};

use crate::error::Error;
use crate::real::Real;
use crate::Result;

/// Plain time series of a generic ODE/DDE integration.
#[derive(Debug, Clone)]
pub struct Series<T> {
    pub t: Vec<T>,
    pub y: Vec<Vec<T>>,
}

impl<T: Real> Series<T> {
    pub fn last(&self) -> (&T, &[T]) {
        (self.t.last().unwrap(), self.y.last().unwrap())
    }
}

/// Classical fixed-step RK4.
pub fn integrate_ode<T: Real>(
    rhs: &dyn Fn(T, &[T], &mut [T]) -> Result<()>,
    y0: &[T],
    t_end: T,
    dt: T,
) -> Result<Series<T>> {
    if !(dt > T::zero() && t_end > T::zero()) {
        return Err(Error::Config("dt and t_end must be positive".into()));
    }
    let steps = (t_end / dt).as_f64().ceil().max(1.0) as usize;
    let h = t_end / T::from_count(steps);
    let dim = y0.len();
    let mut y = y0.to_vec();
    let mut series = Series {
        t: vec![T::zero()],
        y: vec![y.clone()],
    };
    let mut k1 = vec![T::zero(); dim];
    let mut k2 = vec![T::zero(); dim];
    let mut k3 = vec![T::zero(); dim];
    let mut k4 = vec![T::zero(); dim];
    let mut scratch = vec![T::zero(); dim];
    for n in 0..steps {
        let t = T::from_count(n) * h;
        rk4_step(rhs, t, h, &mut y, &mut k1, &mut k2, &mut k3, &mut k4, &mut scratch)?;
        let t_next = if n + 1 == steps {
            t_end
        } else {
            T::from_count(n + 1) * h
        };
        series.t.push(t_next);
        series.y.push(y.clone());
    }
    Ok(series)
}

#[allow(clippy::too_many_arguments)]
pub(crate) fn rk4_step<T: Real>(
    rhs: &dyn Fn(T, &[T], &mut [T]) -> Result<()>,
    t: T,
    h: T,
    y: &mut [T],
    k1: &mut [T],
    k2: &mut [T],
    k3: &mut [T],
    k4: &mut [T],
    scratch: &mut [T],
) -> Result<()> {
    let half = h / T::of(2.0);
    rhs(t, y, k1)?;
    for i in 0..y.len() {
        scratch[i] = y[i] + half * k1[i];
    }
    rhs(t + half, scratch, k2)?;
    for i in 0..y.len() {
        scratch[i] = y[i] + half * k2[i];
    }
    rhs(t + half, scratch, k3)?;
    for i in 0..y.len() {
        scratch[i] = y[i] + h * k3[i];
    }
    rhs(t + h, scratch, k4)?;
    let sixth = h / T::of(6.0);
    for i in 0..y.len() {
        y[i] = y[i] + sixth * (k1[i] + T::of(2.0) * (k2[i] + k3[i]) + k4[i]);
    }
    Ok(())
}
