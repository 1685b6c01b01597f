//! Constant-delay systems and their method-of-steps integrator.
//!
//! The delay `τ` is the immunity duration `∫ 1/g`. Lagged values come
//! from cubic Hermite interpolation of the integrator's own dense output
//! (O(h⁴), below the RK4 error); times before zero query the supplied
//! initial history. The exposure integral of the SIS-type system rides
//! along as an extra state component, `A' = I(t) − I(t−τ)`, so it carries
//! exactly the integrator's accuracy.

use std::collections::VecDeque;

use crate::birth::BirthFunction;
use crate::error::Error;
use crate::params::ModelParameters;
use crate::real::Real;
use crate::reductions::Series;
use crate::state::{ModelTag, Trajectory};
use crate::Result;

/// A delayed system `y'(t) = f(t, y(t), y(t−τ))`.
pub trait DelaySystem<T: Real> {
    fn dim(&self) -> usize;
    fn tau(&self) -> T;
    fn rhs(&self, t: T, y: &[T], lagged: &[T], dydt: &mut [T]) -> Result<()>;
}

struct Knot<T> {
    t: T,
    y: Vec<T>,
    f: Vec<T>,
}

/// Lagged-state store: initial history for `t ≤ 0`, Hermite-interpolated
/// integration knots afterwards, trimmed to a window spanning the delay.
pub struct DdeHistory<'a, T: Real> {
    tau: T,
    init: Box<dyn Fn(T) -> Vec<T> + 'a>,
    knots: VecDeque<Knot<T>>,
}

impl<'a, T: Real> DdeHistory<'a, T> {
    pub fn new(tau: T, init: impl Fn(T) -> Vec<T> + 'a) -> Self {
        Self {
            tau,
            init: Box::new(init),
            knots: VecDeque::new(),
        }
    }

    pub fn tau(&self) -> T {
        self.tau
    }

    fn push_knot(&mut self, t: T, y: Vec<T>, f: Vec<T>) {
        debug_assert!(self.knots.back().map_or(true, |k| t > k.t));
        self.knots.push_back(Knot { t, y, f });
        // keep a window of τ plus slack behind the newest knot
        let cutoff = t - self.tau - self.tau;
        while self
            .knots
            .front()
            .map_or(false, |k| k.t < cutoff && self.knots.len() > 4)
        {
            self.knots.pop_front();
        }
    }

    /// State at an arbitrary past time.
    pub fn value_at(&self, t: T) -> Result<Vec<T>> {
        let first = match self.knots.front() {
            Some(k) => k.t,
            None => return Ok((self.init)(t)),
        };
        if t <= first {
            return Ok((self.init)(t));
        }
        let last = self.knots.back().unwrap();
        if t >= last.t {
            let slack = T::of(1e-9) * self.tau.max(T::one());
            if t > last.t + slack {
                return Err(Error::HistoryTooShort {
                    needed: t.as_f64(),
                    have: last.t.as_f64(),
                });
            }
            return Ok(last.y.clone());
        }
        // binary search for the knot interval containing t
        let (mut lo, mut hi) = (0usize, self.knots.len() - 1);
        while hi - lo > 1 {
            let mid = (lo + hi) / 2;
            if self.knots[mid].t <= t {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let (a, b) = (&self.knots[lo], &self.knots[hi]);
        let h = b.t - a.t;
        let u = (t - a.t) / h;
        let u2 = u * u;
        let u3 = u2 * u;
        let two = T::of(2.0);
        let three = T::of(3.0);
        let h00 = two * u3 - three * u2 + T::one();
        let h10 = u3 - two * u2 + u;
        let h01 = three * u2 - two * u3;
        let h11 = u3 - u2;
        Ok((0..a.y.len())
            .map(|i| h00 * a.y[i] + h10 * h * a.f[i] + h01 * b.y[i] + h11 * h * b.f[i])
            .collect())
    }

    /// State one delay in the past.
    pub fn lagged(&self, t: T) -> Result<Vec<T>> {
        self.value_at(t - self.tau)
    }
}

/// Classical SIRS system with constant delay: recovered hosts who survive
/// the immunity period re-enter the susceptible class after `τ`.
pub struct SirsDde<'a, T> {
    pub params: ModelParameters<T>,
    pub birth: &'a BirthFunction<T>,
    pub tau: T,
}

/// Right-hand side of the delayed SIRS system at state `(S, I, R)`.
pub fn sirs_dde_rhs<T: Real>(
    t: T,
    state: &[T; 3],
    hist: &DdeHistory<'_, T>,
    params: &ModelParameters<T>,
    birth: &BirthFunction<T>,
    tau: T,
) -> Result<[T; 3]> {
    let lag = hist.value_at(t - tau)?;
    let (s, i, r) = (state[0], state[1], state[2]);
    let n = s + i + r;
    if !(n > T::zero()) {
        return Err(Error::Config("total population must be positive".into()));
    }
    let survival = (-params.d * tau).exp();
    let returning = params.gamma * lag[1] * survival;
    let infection = params.beta * s * i / n;
    Ok([
        birth.eval(n) - infection - params.d * s + returning,
        infection - params.infective_exit_rate() * i,
        params.gamma * i - returning - params.d * r,
    ])
}

impl<'a, T: Real> DelaySystem<T> for SirsDde<'a, T> {
    fn dim(&self) -> usize {
        3
    }

    fn tau(&self) -> T {
        self.tau
    }

    fn rhs(&self, _t: T, y: &[T], lagged: &[T], dydt: &mut [T]) -> Result<()> {
        let (s, i, r) = (y[0], y[1], y[2]);
        let n = s + i + r;
        if !(n > T::zero()) {
            return Err(Error::Config("total population must be positive".into()));
        }
        let survival = (-self.params.d * self.tau).exp();
        let returning = self.params.gamma * lagged[1] * survival;
        let infection = self.params.beta * s * i / n;
        dydt[0] = self.birth.eval(n) - infection - self.params.d * s + returning;
        dydt[1] = infection - self.params.infective_exit_rate() * i;
        dydt[2] = self.params.gamma * i - returning - self.params.d * r;
        Ok(())
    }
}

/// SIS-type delay system of the boost-to-maximum model on a normalized
/// population (`N ≡ 1`, no disease-induced death). State is
/// `(S, I, A)` with `A(t) = ∫_{t−τ}^{t} I` carried as a state variable.
pub struct SisDde<T> {
    pub params: ModelParameters<T>,
    pub tau: T,
}

impl<T: Real> SisDde<T> {
    pub fn new(params: ModelParameters<T>, tau: T) -> Result<Self> {
        if params.d_i != T::zero() {
            return Err(Error::Config(
                "the delayed SIS system assumes no disease-induced death (d_I = 0)".into(),
            ));
        }
        Ok(Self { params, tau })
    }
}

/// Right-hand side of the delayed SIS system at state `(S, I)`; the
/// exposure integral `A(t)` comes from the history store.
pub fn sis_dde_rhs<T: Real>(
    t: T,
    state: &[T; 2],
    hist: &DdeHistory<'_, T>,
    params: &ModelParameters<T>,
    tau: T,
) -> Result<[T; 2]> {
    let system = SisDde::new(*params, tau)?;
    let a_now = hist.value_at(t)?[2];
    let lag = hist.value_at(t - tau)?;
    let mut out = [T::zero(); 3];
    system.rhs(t, &[state[0], state[1], a_now], &lag, &mut out)?;
    Ok([out[0], out[1]])
}

impl<T: Real> DelaySystem<T> for SisDde<T> {
    fn dim(&self) -> usize {
        3
    }

    fn tau(&self) -> T {
        self.tau
    }

    fn rhs(&self, _t: T, y: &[T], lagged: &[T], dydt: &mut [T]) -> Result<()> {
        let (s, i, a) = (y[0], y[1], y[2]);
        if (s + i).abs() > T::one() + T::of(1e-9) {
            return Err(Error::Normalization(format!(
                "S + I = {} exceeds the unit population",
                (s + i).as_f64()
            )));
        }
        let p = &self.params;
        let (s_lag, i_lag) = (lagged[0], lagged[1]);
        let r_lag = T::one() - s_lag - i_lag;
        let return_flow = i_lag
            * (p.gamma + p.beta * r_lag)
            * (-p.d * self.tau - p.beta * a).exp();
        dydt[0] = p.d * (T::one() - s) - p.beta * i * s + return_flow;
        dydt[1] = p.beta * i * s - (p.gamma + p.d) * i;
        dydt[2] = i - i_lag;
        Ok(())
    }
}

/// Method-of-steps RK4 for a delayed system. `dt` must divide the delay
/// exactly (no silent rounding); lagged stage values interpolate the
/// stored dense output.
pub fn integrate_dde<T: Real>(
    system: &dyn DelaySystem<T>,
    history_init: impl Fn(T) -> Vec<T>,
    t_end: T,
    dt: T,
) -> Result<Series<T>> {
    let tau = system.tau();
    if !(dt > T::zero() && t_end > T::zero() && tau > T::zero()) {
        return Err(Error::Config("dt, t_end and tau must be positive".into()));
    }
    let ratio = tau / dt;
    let k = ratio.as_f64().round();
    if k < 1.0 || (ratio.as_f64() - k).abs() > 1e-9 * k {
        return Err(Error::Config(format!(
            "dt = {} does not divide the delay tau = {} exactly",
            dt.as_f64(),
            tau.as_f64()
        )));
    }
    let dim = system.dim();
    let mut hist = DdeHistory::new(tau, &history_init);
    let mut y = history_init(T::zero());
    if y.len() != dim {
        return Err(Error::Config(format!(
            "history returns dimension {}, system has {}",
            y.len(),
            dim
        )));
    }
    let mut f = vec![T::zero(); dim];
    let lag0 = hist.value_at(-tau)?;
    system.rhs(T::zero(), &y, &lag0, &mut f)?;
    hist.push_knot(T::zero(), y.clone(), f.clone());

    let steps = (t_end / dt).as_f64().ceil().max(1.0) as usize;
    let mut series = Series {
        t: vec![T::zero()],
        y: vec![y.clone()],
    };
    let mut k1 = vec![T::zero(); dim];
    let mut k2 = vec![T::zero(); dim];
    let mut k3 = vec![T::zero(); dim];
    let mut k4 = vec![T::zero(); dim];
    let mut stage = vec![T::zero(); dim];
    for n in 0..steps {
        let t = T::from_count(n) * dt;
        let t_next = if n + 1 == steps {
            t_end
        } else {
            T::from_count(n + 1) * dt
        };
        let h = t_next - t;
        let half = h / T::of(2.0);

        let lag = hist.lagged(t)?;
        system.rhs(t, &y, &lag, &mut k1)?;
        for i in 0..dim {
            stage[i] = y[i] + half * k1[i];
        }
        let lag = hist.lagged(t + half)?;
        system.rhs(t + half, &stage, &lag, &mut k2)?;
        for i in 0..dim {
            stage[i] = y[i] + half * k2[i];
        }
        system.rhs(t + half, &stage, &lag, &mut k3)?;
        for i in 0..dim {
            stage[i] = y[i] + h * k3[i];
        }
        let lag = hist.lagged(t_next)?;
        system.rhs(t_next, &stage, &lag, &mut k4)?;
        let sixth = h / T::of(6.0);
        for i in 0..dim {
            y[i] = y[i] + sixth * (k1[i] + T::of(2.0) * (k2[i] + k3[i]) + k4[i]);
        }

        let lag = hist.lagged(t_next)?;
        system.rhs(t_next, &y, &lag, &mut f)?;
        hist.push_knot(t_next, y.clone(), f.clone());
        series.t.push(t_next);
        series.y.push(y.clone());
    }
    Ok(series)
}

/// Run the delayed SIRS system from a constant pre-history and map to a
/// trajectory.
pub fn sirs_dde_simulate<T: Real>(
    params: &ModelParameters<T>,
    birth: &BirthFunction<T>,
    tau: T,
    s0: T,
    i0: T,
    r0: T,
    t_end: T,
    dt: T,
) -> Result<Trajectory<T>> {
    let system = SirsDde {
        params: *params,
        birth,
        tau,
    };
    let series = integrate_dde(&system, |_t| vec![s0, i0, r0], t_end, dt)?;
    let mut traj = Trajectory::new(ModelTag::SirsDde, dt, None);
    for (t, y) in series.t.iter().zip(&series.y) {
        traj.push_reduced(*t, y[0], y[1], y[2]);
    }
    Ok(traj)
}

/// Run the delayed SIS system from a constant pre-history (`A` seeded
/// with `i0·τ`) and map to a trajectory with `R = 1 − S − I`.
pub fn sis_dde_simulate<T: Real>(
    params: &ModelParameters<T>,
    tau: T,
    s0: T,
    i0: T,
    t_end: T,
    dt: T,
) -> Result<Trajectory<T>> {
    let system = SisDde::new(*params, tau)?;
    if s0 + i0 > T::one() + T::of(1e-9) {
        return Err(Error::Normalization(format!(
            "S0 + I0 = {} exceeds the unit population",
            (s0 + i0).as_f64()
        )));
    }
    let series = integrate_dde(&system, |_t| vec![s0, i0, i0 * tau], t_end, dt)?;
    let mut traj = Trajectory::new(ModelTag::SisDde, dt, None);
    for (t, y) in series.t.iter().zip(&series.y) {
        traj.push_reduced(*t, y[0], y[1], T::one() - y[0] - y[1]);
    }
    Ok(traj)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn params(beta: f64, gamma: f64, d: f64, d_i: f64) -> ModelParameters<f64> {
        ModelParameters {
            beta,
            gamma,
            d,
            d_i,
            z_min: 0.0,
            z_max: 10.0,
            boost_contact_multiplier: 1.0,
        }
    }

    struct PureDelay;

    impl DelaySystem<f64> for PureDelay {
        fn dim(&self) -> usize {
            1
        }
        fn tau(&self) -> f64 {
            1.0
        }
        fn rhs(&self, _t: f64, _y: &[f64], lagged: &[f64], dydt: &mut [f64]) -> Result<()> {
            dydt[0] = -lagged[0];
            Ok(())
        }
    }

    #[test]
    fn first_interval_solves_exactly() {
        // y' = −y(t−1), history ≡ 1: on [0, 1] the solution is 1 − t
        let series = integrate_dde(&PureDelay, |_t| vec![1.0], 1.0, 0.05).unwrap();
        for (t, y) in series.t.iter().zip(&series.y) {
            assert_relative_eq!(y[0], 1.0 - t, epsilon = 1e-13);
        }
    }

    #[test]
    fn second_interval_matches_hand_solution() {
        // on [1, 2]: y(t) = 1 − t + (t−1)²/2
        let series = integrate_dde(&PureDelay, |_t| vec![1.0], 2.0, 0.05).unwrap();
        let (t_end, y_end) = series.last();
        assert_relative_eq!(*t_end, 2.0);
        assert_relative_eq!(y_end[0], 1.0 - 2.0 + 0.5, epsilon = 1e-9);
    }

    #[test]
    fn rejects_non_divisible_dt() {
        let err = integrate_dde(&PureDelay, |_t| vec![1.0], 2.0, 0.3).unwrap_err();
        assert!(err.to_string().contains("does not divide"));
    }

    #[test]
    fn sirs_survival_factor() {
        // e^{−dτ} with d = 0.01, τ = 50
        let p = params(0.3, 0.1, 0.01, 0.0);
        let survival = (-p.d * 50.0f64).exp();
        assert_relative_eq!(survival, 0.606531, epsilon = 1e-6);
        // visible in the rhs: with I ≡ I0, R at quasi-equilibrium
        // R = γI0(1−e^{−dτ})/d makes R' vanish
        let i0 = 20.0;
        let r_eq = p.gamma * i0 * (1.0 - survival) / p.d;
        let birth = BirthFunction::beverton_holt(0.04, 1000.0).unwrap();
        let hist = DdeHistory::new(50.0, |_t| vec![800.0, i0, r_eq]);
        let rhs = sirs_dde_rhs(0.0, &[800.0, i0, r_eq], &hist, &p, &birth, 50.0).unwrap();
        assert_relative_eq!(rhs[2], 0.0, epsilon = 1e-10);
    }

    #[test]
    fn sirs_without_infection_is_pure_demography() {
        let p = params(0.3, 0.1, 0.02, 0.0);
        let birth = BirthFunction::beverton_holt(0.04, 1000.0).unwrap();
        let hist = DdeHistory::new(10.0, |_t| vec![700.0, 0.0, 0.0]);
        let rhs = sirs_dde_rhs(5.0, &[700.0, 0.0, 0.0], &hist, &p, &birth, 10.0).unwrap();
        assert_relative_eq!(rhs[0], birth.eval(700.0) - p.d * 700.0, max_relative = 1e-12);
        assert_eq!(rhs[1], 0.0);
        assert_eq!(rhs[2], 0.0);
    }

    #[test]
    fn sis_dfe_is_a_fixed_point() {
        let p = params(0.3, 0.1, 0.02, 0.0);
        let hist = DdeHistory::new(10.0, |_t| vec![1.0, 0.0, 0.0]);
        let rhs = sis_dde_rhs(0.0, &[1.0, 0.0], &hist, &p, 10.0).unwrap();
        assert_eq!(rhs[0], 0.0);
        assert_eq!(rhs[1], 0.0);
    }

    #[test]
    fn sis_relaxes_to_full_susceptibility_without_infection() {
        let p = params(0.3, 0.1, 0.02, 0.0);
        let hist = DdeHistory::new(10.0, |_t| vec![0.6, 0.0, 0.0]);
        let rhs = sis_dde_rhs(0.0, &[0.6, 0.0], &hist, &p, 10.0).unwrap();
        assert_relative_eq!(rhs[0], p.d * (1.0 - 0.6), max_relative = 1e-12);
    }

    #[test]
    fn sis_return_flow_reduces_to_sirs_term_without_immune_lag() {
        // S + I = 1 at the lag (R(t−τ) = 0) and A = 0: the return flow is
        // γ·I(t−τ)·e^{−dτ}, the no-boost term
        let p = params(0.3, 0.1, 0.02, 0.0);
        let tau = 10.0;
        let (s_lag, i_lag) = (0.7, 0.3);
        let hist = DdeHistory::new(tau, move |_t| vec![s_lag, i_lag, 0.0]);
        let rhs = sis_dde_rhs(0.0, &[0.9, 0.05], &hist, &p, tau).unwrap();
        let expected_return = p.gamma * i_lag * (-p.d * tau).exp();
        let rest = p.d * (1.0 - 0.9) - p.beta * 0.05 * 0.9;
        assert_relative_eq!(rhs[0], rest + expected_return, max_relative = 1e-12);
    }

    #[test]
    fn sis_rejects_disease_induced_death() {
        let p = params(0.3, 0.1, 0.02, 0.05);
        assert!(SisDde::new(p, 10.0).is_err());
    }

    #[test]
    fn sis_rejects_unnormalized_state() {
        let p = params(0.3, 0.1, 0.02, 0.0);
        let hist = DdeHistory::new(10.0, |_t| vec![0.8, 0.4, 0.0]);
        assert!(matches!(
            sis_dde_rhs(0.0, &[0.8, 0.4], &hist, &p, 10.0),
            Err(Error::Normalization(_))
        ));
    }

    #[test]
    fn sis_simulation_runs_and_stays_in_the_simplex() {
        let p = params(0.3, 0.2, 0.02, 0.0);
        let traj = sis_dde_simulate(&p, 5.0, 0.9, 0.02, 40.0, 0.05).unwrap();
        assert!(traj.len() > 100);
        for k in 0..traj.len() {
            assert!(traj.s[k] >= 0.0 && traj.i[k] >= 0.0);
            assert!(traj.s[k] + traj.i[k] <= 1.0 + 1e-9);
        }
    }
}
