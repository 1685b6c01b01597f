//! Population recruitment `b(N)`.

use crate::error::Error;
use crate::numerics::MonotoneCubic;
use crate::real::Real;
use crate::Result;

/// Recruitment rate as a function of total population.
///
/// Both families are C¹, vanish at `N = 0` and are bounded above, which is
/// what the demographic admissibility conditions ask for.
#[derive(Debug, Clone)]
pub enum BirthFunction<T> {
    /// `b(N) = rho·N / (1 + N/K)`; saturates at `rho·K`.
    BevertonHolt { rho: T, k: T },
    /// Monotone C¹ interpolation of `(N, b)` samples; constant beyond the
    /// last sample.
    Tabulated(MonotoneCubic<T>),
}

impl<T: Real> BirthFunction<T> {
    pub fn beverton_holt(rho: T, k: T) -> Result<Self> {
        if !(rho.is_finite() && rho > T::zero()) {
            return Err(Error::param("rho", "max per-capita birth rate must be > 0"));
        }
        if !(k.is_finite() && k > T::zero()) {
            return Err(Error::param("K", "scale population must be > 0"));
        }
        Ok(Self::BevertonHolt { rho, k })
    }

    pub fn tabulated(samples: Vec<(T, T)>) -> Result<Self> {
        let (xs, ys): (Vec<T>, Vec<T>) = samples.into_iter().unzip();
        if xs.first().copied() != Some(T::zero()) || ys.first().copied() != Some(T::zero()) {
            return Err(Error::param("samples", "first sample must be (0, 0)"));
        }
        if ys.iter().any(|&y| y < T::zero()) {
            return Err(Error::param("samples", "birth rates must be >= 0"));
        }
        Ok(Self::Tabulated(MonotoneCubic::new(xs, ys)?))
    }

    pub fn eval(&self, n: T) -> T {
        match self {
            Self::BevertonHolt { rho, k } => *rho * n / (T::one() + n / *k),
            Self::Tabulated(c) => c.eval(n),
        }
    }

    /// Analytic derivative `b'(N)` of the family (never finite differences
    /// here, so derivative-based checks test the formulas, not this).
    pub fn derivative(&self, n: T) -> T {
        match self {
            Self::BevertonHolt { rho, k } => {
                let q = T::one() + n / *k;
                *rho / (q * q)
            }
            Self::Tabulated(c) => c.derivative(n),
        }
    }

    /// Upper bound `b_+` on the recruitment rate.
    pub fn upper_bound(&self) -> T {
        match self {
            Self::BevertonHolt { rho, k } => *rho * *k,
            Self::Tabulated(c) => {
                let (_, hi) = c.domain();
                c.eval(hi)
            }
        }
    }

    /// Closed-form equilibrium `K·(rho/d − 1)` for the Beverton-Holt
    /// family; `None` for tabulated data or when no positive root exists.
    pub fn beverton_holt_n_star(&self, d: T) -> Option<T> {
        match self {
            Self::BevertonHolt { rho, k } => {
                if *rho > d {
                    Some(*k * (*rho / d - T::one()))
                } else {
                    None
                }
            }
            Self::Tabulated(_) => None,
        }
    }
}
