//! Epidemiological rates and the immunity-interval bounds.

use crate::error::Error;
use crate::real::Real;
use crate::Result;

/// Rates of the SIRS dynamics plus the immunity interval.
///
/// All rates are per unit time; `z_min`/`z_max` are in immunity units.
/// `boost_contact_multiplier` scales the boosting contact hazard relative
/// to the infection hazard `β·I/N` (1 = same rate for both).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParameters<T> {
    pub beta: T,
    pub gamma: T,
    pub d: T,
    pub d_i: T,
    pub z_min: T,
    pub z_max: T,
    pub boost_contact_multiplier: T,
}

impl<T: Real> ModelParameters<T> {
    pub fn new(beta: T, gamma: T, d: T, d_i: T, z_min: T, z_max: T) -> Result<Self> {
        Self {
            beta,
            gamma,
            d,
            d_i,
            z_min,
            z_max,
            boost_contact_multiplier: T::one(),
        }
        .validated()
    }

    pub fn with_boost_multiplier(mut self, m: T) -> Result<Self> {
        self.boost_contact_multiplier = m;
        self.validated()
    }

    pub fn validated(self) -> Result<Self> {
        for (name, v) in [
            ("beta", self.beta),
            ("gamma", self.gamma),
            ("d", self.d),
            ("d_I", self.d_i),
            ("z_min", self.z_min),
            ("z_max", self.z_max),
            ("boost_contact_multiplier", self.boost_contact_multiplier),
        ] {
            if !v.is_finite() {
                return Err(Error::param(name, "must be finite"));
            }
        }
        if self.beta <= T::zero() {
            return Err(Error::param("beta", "transmission rate must be > 0"));
        }
        if self.gamma <= T::zero() {
            return Err(Error::param("gamma", "recovery rate must be > 0"));
        }
        if self.d <= T::zero() {
            return Err(Error::param("d", "natural death rate must be > 0"));
        }
        if self.d_i < T::zero() {
            return Err(Error::param("d_I", "disease-induced death rate must be >= 0"));
        }
        if self.z_min < T::zero() || self.z_min >= self.z_max {
            return Err(Error::param("z_min/z_max", "need 0 <= z_min < z_max"));
        }
        if self.boost_contact_multiplier < T::zero() {
            return Err(Error::param("boost_contact_multiplier", "must be >= 0"));
        }
        Ok(self)
    }

    /// Combined exit rate of the infective compartment, `γ + d + d_I`.
    pub fn infective_exit_rate(&self) -> T {
        self.gamma + self.d + self.d_i
    }

    /// Immunity span `z_max − z_min`.
    pub fn z_span(&self) -> T {
        self.z_max - self.z_min
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn base() -> ModelParameters<f64> {
        ModelParameters::new(0.3, 0.1, 0.02, 0.08, 0.0, 10.0).unwrap()
    }

    #[test]
    fn accepts_valid_rates() {
        let p = base();
        assert_eq!(p.infective_exit_rate(), 0.2);
        assert_eq!(p.boost_contact_multiplier, 1.0);
    }

    #[test]
    fn rejects_bad_rates() {
        assert!(ModelParameters::new(0.0, 0.1, 0.02, 0.0, 0.0, 10.0).is_err());
        assert!(ModelParameters::new(0.3, 0.1, 0.0, 0.0, 0.0, 10.0).is_err());
        assert!(ModelParameters::new(0.3, 0.1, 0.02, -0.1, 0.0, 10.0).is_err());
        assert!(ModelParameters::new(0.3, 0.1, 0.02, 0.0, 5.0, 5.0).is_err());
        assert!(ModelParameters::new(0.3, 0.1, 0.02, 0.0, -1.0, 5.0).is_err());
        assert!(base().with_boost_multiplier(-1.0).is_err());
        assert!(ModelParameters::new(f64::NAN, 0.1, 0.02, 0.0, 0.0, 10.0).is_err());
    }
}
