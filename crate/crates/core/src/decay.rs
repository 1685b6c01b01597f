//! Immunity decay speed `g(z)` and the characteristic flow it generates.
//!
//! Immunity drifts downward: a host's level obeys `dz/dt = −g(z)` with
//! `g > 0` on `[z_min, z_max]`, so the transit from `z_max` to `z_min`
//! takes `T = ∫ 1/g`. The flow here is oriented accordingly; all three
//! families admit closed-form flows, which the quadrature-based
//! `transit_time` cross-checks.

use crate::error::Error;
use crate::numerics::{adaptive_simpson, bisect};
use crate::real::Real;
use crate::Result;

const TRANSIT_REL_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq)]
enum Family<T> {
    /// `g(z) = g0`
    Constant { g0: T },
    /// `g(z) = a·z + c`
    Affine { a: T, c: T },
    /// `g(z) = a·z^q`
    Power { a: T, q: T },
}

/// Decay speed of the immunity level on a fixed domain `[z_min, z_max]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecayFunction<T> {
    family: Family<T>,
    z_min: T,
    z_max: T,
}

impl<T: Real> DecayFunction<T> {
    pub fn constant(g0: T, z_min: T, z_max: T) -> Result<Self> {
        Self::build(Family::Constant { g0 }, z_min, z_max)
    }

    pub fn affine(a: T, c: T, z_min: T, z_max: T) -> Result<Self> {
        Self::build(Family::Affine { a, c }, z_min, z_max)
    }

    pub fn power(a: T, q: T, z_min: T, z_max: T) -> Result<Self> {
        Self::build(Family::Power { a, q }, z_min, z_max)
    }

    fn build(family: Family<T>, z_min: T, z_max: T) -> Result<Self> {
        let finite = match family {
            Family::Constant { g0 } => g0.is_finite(),
            Family::Affine { a, c } => a.is_finite() && c.is_finite(),
            Family::Power { a, q } => a.is_finite() && q.is_finite(),
        };
        if !finite {
            return Err(Error::param("decay", "coefficients must be finite"));
        }
        if !(z_min.is_finite() && z_max.is_finite() && z_min >= T::zero() && z_min < z_max) {
            return Err(Error::param("z_min/z_max", "need 0 <= z_min < z_max"));
        }
        // Positivity on the domain is an assumption checked by
        // validate_model, not here; construction stays permissive so the
        // validator can report violations with witnesses.
        Ok(Self { family, z_min, z_max })
    }

    pub fn domain(&self) -> (T, T) {
        (self.z_min, self.z_max)
    }

    pub fn eval(&self, z: T) -> T {
        match self.family {
            Family::Constant { g0 } => g0,
            Family::Affine { a, c } => a * z + c,
            Family::Power { a, q } => a * z.powf(q),
        }
    }

    /// Analytic `g'(z)`.
    pub fn derivative(&self, z: T) -> T {
        match self.family {
            Family::Constant { .. } => T::zero(),
            Family::Affine { a, .. } => a,
            Family::Power { a, q } => a * q * z.powf(q - T::one()),
        }
    }

    /// Largest decay speed on the domain. All three families are monotone
    /// in `z`, so the endpoints bound the speed.
    pub fn max_speed(&self) -> T {
        self.eval(self.z_min).max(self.eval(self.z_max))
    }

    fn check_in_domain(&self, z: T) -> Result<()> {
        let slack = T::of(1e-12) * (self.z_max - self.z_min).max(T::one());
        if z < self.z_min - slack || z > self.z_max + slack {
            return Err(Error::OutsideDomain {
                z: z.as_f64(),
                z_min: self.z_min.as_f64(),
                z_max: self.z_max.as_f64(),
            });
        }
        Ok(())
    }

    /// Position after flowing downward from `z0` for `elapsed` time;
    /// absorbed at `z_min`. Closed form per family.
    pub fn flow_down(&self, z0: T, elapsed: T) -> Result<T> {
        self.check_in_domain(z0)?;
        if elapsed < T::zero() {
            return Err(Error::Config("elapsed time must be >= 0".into()));
        }
        let z = match self.family {
            Family::Constant { g0 } => z0 - g0 * elapsed,
            Family::Affine { a, c } => {
                if a == T::zero() {
                    z0 - c * elapsed
                } else {
                    // z(t) = (z0 + c/a)·e^{−a t} − c/a, via expm1 for small a·t
                    let e = (-a * elapsed).exp_m1();
                    z0 + (z0 + c / a) * e
                }
            }
            Family::Power { a, q } => {
                if q == T::one() {
                    z0 * (-a * elapsed).exp()
                } else {
                    let s = T::one() - q;
                    let base = z0.powf(s) - a * s * elapsed;
                    let floor = self.z_min.powf(s);
                    // For s < 0 the base grows toward the floor from below.
                    let exited = if s > T::zero() { base <= floor } else { base >= floor };
                    if exited {
                        return Ok(self.z_min);
                    }
                    base.powf(s.recip())
                }
            }
        };
        Ok(z.max(self.z_min).min(z0))
    }

    /// Position `elapsed` time *earlier* on the same characteristic
    /// (upward flow); errors if it leaves the domain through `z_max`.
    pub fn flow_up(&self, z: T, elapsed: T) -> Result<T> {
        self.check_in_domain(z)?;
        if elapsed < T::zero() {
            return Err(Error::Config("elapsed time must be >= 0".into()));
        }
        let z0 = match self.family {
            Family::Constant { g0 } => z + g0 * elapsed,
            Family::Affine { a, c } => {
                if a == T::zero() {
                    z + c * elapsed
                } else {
                    let e = (a * elapsed).exp_m1();
                    z + (z + c / a) * e
                }
            }
            Family::Power { a, q } => {
                if q == T::one() {
                    z * (a * elapsed).exp()
                } else {
                    let s = T::one() - q;
                    let base = z.powf(s) + a * s * elapsed;
                    if base <= T::zero() {
                        return Err(Error::OutsideDomain {
                            z: f64::INFINITY,
                            z_min: self.z_min.as_f64(),
                            z_max: self.z_max.as_f64(),
                        });
                    }
                    base.powf(s.recip())
                }
            }
        };
        let slack = T::of(1e-9) * (self.z_max - self.z_min);
        if z0 > self.z_max + slack {
            return Err(Error::OutsideDomain {
                z: z0.as_f64(),
                z_min: self.z_min.as_f64(),
                z_max: self.z_max.as_f64(),
            });
        }
        Ok(z0.min(self.z_max))
    }
}

/// Time to traverse `[z_min, z_max]` under pure decay, `T = ∫ 1/g(z) dz`,
/// by adaptive quadrature to relative tolerance 1e-10.
pub fn transit_time<T: Real>(g: &DecayFunction<T>, z_min: T, z_max: T) -> Result<T> {
    if z_min >= z_max {
        return Err(Error::param("z_min/z_max", "need z_min < z_max"));
    }
    let f = |z: T| g.eval(z).recip();
    let t = adaptive_simpson(&f, z_min, z_max, T::of(TRANSIT_REL_TOL))?;
    if !(t.is_finite() && t > T::zero()) {
        return Err(Error::QuadratureNonConvergence(format!(
            "transit time came out as {}",
            t.as_f64()
        )));
    }
    Ok(t)
}

/// Characteristic position after decaying from `z0` for `elapsed` time.
pub fn flow_characteristic<T: Real>(z0: T, elapsed: T, g: &DecayFunction<T>) -> Result<T> {
    g.flow_down(z0, elapsed)
}

/// Elapsed time for the characteristic through `(t, z)` to have left
/// `z_max`, found by bisection on the flow to an accuracy of 1e-10.
pub fn emission_elapsed<T: Real>(z: T, g: &DecayFunction<T>) -> Result<T> {
    let (z_min, z_max) = g.domain();
    g.check_in_domain(z)?;
    if z >= z_max {
        return Ok(T::zero());
    }
    // The sought elapsed lies in [0, T]; expand the bracket a touch so the
    // absorbed tail cannot hide the root.
    let t_max = transit_time(g, z_min, z_max)? * T::of(1.0 + 1e-9);
    let f = |e: T| g.flow_down(z_max, e).unwrap_or(z_min) - z;
    bisect(&f, T::zero(), t_max, T::of(1e-10) * t_max.max(T::one()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn transit_constant_speed() {
        let g = DecayFunction::constant(0.5, 0.0, 10.0).unwrap();
        assert_relative_eq!(transit_time(&g, 0.0, 10.0).unwrap(), 20.0, max_relative = 1e-10);
    }

    #[test]
    fn transit_linear_speed() {
        // g(z) = z on [1, e]: ∫ dz/z = 1
        let g = DecayFunction::power(1.0, 1.0, 1.0, std::f64::consts::E).unwrap();
        assert_relative_eq!(
            transit_time(&g, 1.0, std::f64::consts::E).unwrap(),
            1.0,
            max_relative = 1e-10
        );
    }

    #[test]
    fn transit_affine_speed() {
        // g(z) = 1 + z on [0, 1]: ∫ dz/(1+z) = ln 2
        let g = DecayFunction::affine(1.0, 1.0, 0.0, 1.0).unwrap();
        assert_relative_eq!(
            transit_time(&g, 0.0, 1.0).unwrap(),
            std::f64::consts::LN_2,
            max_relative = 1e-10
        );
    }

    #[test]
    fn transit_rejects_zero_speed() {
        let g = DecayFunction::constant(0.0, 0.0, 10.0).unwrap();
        assert!(transit_time(&g, 0.0, 10.0).is_err());
    }

    #[test]
    fn flow_linear_decay() {
        let g = DecayFunction::constant(0.5, 0.0, 10.0).unwrap();
        assert_relative_eq!(flow_characteristic(10.0, 4.0, &g).unwrap(), 8.0);
        // full transit lands exactly on z_min
        assert_relative_eq!(flow_characteristic(10.0, 20.0, &g).unwrap(), 0.0);
        // and stays absorbed beyond it
        assert_relative_eq!(flow_characteristic(10.0, 25.0, &g).unwrap(), 0.0);
    }

    #[test]
    fn flow_exponential_decay() {
        let e = std::f64::consts::E;
        let g = DecayFunction::power(1.0, 1.0, 0.5, e).unwrap();
        assert_relative_eq!(flow_characteristic(e, 1.0, &g).unwrap(), 1.0, max_relative = 1e-14);
    }

    #[test]
    fn flow_rejects_outside_domain() {
        let g = DecayFunction::constant(0.5, 0.0, 10.0).unwrap();
        assert!(flow_characteristic(11.0, 1.0, &g).is_err());
        assert!(flow_characteristic(-0.5, 1.0, &g).is_err());
    }

    #[test]
    fn flow_matches_transit_time() {
        for g in [
            DecayFunction::constant(0.7, 0.5, 8.0).unwrap(),
            DecayFunction::affine(0.3, 0.2, 0.5, 8.0).unwrap(),
            DecayFunction::affine(-0.05, 1.0, 0.5, 8.0).unwrap(),
            DecayFunction::power(0.4, 0.7, 0.5, 8.0).unwrap(),
            DecayFunction::power(0.2, 1.6, 0.5, 8.0).unwrap(),
        ] {
            let t = transit_time(&g, 0.5, 8.0).unwrap();
            let z_end: f64 = flow_characteristic(8.0, t, &g).unwrap();
            assert!(
                (z_end - 0.5).abs() <= 1e-6,
                "flow after transit time should land on z_min, got {z_end}"
            );
        }
    }

    #[test]
    fn flow_semigroup_property() {
        let g = DecayFunction::affine(0.3, 0.2, 0.5, 8.0).unwrap();
        for (z0, s, t) in [(8.0, 0.5, 1.25), (5.0, 0.1, 3.0), (2.0, 2.0, 2.0)] {
            let two_step: f64 = g.flow_down(g.flow_down(z0, s).unwrap(), t).unwrap();
            let one_step = g.flow_down(z0, s + t).unwrap();
            assert!((two_step - one_step).abs() < 1e-9);
        }
    }

    #[test]
    fn flow_up_inverts_flow_down() {
        for g in [
            DecayFunction::constant(0.7, 0.5, 8.0).unwrap(),
            DecayFunction::affine(0.3, 0.2, 0.5, 8.0).unwrap(),
            DecayFunction::power(0.4, 0.7, 0.5, 8.0).unwrap(),
        ] {
            for (z0, e) in [(8.0, 1.0), (6.0, 0.3), (4.0, 0.05)] {
                let z = g.flow_down(z0, e).unwrap();
                if z > 0.5 {
                    let back = g.flow_up(z, e).unwrap();
                    assert_relative_eq!(back, z0, max_relative = 1e-10);
                }
            }
        }
    }

    #[test]
    fn emission_elapsed_matches_hand_values() {
        let g = DecayFunction::constant(0.5, 0.0, 10.0).unwrap();
        assert_relative_eq!(emission_elapsed(8.0, &g).unwrap(), 4.0, epsilon = 1e-8);
        assert_relative_eq!(emission_elapsed(10.0, &g).unwrap(), 0.0, epsilon = 1e-12);
    }
}
