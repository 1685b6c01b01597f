//! Admissibility checks for a full model setup: demographic balance,
//! decay positivity, and kernel normalization, each reported with a
//! witness when violated.

use crate::birth::BirthFunction;
use crate::decay::DecayFunction;
use crate::error::Error;
use crate::grid::ImmunityGrid;
use crate::kernel::{kernel_cell_masses, BoostingKernel};
use crate::numerics::bisect;
use crate::params::ModelParameters;
use crate::real::Real;
use crate::Result;

/// Outcome of one assumption check.
#[derive(Debug, Clone)]
pub struct AssumptionCheck {
    pub name: &'static str,
    pub passed: bool,
    /// Input value at which a violation was found, when applicable.
    pub witness: Option<f64>,
    pub detail: String,
}

impl AssumptionCheck {
    fn pass(name: &'static str, detail: impl Into<String>) -> Self {
        Self {
            name,
            passed: true,
            witness: None,
            detail: detail.into(),
        }
    }

    fn fail(name: &'static str, witness: Option<f64>, detail: impl Into<String>) -> Self {
        Self {
            name,
            passed: false,
            witness,
            detail: detail.into(),
        }
    }
}

/// Collected checks plus the located demographic equilibrium.
#[derive(Debug, Clone)]
pub struct ValidationReport<T> {
    pub checks: Vec<AssumptionCheck>,
    /// `N*` with `b(N*) = d·N*`, when the balance check passed.
    pub n_star: Option<T>,
}

impl<T> ValidationReport<T> {
    pub fn is_valid(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &AssumptionCheck> {
        self.checks.iter().filter(|c| !c.passed)
    }
}

const PROBE_POINTS: usize = 257;

/// Check the model ingredients against their admissibility conditions.
///
/// Non-finite evaluations abort with an error naming the offending input;
/// ordinary violations are reported in the result with a witness.
pub fn validate_model<T: Real>(
    params: &ModelParameters<T>,
    birth: &BirthFunction<T>,
    decay: &DecayFunction<T>,
    kernel: &BoostingKernel<T>,
) -> Result<ValidationReport<T>> {
    let mut checks = Vec::new();

    checks.push(match (*params).validated() {
        Ok(_) => AssumptionCheck::pass("parameter ranges", "all rates admissible"),
        Err(e) => AssumptionCheck::fail("parameter ranges", None, e.to_string()),
    });

    // Birth function: b(0) = 0, nonnegative and bounded on a probe range.
    let b0 = birth.eval(T::zero());
    if !b0.is_finite() {
        return Err(Error::InvalidKernel {
            input: "b(0)".into(),
        });
    }
    checks.push(if b0.abs() <= T::of(1e-12) * birth.upper_bound().max(T::one()) {
        AssumptionCheck::pass("birth at zero", "b(0) = 0")
    } else {
        AssumptionCheck::fail("birth at zero", Some(0.0), format!("b(0) = {}", b0.as_f64()))
    });

    let b_plus = birth.upper_bound();
    let n_probe_max = match birth.beverton_holt_n_star(params.d) {
        Some(ns) => ns * T::of(10.0),
        None => T::of(1e7),
    };
    let mut birth_bounds = AssumptionCheck::pass(
        "birth bounds",
        format!("0 <= b(N) <= {} on probe range", b_plus.as_f64()),
    );
    for k in 0..PROBE_POINTS {
        let n = n_probe_max * T::from_count(k) / T::from_count(PROBE_POINTS - 1);
        let v = birth.eval(n);
        if !v.is_finite() {
            return Err(Error::InvalidKernel {
                input: format!("b({})", n.as_f64()),
            });
        }
        if v < T::zero() || v > b_plus * (T::one() + T::of(1e-9)) {
            birth_bounds = AssumptionCheck::fail(
                "birth bounds",
                Some(n.as_f64()),
                format!("b({}) = {} outside [0, {}]", n.as_f64(), v.as_f64(), b_plus.as_f64()),
            );
            break;
        }
    }
    checks.push(birth_bounds);

    // Demographic balance: a positive root of b(N) − d·N with the right
    // sign pattern around it and b'(N*) < d.
    let mut n_star = None;
    match locate_n_star(birth, params.d) {
        Ok(ns) => {
            n_star = Some(ns);
            let h = ns * T::of(1e-6);
            let slope = (birth.eval(ns + h) - birth.eval(ns - h)) / (T::of(2.0) * h);
            checks.push(if slope < params.d {
                AssumptionCheck::pass(
                    "demographic balance",
                    format!(
                        "N* = {} with b'(N*) = {} < d = {}",
                        ns.as_f64(),
                        slope.as_f64(),
                        params.d.as_f64()
                    ),
                )
            } else {
                AssumptionCheck::fail(
                    "demographic balance",
                    Some(ns.as_f64()),
                    format!("b'(N*) = {} >= d", slope.as_f64()),
                )
            });
            // Sign pattern: b > dN below N*, b < dN above.
            let mut pattern = AssumptionCheck::pass(
                "balance sign pattern",
                "b(N) > dN on (0, N*), b(N) < dN beyond",
            );
            for k in 1..64 {
                let n = ns * T::from_count(k) / T::of(64.0);
                if birth.eval(n) <= params.d * n * (T::one() - T::of(1e-9)) {
                    pattern = AssumptionCheck::fail(
                        "balance sign pattern",
                        Some(n.as_f64()),
                        format!("b(N) <= dN at N = {} < N*", n.as_f64()),
                    );
                    break;
                }
            }
            if pattern.passed {
                for k in 1..=16 {
                    let n = ns * (T::one() + T::from_count(k) / T::of(4.0));
                    if birth.eval(n) >= params.d * n * (T::one() + T::of(1e-9)) {
                        pattern = AssumptionCheck::fail(
                            "balance sign pattern",
                            Some(n.as_f64()),
                            format!("b(N) >= dN at N = {} > N*", n.as_f64()),
                        );
                        break;
                    }
                }
            }
            checks.push(pattern);
        }
        Err(e) => {
            checks.push(AssumptionCheck::fail("demographic balance", None, e.to_string()));
        }
    }

    // Decay: strictly positive and finite on the immunity interval.
    let (z_lo, z_hi) = decay.domain();
    let mut decay_check = AssumptionCheck::pass(
        "decay positivity",
        format!("0 < g(z) <= {} on [{}, {}]", decay.max_speed().as_f64(), z_lo.as_f64(), z_hi.as_f64()),
    );
    for k in 0..PROBE_POINTS {
        let z = z_lo + (z_hi - z_lo) * T::from_count(k) / T::from_count(PROBE_POINTS - 1);
        let v = decay.eval(z);
        if !v.is_finite() {
            return Err(Error::InvalidKernel {
                input: format!("g({})", z.as_f64()),
            });
        }
        if v <= T::zero() {
            decay_check = AssumptionCheck::fail(
                "decay positivity",
                Some(z.as_f64()),
                "g must be strictly positive".to_string(),
            );
            break;
        }
    }
    checks.push(decay_check);

    // Kernel: weights within [0, 1], unit mass at probe sources.
    let probe_grid = ImmunityGrid::uniform(params.z_min, params.z_max, 64)?;
    let mut kernel_check = AssumptionCheck::pass("kernel normalization", "unit mass at probe sources");
    for k in 0..33 {
        let src = params.z_min + params.z_span() * T::from_count(k) / T::of(32.0);
        match kernel_cell_masses(kernel, src, &probe_grid) {
            Ok(m) => {
                let total = m.total();
                if !total.is_finite() {
                    return Err(Error::InvalidKernel {
                        input: format!("p(·, {})", src.as_f64()),
                    });
                }
                if (total - T::one()).abs() > T::of(1e-12) {
                    kernel_check = AssumptionCheck::fail(
                        "kernel normalization",
                        Some(src.as_f64()),
                        format!("total mass {} at source {}", total.as_f64(), src.as_f64()),
                    );
                    break;
                }
            }
            Err(e) => {
                kernel_check =
                    AssumptionCheck::fail("kernel normalization", Some(src.as_f64()), e.to_string());
                break;
            }
        }
    }
    checks.push(kernel_check);

    Ok(ValidationReport { checks, n_star })
}

/// Root of `b(N) − d·N` by geometric bracket expansion from `N = 1` and
/// bisection; relative residual 1e-9 or better.
pub(crate) fn locate_n_star<T: Real>(birth: &BirthFunction<T>, d: T) -> Result<T> {
    let f = |n: T| birth.eval(n) - d * n;
    let mut lo = T::one();
    let mut hi = T::one();
    // March the bracket in the direction of the sign change.
    if f(T::one()) > T::zero() {
        for _ in 0..80 {
            hi = hi * T::of(2.0);
            if f(hi) <= T::zero() {
                break;
            }
            lo = hi;
        }
        if f(hi) > T::zero() {
            return Err(Error::NoEquilibrium(
                "no N* exists: b(N) > dN up to the search bound".into(),
            ));
        }
    } else {
        for _ in 0..80 {
            lo = lo / T::of(2.0);
            if f(lo) >= T::zero() {
                break;
            }
            hi = lo;
        }
        if f(lo) < T::zero() {
            return Err(Error::NoEquilibrium(
                "no N* exists: b(N) < dN down to the search bound".into(),
            ));
        }
    }
    let root = bisect(&f, lo, hi, T::zero())?;
    let resid = f(root).abs();
    if resid > T::of(1e-9) * d * root {
        return Err(Error::NoEquilibrium(format!(
            "bisection residual {} too large at N = {}",
            resid.as_f64(),
            root.as_f64()
        )));
    }
    // Guard against a spurious root where b(N) − dN merely underflows to
    // zero: a genuine equilibrium has the strict sign pattern around it.
    let half = f(root / T::of(2.0));
    let twice = f(root * T::of(2.0));
    if !(half > T::zero() && twice < T::zero()) {
        return Err(Error::NoEquilibrium(format!(
            "no N* exists: b(N) - dN does not cross zero around N = {}",
            root.as_f64()
        )));
    }
    Ok(root)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::{LevelFunction, P0Family};
    use approx::assert_relative_eq;

    fn setup(
        rho: f64,
        d: f64,
        g0: f64,
    ) -> (
        ModelParameters<f64>,
        BirthFunction<f64>,
        DecayFunction<f64>,
        BoostingKernel<f64>,
    ) {
        let params = ModelParameters {
            beta: 0.3,
            gamma: 0.1,
            d,
            d_i: 0.0,
            z_min: 0.0,
            z_max: 10.0,
            boost_contact_multiplier: 1.0,
        };
        let birth = BirthFunction::beverton_holt(rho, 1000.0).unwrap();
        let decay = DecayFunction::constant(g0, 0.0, 10.0).unwrap();
        let kernel = BoostingKernel::new(
            LevelFunction::Constant(0.2),
            LevelFunction::Constant(0.5),
            P0Family::Uniform,
            0.0,
            10.0,
        )
        .unwrap();
        (params, birth, decay, kernel)
    }

    #[test]
    fn valid_setup_passes_with_n_star() {
        let (p, b, g, k) = setup(0.04, 0.02, 0.5);
        let report = validate_model(&p, &b, &g, &k).unwrap();
        assert!(report.is_valid(), "failures: {:?}", report.failures().collect::<Vec<_>>());
        // bisection against the closed form K(rho/d − 1)
        assert_relative_eq!(report.n_star.unwrap(), 1000.0, max_relative = 1e-9);
    }

    #[test]
    fn subcritical_birth_has_no_equilibrium() {
        // b(N) = 0.02N/(1+N/K) < 0.02N for all N > 0
        let (p, b, g, k) = setup(0.02, 0.02, 0.5);
        let report = validate_model(&p, &b, &g, &k).unwrap();
        assert!(!report.is_valid());
        assert!(report.n_star.is_none());
        let failure = report.failures().next().unwrap();
        assert_eq!(failure.name, "demographic balance");
        assert!(failure.detail.contains("no N* exists"));
    }

    #[test]
    fn zero_decay_speed_fails_with_message() {
        let (p, b, g, k) = setup(0.04, 0.02, 0.0);
        let report = validate_model(&p, &b, &g, &k).unwrap();
        assert!(!report.is_valid());
        let failure = report
            .failures()
            .find(|c| c.name == "decay positivity")
            .unwrap();
        assert!(failure.detail.contains("g must be strictly positive"));
        assert!(failure.witness.is_some());
    }

    #[test]
    fn n_star_residual_is_tight() {
        let b = BirthFunction::beverton_holt(0.03, 500.0).unwrap();
        let ns: f64 = locate_n_star(&b, 0.01).unwrap();
        // closed form: 500·(3 − 1) = 1000
        assert_relative_eq!(ns, 1000.0, max_relative = 1e-9);
        assert!((b.eval(ns) - 0.01 * ns).abs() <= 1e-9 * 0.01 * ns);
    }
}
