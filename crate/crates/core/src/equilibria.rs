//! Disease-free equilibrium, reproduction numbers, and stability
//! classification.
//!
//! The two thresholds are `R0 = β/(γ+d+d_I)` and `R̃0 = β/(γ+d)`; the DFE
//! `(N*, 0, 0)` is globally asymptotically stable for `R̃0 < 1`, locally
//! stable for `R0 < 1`, and unstable for `R0 > 1`, with linearized growth
//! rate `β − γ − d − d_I` in the unstable direction.

use crate::birth::BirthFunction;
use crate::decay::DecayFunction;
use crate::error::Error;
use crate::grid::ImmunityGrid;
use crate::params::ModelParameters;
use crate::real::Real;
use crate::validate::locate_n_star;
use crate::Result;

/// Stability classification of the disease-free equilibrium.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Classification {
    GloballyStable,
    LocallyStable,
    Unstable,
    /// `R0 = 1` to within the tie tolerance; the critical case is not
    /// covered by the threshold results.
    ThresholdInconclusive,
}

impl Classification {
    pub fn as_str(self) -> &'static str {
        match self {
            Classification::GloballyStable => "globally_stable",
            Classification::LocallyStable => "locally_stable",
            Classification::Unstable => "unstable",
            Classification::ThresholdInconclusive => "threshold_inconclusive",
        }
    }
}

/// Summary of the DFE analysis.
#[derive(Debug, Clone, Copy)]
pub struct EquilibriumReport<T> {
    pub n_star: T,
    pub s_star: T,
    pub r0: T,
    pub r0_tilde: T,
    pub classification: Classification,
    pub growth_rate: T,
}

const R0_TIE_TOL: f64 = 1e-12;

/// Demographic equilibrium `b(N*) = d·N*`, by bracketing bisection with
/// geometric bracket expansion from `N = 1`.
pub fn find_n_star<T: Real>(birth: &BirthFunction<T>, d: T) -> Result<T> {
    locate_n_star(birth, d)
}

/// `R0 = β/(γ + d + d_I)`.
pub fn compute_r0<T: Real>(params: &ModelParameters<T>) -> T {
    params.beta / params.infective_exit_rate()
}

/// `R̃0 = β/(γ + d)`; agrees with `R0` exactly when `d_I = 0`.
pub fn compute_r0_tilde<T: Real>(params: &ModelParameters<T>) -> T {
    params.beta / (params.gamma + params.d)
}

/// Threshold classification of the DFE.
pub fn classify_dfe<T: Real>(params: &ModelParameters<T>) -> Classification {
    let r0 = compute_r0(params);
    let r0_tilde = compute_r0_tilde(params);
    if r0_tilde < T::one() {
        Classification::GloballyStable
    } else if (r0 - T::one()).abs() <= T::of(R0_TIE_TOL) {
        Classification::ThresholdInconclusive
    } else if r0 < T::one() {
        Classification::LocallyStable
    } else {
        Classification::Unstable
    }
}

/// Linearized growth rate of the infective perturbation about the DFE,
/// `(γ+d+d_I)(R0 − 1) = β − γ − d − d_I`.
pub fn linear_growth_rate<T: Real>(params: &ModelParameters<T>) -> T {
    params.beta - params.gamma - params.d - params.d_i
}

/// Stationary immune-density profile for the disease-free case.
///
/// With `I* = 0` the stationary transport problem has only the trivial
/// solution, so this returns the zero profile on `grid`; the endemic
/// branch (`I* > 0`) is deliberately not analyzed.
pub fn stationary_r_profile<T: Real>(
    params: &ModelParameters<T>,
    decay: &DecayFunction<T>,
    grid: &ImmunityGrid<T>,
    i_star: T,
) -> Result<Vec<T>> {
    if i_star != T::zero() {
        return Err(Error::EndemicOutOfScope {
            i_star: i_star.as_f64(),
        });
    }
    let profile = vec![T::zero(); grid.n_cells()];
    debug_assert!(
        stationary_residual(params, decay, grid, &profile, i_star)
            == T::zero(),
        "zero profile must satisfy the stationary equations exactly"
    );
    Ok(profile)
}

/// Max residual of the stationary interior and boundary equations at a
/// candidate profile (used to certify `stationary_r_profile`).
pub fn stationary_residual<T: Real>(
    params: &ModelParameters<T>,
    decay: &DecayFunction<T>,
    grid: &ImmunityGrid<T>,
    profile: &[T],
    i_star: T,
) -> T {
    // Interior: d/dz(g·r̄) − d·r̄ + λ*(∫p r̄ − r̄); at the zero profile every
    // term vanishes identically, including the jump integral, so the
    // kernel does not need to be evaluated. λ* carries I*. Fluxes are
    // upwind for the downward transport: edge i takes the cell above it.
    let mut worst = T::zero();
    let edges = grid.edges();
    let m = grid.n_cells();
    for i in 0..m {
        let flux_out = decay.eval(edges[i]) * profile[i];
        let flux_in = if i + 1 < m {
            decay.eval(edges[i + 1]) * profile[i + 1]
        } else {
            params.gamma * i_star
        };
        let flux_div = (flux_in - flux_out) / grid.widths()[i];
        let resid = flux_div - params.d * profile[i] - params.beta * i_star * profile[i];
        worst = worst.max(resid.abs());
    }
    // Boundary: g(z_max)·r̄(z_max) − γ·I* (the jump integral vanishes at
    // the zero profile).
    let top = decay.eval(grid.z_max()) * profile.last().copied().unwrap_or(T::zero())
        - params.gamma * i_star;
    worst.max(top.abs())
}

/// Assemble the full DFE report for a model setup.
pub fn dfe_report<T: Real>(
    params: &ModelParameters<T>,
    birth: &BirthFunction<T>,
) -> Result<EquilibriumReport<T>> {
    let n_star = find_n_star(birth, params.d)?;
    Ok(EquilibriumReport {
        n_star,
        s_star: n_star,
        r0: compute_r0(params),
        r0_tilde: compute_r0_tilde(params),
        classification: classify_dfe(params),
        growth_rate: linear_growth_rate(params),
    })
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

    #[test]
    fn reproduction_numbers() {
        let p = params(0.3, 0.1, 0.02, 0.08);
        assert_relative_eq!(compute_r0(&p), 1.5, max_relative = 1e-14);
        let p0 = params(0.3, 0.1, 0.02, 0.0);
        assert_relative_eq!(compute_r0(&p0), 2.5, max_relative = 1e-14);
        assert_relative_eq!(compute_r0_tilde(&p0), 2.5, max_relative = 1e-14);
        let sub = params(0.08, 0.09, 0.01, 0.0);
        assert_relative_eq!(compute_r0_tilde(&sub), 0.8, max_relative = 1e-14);
    }

    #[test]
    fn r0_never_exceeds_r0_tilde() {
        for d_i in [0.0, 0.01, 0.5, 3.0] {
            let p = params(0.3, 0.1, 0.02, d_i);
            let (r0, rt) = (compute_r0(&p), compute_r0_tilde(&p));
            assert!(r0 <= rt);
            if d_i == 0.0 {
                assert_eq!(r0, rt);
            } else {
                assert!(r0 < rt);
            }
        }
    }

    #[test]
    fn classification_thresholds() {
        assert_eq!(
            classify_dfe(&params(0.08, 0.09, 0.01, 0.0)),
            Classification::GloballyStable
        );
        assert_eq!(
            classify_dfe(&params(0.3, 0.1, 0.02, 0.08)),
            Classification::Unstable
        );
        // d_I large: R0 = 0.9 < 1 <= R̃0 = 1.2
        let p = params(0.24, 0.18, 0.02, 0.24 / 0.9 - 0.2);
        assert!(compute_r0_tilde(&p) > 1.0);
        assert_relative_eq!(compute_r0(&p), 0.9, max_relative = 1e-12);
        assert_eq!(classify_dfe(&p), Classification::LocallyStable);
        // exact threshold
        let tie = params(0.2, 0.1, 0.05, 0.05);
        assert_eq!(classify_dfe(&tie), Classification::ThresholdInconclusive);
    }

    #[test]
    fn classification_monotone_in_beta() {
        fn stability_rank(c: Classification) -> u8 {
            match c {
                Classification::GloballyStable => 0,
                Classification::LocallyStable => 1,
                Classification::ThresholdInconclusive => 2,
                Classification::Unstable => 3,
            }
        }
        let mut prev = 0u8;
        for k in 1..=400 {
            let beta = 0.001 * k as f64;
            let rank = stability_rank(classify_dfe(&params(beta, 0.1, 0.02, 0.08)));
            assert!(rank >= prev, "stability increased at beta = {beta}");
            prev = rank;
        }
    }

    #[test]
    fn growth_rate_formula() {
        let p = params(0.3, 0.1, 0.02, 0.08);
        assert_relative_eq!(linear_growth_rate(&p), 0.10, max_relative = 1e-12);
        let crit = params(0.2, 0.1, 0.05, 0.05);
        assert_eq!(linear_growth_rate(&crit), 0.0);
        // identity (γ+d+d_I)(R0−1) = β−γ−d−d_I
        assert_relative_eq!(
            (p.infective_exit_rate()) * (compute_r0(&p) - 1.0),
            linear_growth_rate(&p),
            max_relative = 1e-12
        );
    }

    #[test]
    fn n_star_matches_closed_form() {
        let b = BirthFunction::beverton_holt(0.04, 1000.0).unwrap();
        assert_relative_eq!(find_n_star(&b, 0.02).unwrap(), 1000.0, max_relative = 1e-9);
        let b2 = BirthFunction::beverton_holt(0.03, 500.0).unwrap();
        assert_relative_eq!(find_n_star(&b2, 0.01).unwrap(), 1000.0, max_relative = 1e-9);
        assert!(find_n_star(&b, 0.05).is_err());
    }

    #[test]
    fn dfe_profile_is_zero_with_zero_residual() {
        let p = params(0.3, 0.1, 0.02, 0.0);
        let g = DecayFunction::constant(0.5, 0.0, 10.0).unwrap();
        let grid = ImmunityGrid::uniform(0.0, 10.0, 32).unwrap();
        let profile = stationary_r_profile(&p, &g, &grid, 0.0).unwrap();
        assert!(profile.iter().all(|&v| v == 0.0));
        assert_eq!(stationary_residual(&p, &g, &grid, &profile, 0.0), 0.0);
        assert!(matches!(
            stationary_r_profile(&p, &g, &grid, 0.5),
            Err(Error::EndemicOutOfScope { .. })
        ));
    }

    #[test]
    fn report_assembles_dfe() {
        let p = params(0.08, 0.09, 0.01, 0.0);
        let b = BirthFunction::beverton_holt(0.04, 1000.0).unwrap();
        let rep = dfe_report(&p, &b).unwrap();
        // closed form K(rho/d - 1) = 1000*(0.04/0.01 - 1)
        assert_relative_eq!(rep.n_star, 3000.0, max_relative = 1e-9);
        assert_eq!(rep.s_star, rep.n_star);
        assert_eq!(rep.classification, Classification::GloballyStable);
    }
}
