//! The nonlinear operator of the abstract formulation and its directional
//! derivative, with a finite-difference check.
//!
//! Points live in `R × R × L¹([z_min, z_max])`; grid functions stand in
//! for the density component and every integral is the cell sum on a
//! shared grid, so the operator and its derivative commit identical
//! quadrature error and finite differences compare cleanly. The state
//! norm is `|x1| + |x2| + ∫|x3|`.

use crate::birth::BirthFunction;
use crate::error::Error;
use crate::grid::ImmunityGrid;
use crate::kernel::{kernel_cell_masses, BoostingKernel};
use crate::params::ModelParameters;
use crate::real::Real;
use crate::Result;

const DEGENERACY_REL: f64 = 1e-14;

/// Element `(x1, x2, x3)` of the state space; `x3` holds cell averages on
/// a grid shared between paired points and directions.
#[derive(Debug, Clone, PartialEq)]
pub struct AbstractPoint<T> {
    pub x1: T,
    pub x2: T,
    pub x3: Vec<T>,
}

impl<T: Real> AbstractPoint<T> {
    pub fn new(x1: T, x2: T, x3: Vec<T>) -> Self {
        Self { x1, x2, x3 }
    }

    pub fn zero_like(&self) -> Self {
        Self {
            x1: T::zero(),
            x2: T::zero(),
            x3: vec![T::zero(); self.x3.len()],
        }
    }

    /// `x̂ = x1 + x2 + ∫x3`.
    pub fn hat(&self, grid: &ImmunityGrid<T>) -> T {
        self.x1 + self.x2 + grid.integrate(&self.x3)
    }

    /// State-space norm `|x1| + |x2| + ∫|x3|`.
    pub fn norm(&self, grid: &ImmunityGrid<T>) -> T {
        let abs3: Vec<T> = self.x3.iter().map(|v| v.abs()).collect();
        self.x1.abs() + self.x2.abs() + grid.integrate(&abs3)
    }

    pub fn axpy(&self, alpha: T, other: &Self) -> Self {
        Self {
            x1: self.x1 + alpha * other.x1,
            x2: self.x2 + alpha * other.x2,
            x3: self
                .x3
                .iter()
                .zip(&other.x3)
                .map(|(&a, &b)| a + alpha * b)
                .collect(),
        }
    }

    fn scaled(&self, alpha: T) -> Self {
        Self {
            x1: alpha * self.x1,
            x2: alpha * self.x2,
            x3: self.x3.iter().map(|&v| alpha * v).collect(),
        }
    }

    fn checked_hat(&self, grid: &ImmunityGrid<T>) -> Result<T> {
        let hat = self.hat(grid);
        let floor = T::of(DEGENERACY_REL) * self.norm(grid).max(T::of(f64::MIN_POSITIVE));
        if hat.abs() < floor {
            return Err(Error::DegeneratePoint {
                x_hat: hat.as_f64(),
                floor: floor.as_f64(),
            });
        }
        Ok(hat)
    }
}

/// Discretized action of the jump kernel on a grid function:
/// `(K f)(z_i) ≈ ∫ p(z_i, v) f(v) dv`, with the stay atom contributing in
/// place and the boost-to-maximum atom landing in the top cell.
pub fn kernel_apply<T: Real>(
    kernel: &BoostingKernel<T>,
    grid: &ImmunityGrid<T>,
    f: &[T],
) -> Result<Vec<T>> {
    let m = grid.n_cells();
    debug_assert_eq!(f.len(), m);
    let mut out = vec![T::zero(); m];
    for j in 0..m {
        let masses = kernel_cell_masses(kernel, grid.centers()[j], grid)?;
        let weight = f[j] * grid.widths()[j];
        out[j] = out[j] + masses.mass_stay * f[j];
        for i in 0..m {
            out[i] = out[i] + masses.per_cell[i] * weight / grid.widths()[i];
        }
        let top = m - 1;
        out[top] = out[top] + masses.mass_at_zmax * weight / grid.widths()[top];
    }
    Ok(out)
}

/// Evaluate the nonlinear operator `Q` at a point.
pub fn eval_q<T: Real>(
    x: &AbstractPoint<T>,
    params: &ModelParameters<T>,
    birth: &BirthFunction<T>,
    kernel: &BoostingKernel<T>,
    grid: &ImmunityGrid<T>,
) -> Result<AbstractPoint<T>> {
    let hat = x.checked_hat(grid)?;
    let infection = params.beta * x.x1 * x.x2 / hat;
    let kx3 = kernel_apply(kernel, grid, &x.x3)?;
    let factor = params.beta * x.x2 / hat;
    let q3 = kx3
        .iter()
        .zip(&x.x3)
        .map(|(&k, &v)| factor * (k - v))
        .collect();
    Ok(AbstractPoint {
        x1: birth.eval(hat) - infection,
        x2: infection,
        x3: q3,
    })
}

/// Directional derivative `DQ(x; w)` from the closed-form pieces:
/// `DQ1 = P1 − P2`, `DQ2 = P2`, `DQ3 = −P3 + P4`, where `P1 = b'(x̂)·ŵ`
/// and `P2`, `P3`, `P4` are the derivative limits of the bilinear terms.
pub fn eval_dq<T: Real>(
    x: &AbstractPoint<T>,
    w: &AbstractPoint<T>,
    params: &ModelParameters<T>,
    birth: &BirthFunction<T>,
    kernel: &BoostingKernel<T>,
    grid: &ImmunityGrid<T>,
) -> Result<AbstractPoint<T>> {
    if x.x3.len() != w.x3.len() {
        return Err(Error::Config(
            "point and direction must share the grid".into(),
        ));
    }
    let hat = x.checked_hat(grid)?;
    let w_hat = w.hat(grid);
    let w3_int = grid.integrate(&w.x3);
    let beta = params.beta;
    let hat2 = hat * hat;

    let p1 = birth.derivative(hat) * w_hat;
    let p2 = beta
        * (x.x2 * (hat - x.x1) / hat2 * w.x1 + x.x1 * (hat - x.x2) / hat2 * w.x2
            - x.x1 * x.x2 / hat2 * w3_int);

    let kx3 = kernel_apply(kernel, grid, &x.x3)?;
    let kw3 = kernel_apply(kernel, grid, &w.x3)?;
    let mut q3 = Vec::with_capacity(x.x3.len());
    for i in 0..x.x3.len() {
        let p3 = beta
            * (-(x.x2 * x.x3[i]) / hat2 * w.x1 + x.x3[i] * (hat - x.x2) / hat2 * w.x2
                + x.x2 / hat * w.x3[i]
                - x.x2 * x.x3[i] / hat2 * w3_int);
        let p4 = beta
            * (-(x.x2 * kx3[i]) / hat2 * w.x1 + (hat - x.x2) * kx3[i] / hat2 * w.x2
                + x.x2 / hat * kw3[i]
                - x.x2 * kx3[i] / hat2 * w3_int);
        q3.push(p4 - p3);
    }
    Ok(AbstractPoint {
        x1: p1 - p2,
        x2: p2,
        x3: q3,
    })
}

/// Forward finite-difference quotient `(Q(x + h·w) − Q(x))/h`.
pub fn fd_directional<T: Real>(
    x: &AbstractPoint<T>,
    w: &AbstractPoint<T>,
    h: T,
    params: &ModelParameters<T>,
    birth: &BirthFunction<T>,
    kernel: &BoostingKernel<T>,
    grid: &ImmunityGrid<T>,
) -> Result<AbstractPoint<T>> {
    if !(h > T::zero()) {
        return Err(Error::Config("finite-difference step must be > 0".into()));
    }
    let shifted = x.axpy(h, w);
    let q1 = eval_q(&shifted, params, birth, kernel, grid)?;
    let q0 = eval_q(x, params, birth, kernel, grid)?;
    Ok(q1.axpy(-T::one(), &q0).scaled(h.recip()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::{LevelFunction, P0Family};
    use approx::assert_relative_eq;

    fn setup() -> (
        ModelParameters<f64>,
        BirthFunction<f64>,
        BoostingKernel<f64>,
        ImmunityGrid<f64>,
    ) {
        let params = ModelParameters {
            beta: 0.3,
            gamma: 0.1,
            d: 0.02,
            d_i: 0.0,
            z_min: 0.0,
            z_max: 10.0,
            boost_contact_multiplier: 1.0,
        };
        let birth = BirthFunction::beverton_holt(0.04, 1000.0).unwrap();
        let kernel = BoostingKernel::new(
            LevelFunction::Constant(0.25),
            LevelFunction::Constant(0.5),
            P0Family::Uniform,
            0.0,
            10.0,
        )
        .unwrap();
        let grid = ImmunityGrid::uniform(0.0, 10.0, 32).unwrap();
        (params, birth, kernel, grid)
    }

    fn smooth_point(grid: &ImmunityGrid<f64>, a: f64, b: f64) -> AbstractPoint<f64> {
        let x3 = grid
            .centers()
            .iter()
            .map(|&z| a + b * (0.4 * z).sin().powi(2))
            .collect();
        AbstractPoint::new(1.0 + a, 0.8 + b, x3)
    }

    #[test]
    fn q_vanishes_without_infectives() {
        let (p, b, k, g) = setup();
        let mut x = smooth_point(&g, 0.5, 0.2);
        x.x2 = 0.0;
        let q = eval_q(&x, &p, &b, &k, &g).unwrap();
        let hat = x.hat(&g);
        assert_relative_eq!(q.x1, b.eval(hat), max_relative = 1e-13);
        assert_eq!(q.x2, 0.0);
        assert!(q.x3.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn q_scalar_arithmetic() {
        let (mut p, b, k, g) = setup();
        p.beta = 0.3;
        let x = AbstractPoint::new(1.0, 1.0, vec![0.0; g.n_cells()]);
        let q = eval_q(&x, &p, &b, &k, &g).unwrap();
        // x̂ = 2, infection term = 0.3·1·1/2
        assert_relative_eq!(q.x2, 0.15, max_relative = 1e-14);
        assert_relative_eq!(q.x1, b.eval(2.0) - 0.15, max_relative = 1e-12);
    }

    #[test]
    fn stay_only_kernel_makes_q3_vanish() {
        // the stay atom reproduces x3 under the kernel integral
        let (p, b, _, g) = setup();
        let k = BoostingKernel::no_boost(0.0, 10.0);
        let x = smooth_point(&g, 0.5, 0.4);
        let q = eval_q(&x, &p, &b, &k, &g).unwrap();
        for &v in &q.x3 {
            assert!(v.abs() < 1e-14);
        }
    }

    #[test]
    fn kernel_apply_conserves_mass() {
        let (_, _, k, g) = setup();
        let f: Vec<f64> = g.centers().iter().map(|&z| 1.0 + (0.3 * z).cos()).collect();
        let kf = kernel_apply(&k, &g, &f).unwrap();
        assert_relative_eq!(g.integrate(&kf), g.integrate(&f), max_relative = 1e-12);
    }

    #[test]
    fn dq_is_zero_in_the_zero_direction() {
        let (p, b, k, g) = setup();
        let x = smooth_point(&g, 0.5, 0.2);
        let w = x.zero_like();
        let dq = eval_dq(&x, &w, &p, &b, &k, &g).unwrap();
        assert_eq!(dq.x1, 0.0);
        assert_eq!(dq.x2, 0.0);
        assert!(dq.x3.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn dq_structured_part_vanishes_without_infective_slots() {
        let (p, b, k, g) = setup();
        let mut x = smooth_point(&g, 0.5, 0.2);
        let mut w = smooth_point(&g, 0.1, 0.3);
        x.x2 = 0.0;
        w.x2 = 0.0;
        let dq = eval_dq(&x, &w, &p, &b, &k, &g).unwrap();
        for &v in &dq.x3 {
            assert!(v.abs() < 1e-14, "P3 and P4 must vanish, got {v}");
        }
    }

    #[test]
    fn dq_is_linear_in_the_direction() {
        let (p, b, k, g) = setup();
        let x = smooth_point(&g, 0.5, 0.2);
        let w1 = smooth_point(&g, 0.1, 0.3);
        let w2 = smooth_point(&g, 0.7, 0.05);
        let alpha = 1.7;
        let combo = w1.scaled(alpha).axpy(1.0, &w2);
        let lhs = eval_dq(&x, &combo, &p, &b, &k, &g).unwrap();
        let d1 = eval_dq(&x, &w1, &p, &b, &k, &g).unwrap();
        let d2 = eval_dq(&x, &w2, &p, &b, &k, &g).unwrap();
        let rhs = d1.scaled(alpha).axpy(1.0, &d2);
        let diff = lhs.axpy(-1.0, &rhs);
        assert!(diff.norm(&g) <= 1e-12 * rhs.norm(&g).max(1.0));
    }

    #[test]
    fn fd_quotient_converges_to_dq_at_first_order() {
        let (p, b, k, g) = setup();
        let x = smooth_point(&g, 0.5, 0.2);
        let w = smooth_point(&g, 0.1, 0.3);
        let dq = eval_dq(&x, &w, &p, &b, &k, &g).unwrap();
        let mut errs = Vec::new();
        for exp in 2..=6 {
            let h = 10f64.powi(-exp);
            let fd = fd_directional(&x, &w, h, &p, &b, &k, &g).unwrap();
            errs.push(fd.axpy(-1.0, &dq).norm(&g));
        }
        // log-log slope across h = 1e-2 … 1e-6
        let n = errs.len();
        let slope = (errs[0].ln() - errs[n - 1].ln()) / ((n - 1) as f64 * 10f64.ln());
        assert!(
            (0.9..=1.1).contains(&slope),
            "forward-difference slope {slope}, errors {errs:?}"
        );
    }

    #[test]
    fn symmetric_difference_doubles_the_order() {
        let (p, b, k, g) = setup();
        let x = smooth_point(&g, 0.5, 0.2);
        let w = smooth_point(&g, 0.1, 0.3);
        let dq = eval_dq(&x, &w, &p, &b, &k, &g).unwrap();
        let sym_err = |h: f64| {
            let plus = eval_q(&x.axpy(h, &w), &p, &b, &k, &g).unwrap();
            let minus = eval_q(&x.axpy(-h, &w), &p, &b, &k, &g).unwrap();
            let quot = plus.axpy(-1.0, &minus).scaled(1.0 / (2.0 * h));
            quot.axpy(-1.0, &dq).norm(&g)
        };
        let (e1, e2) = (sym_err(1e-2), sym_err(1e-3));
        let slope = (e1 / e2).log10();
        assert!(
            (1.8..=2.2).contains(&slope),
            "symmetric-difference slope {slope} (errors {e1:.3e}, {e2:.3e})"
        );
    }

    #[test]
    fn fd_rejects_zero_step() {
        let (p, b, k, g) = setup();
        let x = smooth_point(&g, 0.5, 0.2);
        let w = smooth_point(&g, 0.1, 0.3);
        assert!(fd_directional(&x, &w, 0.0, &p, &b, &k, &g).is_err());
    }

    #[test]
    fn degenerate_point_is_rejected() {
        let (p, b, k, g) = setup();
        let x = AbstractPoint::new(1.0, -1.0, vec![0.0; g.n_cells()]);
        assert!(matches!(
            eval_q(&x, &p, &b, &k, &g),
            Err(Error::DegeneratePoint { .. })
        ));
    }

    #[test]
    fn dq_is_lipschitz_in_the_base_point() {
        // ‖DQ(x;·) − DQ(y;·)‖ over a probe basis shrinks like ‖x − y‖
        let (p, b, k, g) = setup();
        let x = smooth_point(&g, 0.5, 0.2);
        let probes: Vec<AbstractPoint<f64>> = vec![
            smooth_point(&g, 0.1, 0.3),
            smooth_point(&g, 0.9, 0.0),
            smooth_point(&g, 0.0, 0.8),
        ];
        let delta = smooth_point(&g, 0.05, 0.4);
        let mut prev: Option<f64> = None;
        for &eps in &[1e-1, 1e-2, 1e-3] {
            let y = x.axpy(eps, &delta);
            let gap: f64 = probes
                .iter()
                .map(|w| {
                    let a = eval_dq(&x, w, &p, &b, &k, &g).unwrap();
                    let c = eval_dq(&y, w, &p, &b, &k, &g).unwrap();
                    a.axpy(-1.0, &c).norm(&g) / w.norm(&g)
                })
                .fold(0.0, f64::max);
            if let Some(prev_gap) = prev {
                let ratio = prev_gap / gap;
                assert!(
                    ratio > 6.0,
                    "operator gap should shrink linearly, ratio {ratio}"
                );
            }
            prev = Some(gap);
        }
    }
}
