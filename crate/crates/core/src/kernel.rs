//! Immune-boosting jump kernel `p(z, z̃)`.
//!
//! On exposure, a host at level `z̃` jumps to `z_max` with probability
//! `c_max(z̃)` (atom), redistributes over `(z̃, z_max]` with probability
//! `c0(z̃)` according to the density `p0(·, z̃)`, and stays put with the
//! remainder `c1(z̃) = 1 − c_max(z̃) − c0(z̃)` (atom at `z̃`). Total mass is
//! one for every source level, and nothing ever jumps downward.

use crate::error::Error;
use crate::grid::ImmunityGrid;
use crate::real::Real;
use crate::Result;

/// A `[z_min, z_max] → [0, 1]` weight profile for `c_max` or `c0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LevelFunction<T> {
    Constant(T),
    /// Linear ramp between the values at `z_min` and `z_max`.
    Linear { at_min: T, at_max: T },
}

impl<T: Real> LevelFunction<T> {
    fn eval(&self, z: T, z_min: T, z_max: T) -> T {
        match *self {
            LevelFunction::Constant(v) => v,
            LevelFunction::Linear { at_min, at_max } => {
                let u = (z - z_min) / (z_max - z_min);
                at_min + (at_max - at_min) * u
            }
        }
    }

    fn range_ok(&self) -> bool {
        let inside = |v: T| v.is_finite() && v >= T::zero() && v <= T::one();
        match *self {
            LevelFunction::Constant(v) => inside(v),
            LevelFunction::Linear { at_min, at_max } => inside(at_min) && inside(at_max),
        }
    }
}

/// Continuous redistribution density on `(z̃, z_max]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum P0Family<T> {
    Uniform,
    /// `∝ exp(−rate·(z − z̃))`, truncated and renormalized on `(z̃, z_max]`.
    TruncatedExponential { rate: T },
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoostingKernel<T> {
    pub c_max: LevelFunction<T>,
    pub c0: LevelFunction<T>,
    pub p0: P0Family<T>,
    z_min: T,
    z_max: T,
}

impl<T: Real> BoostingKernel<T> {
    pub fn new(
        c_max: LevelFunction<T>,
        c0: LevelFunction<T>,
        p0: P0Family<T>,
        z_min: T,
        z_max: T,
    ) -> Result<Self> {
        if !(z_min.is_finite() && z_max.is_finite() && z_min < z_max) {
            return Err(Error::param("z_min/z_max", "need finite z_min < z_max"));
        }
        if !c_max.range_ok() {
            return Err(Error::param("c_max", "values must lie in [0, 1]"));
        }
        if !c0.range_ok() {
            return Err(Error::param("c0", "values must lie in [0, 1]"));
        }
        if let P0Family::TruncatedExponential { rate } = p0 {
            if !(rate.is_finite() && rate > T::zero()) {
                return Err(Error::param("rate", "exponential rate must be > 0"));
            }
        }
        let k = Self {
            c_max,
            c0,
            p0,
            z_min,
            z_max,
        };
        // c_max + c0 <= 1 everywhere; both profiles are linear, so the
        // endpoints bound the sum.
        for z in [z_min, z_max] {
            k.c_stay(z)?;
        }
        Ok(k)
    }

    /// Boost-to-maximum kernel (`c_max ≡ 1`): the defining choice of the
    /// reduced model in which every exposure restores full immunity.
    pub fn boost_to_max(z_min: T, z_max: T) -> Self {
        Self::new(
            LevelFunction::Constant(T::one()),
            LevelFunction::Constant(T::zero()),
            P0Family::Uniform,
            z_min,
            z_max,
        )
        .expect("constant-one profile is admissible")
    }

    /// No-boosting kernel (`c1 ≡ 1`): exposure leaves the level unchanged.
    pub fn no_boost(z_min: T, z_max: T) -> Self {
        Self::new(
            LevelFunction::Constant(T::zero()),
            LevelFunction::Constant(T::zero()),
            P0Family::Uniform,
            z_min,
            z_max,
        )
        .expect("constant-zero profile is admissible")
    }

    pub fn domain(&self) -> (T, T) {
        (self.z_min, self.z_max)
    }

    pub fn c_max_at(&self, z: T) -> T {
        self.c_max.eval(z, self.z_min, self.z_max)
    }

    pub fn c0_at(&self, z: T) -> T {
        self.c0.eval(z, self.z_min, self.z_max)
    }

    /// `c1(z̃) = 1 − c_max(z̃) − c0(z̃)`; errors when the weights exceed one.
    pub fn c_stay(&self, z: T) -> Result<T> {
        let total = self.c_max_at(z) + self.c0_at(z);
        if total > T::one() + T::of(1e-12) {
            return Err(Error::KernelMassExceedsOne {
                z: z.as_f64(),
                total: total.as_f64(),
            });
        }
        Ok((T::one() - total).max(T::zero()))
    }

    /// Whether the kernel has any continuous component anywhere.
    pub fn has_continuous_part(&self) -> bool {
        let nonzero = |lf: &LevelFunction<T>| match *lf {
            LevelFunction::Constant(v) => v > T::zero(),
            LevelFunction::Linear { at_min, at_max } => {
                at_min > T::zero() || at_max > T::zero()
            }
        };
        nonzero(&self.c0)
    }

    /// Whether any exposure changes the immunity level at all.
    pub fn has_any_boost(&self) -> bool {
        let nonzero = |lf: &LevelFunction<T>| match *lf {
            LevelFunction::Constant(v) => v > T::zero(),
            LevelFunction::Linear { at_min, at_max } => {
                at_min > T::zero() || at_max > T::zero()
            }
        };
        nonzero(&self.c_max) || nonzero(&self.c0)
    }

    /// Closed-form mass of `p0(·, z̃)` on `[a, b] ∩ (z̃, z_max]`.
    fn p0_mass(&self, source: T, a: T, b: T) -> T {
        let lo = a.max(source);
        let hi = b.min(self.z_max);
        if hi <= lo {
            return T::zero();
        }
        match self.p0 {
            P0Family::Uniform => (hi - lo) / (self.z_max - source),
            P0Family::TruncatedExponential { rate } => {
                // (e^{−rate(lo−z̃)} − e^{−rate(hi−z̃)}) / (1 − e^{−rate(z_max−z̃)})
                let num = (-rate * (lo - source)).exp() - (-rate * (hi - source)).exp();
                let den = -(-rate * (self.z_max - source)).exp_m1();
                num / den
            }
        }
    }
}

/// Discrete split of a unit boost from level `z̃`: atom mass at `z_max`,
/// continuous mass per grid cell, and the stay-put mass.
#[derive(Debug, Clone, PartialEq)]
pub struct CellMasses<T> {
    pub mass_at_zmax: T,
    pub per_cell: Vec<T>,
    pub mass_stay: T,
}

impl<T: Real> CellMasses<T> {
    pub fn total(&self) -> T {
        self.mass_at_zmax + self.mass_stay + self.per_cell.iter().copied().sum::<T>()
    }
}

/// Split the boosting kernel at source level `z̃` over the cells of `grid`.
///
/// Cells entirely below `z̃` get zero; the continuous masses use the
/// closed-form cell integrals of the `p0` family, which telescope so the
/// total is one to rounding. A source at `z_max` has no room for the
/// continuous part; its `c0` weight collapses onto the atom.
pub fn kernel_cell_masses<T: Real>(
    kernel: &BoostingKernel<T>,
    source: T,
    grid: &ImmunityGrid<T>,
) -> Result<CellMasses<T>> {
    let (z_min, z_max) = kernel.domain();
    if source < z_min - T::of(1e-12) || source > z_max + T::of(1e-12) {
        return Err(Error::OutsideDomain {
            z: source.as_f64(),
            z_min: z_min.as_f64(),
            z_max: z_max.as_f64(),
        });
    }
    let mass_stay = kernel.c_stay(source)?;
    let mut mass_at_zmax = kernel.c_max_at(source);
    let c0 = kernel.c0_at(source);
    let span = z_max - source;
    let degenerate = span <= T::of(1e-14) * (z_max - z_min);
    let mut per_cell = vec![T::zero(); grid.n_cells()];
    if degenerate {
        mass_at_zmax = mass_at_zmax + c0;
    } else if c0 > T::zero() {
        let edges = grid.edges();
        for (i, w) in edges.windows(2).enumerate() {
            per_cell[i] = c0 * kernel.p0_mass(source, w[0], w[1]);
        }
    }
    Ok(CellMasses {
        mass_at_zmax,
        per_cell,
        mass_stay,
    })
}
