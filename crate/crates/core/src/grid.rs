//! Discretization of the immunity interval into finite-volume cells.

use crate::error::Error;
use crate::real::Real;
use crate::Result;

/// Cell partition of `[z_min, z_max]`: edges `e_0 < e_1 < … < e_M`,
/// with derived centers and widths.
#[derive(Debug, Clone, PartialEq)]
pub struct ImmunityGrid<T> {
    edges: Vec<T>,
    centers: Vec<T>,
    widths: Vec<T>,
}

impl<T: Real> ImmunityGrid<T> {
    /// Uniform grid with `n_cells` cells.
    pub fn uniform(z_min: T, z_max: T, n_cells: usize) -> Result<Self> {
        if n_cells == 0 {
            return Err(Error::param("n_cells", "need at least one cell"));
        }
        if !(z_min.is_finite() && z_max.is_finite() && z_min < z_max) {
            return Err(Error::param("z_min/z_max", "need finite z_min < z_max"));
        }
        let h = (z_max - z_min) / T::from_count(n_cells);
        let mut edges: Vec<T> = (0..=n_cells)
            .map(|k| z_min + T::from_count(k) * h)
            .collect();
        // Pin the last edge so cumulative rounding cannot move z_max.
        edges[n_cells] = z_max;
        Self::from_edges(edges)
    }

    /// Grid from explicit strictly increasing edges.
    pub fn from_edges(edges: Vec<T>) -> Result<Self> {
        if edges.len() < 2 {
            return Err(Error::param("edges", "need at least two edges"));
        }
        for w in edges.windows(2) {
            if !(w[1] > w[0]) {
                return Err(Error::param("edges", "edges must strictly increase"));
            }
        }
        let centers = edges
            .windows(2)
            .map(|w| (w[0] + w[1]) / T::of(2.0))
            .collect();
        let widths = edges.windows(2).map(|w| w[1] - w[0]).collect();
        Ok(Self {
            edges,
            centers,
            widths,
        })
    }

    pub fn n_cells(&self) -> usize {
        self.widths.len()
    }

    pub fn z_min(&self) -> T {
        self.edges[0]
    }

    pub fn z_max(&self) -> T {
        *self.edges.last().unwrap()
    }

    pub fn edges(&self) -> &[T] {
        &self.edges
    }

    pub fn centers(&self) -> &[T] {
        &self.centers
    }

    pub fn widths(&self) -> &[T] {
        &self.widths
    }

    pub fn min_width(&self) -> T {
        self.widths
            .iter()
            .copied()
            .fold(T::infinity(), |a, b| a.min(b))
    }

    /// Cell-sum quadrature `Σ f_i·Δz_i` of a grid function.
    pub fn integrate(&self, values: &[T]) -> T {
        debug_assert_eq!(values.len(), self.n_cells());
        values
            .iter()
            .zip(&self.widths)
            .map(|(&v, &w)| v * w)
            .sum()
    }

    /// Cell averages of a pointwise density, by 3-point Simpson per cell.
    pub fn cell_averages(&self, f: &dyn Fn(T) -> T) -> Vec<T> {
        self.edges
            .windows(2)
            .map(|w| {
                let (a, b) = (w[0], w[1]);
                let m = (a + b) / T::of(2.0);
                (f(a) + T::of(4.0) * f(m) + f(b)) / T::of(6.0)
            })
            .collect()
    }
}
