use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Uniformly spaced sample points `x_j = x0 + j * dx`, `j = 0..n`.
///
/// Each point is the center of a quadrature cell of width `dx`
/// (midpoint rule).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UniformGrid {
    x0: f64,
    dx: f64,
    n: usize,
}

impl UniformGrid {
    pub fn new(x0: f64, dx: f64, n: usize) -> Result<Self> {
        if !x0.is_finite() {
            return Err(Error::InvalidGrid(format!("x0 = {x0} is not finite")));
        }
        if !(dx.is_finite() && dx > 0.0) {
            return Err(Error::InvalidGrid(format!("dx = {dx} must be finite and positive")));
        }
        if n == 0 {
            return Err(Error::InvalidGrid("grid needs at least one point".into()));
        }
        Ok(Self { x0, dx, n })
    }

    /// `n` cells tiling `[lo, hi]`; sample points sit at the cell centers.
    pub fn cell_centered(lo: f64, hi: f64, n: usize) -> Result<Self> {
        if hi.is_nan() || lo.is_nan() || hi <= lo || n == 0 {
            return Err(Error::InvalidGrid(format!("cannot tile [{lo}, {hi}] with {n} cells")));
        }
        let dx = (hi - lo) / n as f64;
        Self::new(lo + 0.5 * dx, dx, n)
    }

    /// `n >= 2` points with both endpoints `lo` and `hi` included.
    pub fn spanning(lo: f64, hi: f64, n: usize) -> Result<Self> {
        if hi.is_nan() || lo.is_nan() || hi <= lo || n < 2 {
            return Err(Error::InvalidGrid(format!("cannot span [{lo}, {hi}] with {n} points")));
        }
        Self::new(lo, (hi - lo) / (n - 1) as f64, n)
    }

    pub fn x0(&self) -> f64 {
        self.x0
    }

    pub fn dx(&self) -> f64 {
        self.dx
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// `max(1, |x|)` over the grid, the scale for absolute tolerances on positions.
    pub fn position_scale(&self) -> f64 {
        self.point(0).abs().max(self.point(self.n - 1).abs()).max(1.0)
    }

    pub fn point(&self, j: usize) -> f64 {
        self.x0 + j as f64 * self.dx
    }

    pub fn points(&self) -> impl ExactSizeIterator<Item = f64> + '_ {
        (0..self.n).map(|j| self.point(j))
    }

    /// Length of the periodic domain `n * dx`.
    pub fn period(&self) -> f64 {
        self.n as f64 * self.dx
    }

    /// Index of the sample point closest to `x`, clamped to the grid.
    pub fn nearest_index(&self, x: f64) -> usize {
        let raw = ((x - self.x0) / self.dx).round();
        if raw <= 0.0 {
            0
        } else {
            (raw as usize).min(self.n - 1)
        }
    }

    /// Same span origin, translated by `delta`.
    pub fn shifted(&self, delta: f64) -> Self {
        Self { x0: self.x0 + delta, ..*self }
    }

    /// Halves the spacing while keeping every existing point.
    pub fn refined(&self) -> Self {
        Self { x0: self.x0, dx: 0.5 * self.dx, n: 2 * self.n - 1 }
    }
}
