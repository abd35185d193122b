//! Uniform cell-centered partition of a truncated interval.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Smallest admissible cell count.
pub const MIN_CELLS: usize = 8;

/// Uniform cell-centered grid on `[x_min, x_max]` with `n` cells.
///
/// Cell `i` covers `[x_min + i h, x_min + (i+1) h]` and is represented by its
/// center `x_min + (i + 1/2) h`. All integrals in the crate use the midpoint
/// rule on this partition.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    x_min: f64,
    x_max: f64,
    n: usize,
}

impl Grid {
    pub fn new(x_min: f64, x_max: f64, n: usize) -> Result<Self> {
        if !(x_min.is_finite() && x_max.is_finite()) {
            return Err(Error::InvalidGrid(format!(
                "bounds must be finite, got [{x_min}, {x_max}]"
            )));
        }
        if x_min >= x_max {
            return Err(Error::InvalidGrid(format!(
                "x_min must be < x_max, got [{x_min}, {x_max}]"
            )));
        }
        if n < MIN_CELLS {
            return Err(Error::InvalidGrid(format!(
                "need at least {MIN_CELLS} cells, got {n}"
            )));
        }
        Ok(Self { x_min, x_max, n })
    }

    /// Symmetric grid `[-half_width, half_width]`.
    pub fn symmetric(half_width: f64, n: usize) -> Result<Self> {
        Self::new(-half_width, half_width, n)
    }

    #[inline]
    pub fn x_min(&self) -> f64 {
        self.x_min
    }

    #[inline]
    pub fn x_max(&self) -> f64 {
        self.x_max
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        false
    }

    #[inline]
    pub fn spacing(&self) -> f64 {
        (self.x_max - self.x_min) / self.n as f64
    }

    #[inline]
    pub fn range(&self) -> f64 {
        self.x_max - self.x_min
    }

    /// Center of cell `i`.
    #[inline]
    pub fn center(&self, i: usize) -> f64 {
        self.x_min + (i as f64 + 0.5) * self.spacing()
    }

    /// Left face of cell `i`; `face(n)` is `x_max`.
    #[inline]
    pub fn face(&self, i: usize) -> f64 {
        if i == self.n {
            self.x_max
        } else {
            self.x_min + i as f64 * self.spacing()
        }
    }

    pub fn centers(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.center(i)).collect()
    }

    /// Index of the cell containing `x`, clamped to the grid.
    pub fn cell_of(&self, x: f64) -> usize {
        let s = ((x - self.x_min) / self.spacing()).floor();
        if s <= 0.0 {
            0
        } else {
            (s as usize).min(self.n - 1)
        }
    }

    pub fn contains(&self, x: f64) -> bool {
        x >= self.x_min && x <= self.x_max
    }

    /// Same partition up to a relative tolerance on the bounds.
    pub fn same_as(&self, other: &Grid) -> bool {
        let tol = 1e-12 * self.range().max(other.range());
        self.n == other.n
            && (self.x_min - other.x_min).abs() <= tol
            && (self.x_max - other.x_max).abs() <= tol
    }

    /// Fails with [`Error::GridMismatch`] unless [`Grid::same_as`] holds.
    pub fn ensure_same(&self, other: &Grid) -> Result<()> {
        if self.same_as(other) {
            Ok(())
        } else {
            Err(Error::GridMismatch(format!(
                "[{}, {}]x{} vs [{}, {}]x{}",
                self.x_min, self.x_max, self.n, other.x_min, other.x_max, other.n
            )))
        }
    }
}
