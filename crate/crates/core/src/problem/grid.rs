use serde::Serialize;

use crate::{Error, Result};

/// Uniform cells on `(0, L)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Grid1D {
    length: f64,
    n_cells: usize,
}

impl Grid1D {
    pub fn new(length: f64, n_cells: usize) -> Result<Self> {
        if !(length > 0.0) || !length.is_finite() {
            return Err(Error::Argument(format!(
                "slab length must be positive, got {length}"
            )));
        }
        if n_cells == 0 {
            return Err(Error::Argument("grid needs at least one cell".into()));
        }
        Ok(Self { length, n_cells })
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn n_cells(&self) -> usize {
        self.n_cells
    }

    pub fn h(&self) -> f64 {
        self.length / self.n_cells as f64
    }

    pub fn center(&self, i: usize) -> f64 {
        (i as f64 + 0.5) * self.h()
    }

    /// Edge `k` for `k = 0..=n_cells`; the last edge is exactly `L`.
    pub fn edge(&self, k: usize) -> f64 {
        if k == self.n_cells {
            self.length
        } else {
            k as f64 * self.h()
        }
    }

    pub fn centers(&self) -> Vec<f64> {
        (0..self.n_cells).map(|i| self.center(i)).collect()
    }

    pub fn edges(&self) -> Vec<f64> {
        (0..=self.n_cells).map(|k| self.edge(k)).collect()
    }

    /// Same slab with every cell split in two.
    pub fn refined(&self) -> Self {
        Self {
            length: self.length,
            n_cells: 2 * self.n_cells,
        }
    }
}
