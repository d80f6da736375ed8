use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Uniform periodic sampling of an interval `[origin, origin + length)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid1 {
    n: usize,
    length: f64,
    origin: f64,
}

impl Grid1 {
    pub fn new(n: usize, length: f64, origin: f64) -> Result<Self> {
        if n < 4 || !n.is_power_of_two() {
            return Err(Error::InvalidGrid(format!(
                "sample count {n} must be a power of two >= 4"
            )));
        }
        if !(length.is_finite() && length > 0.0) {
            return Err(Error::InvalidGrid(format!(
                "domain length {length} must be positive"
            )));
        }
        if !origin.is_finite() {
            return Err(Error::InvalidGrid("origin must be finite".into()));
        }
        Ok(Self { n, length, origin })
    }

    /// Grid on `[-length/2, length/2)`.
    pub fn centered(n: usize, length: f64) -> Result<Self> {
        Self::new(n, length, -0.5 * length)
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn origin(&self) -> f64 {
        self.origin
    }

    pub fn spacing(&self) -> f64 {
        self.length / self.n as f64
    }

    pub fn point(&self, j: usize) -> f64 {
        self.origin + j as f64 * self.spacing()
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.n).map(|j| self.point(j)).collect()
    }

    /// Spacing of the dual frequency lattice, `2 pi / L`.
    pub fn frequency_spacing(&self) -> f64 {
        2.0 * PI / self.length
    }

    /// Signed mode number of FFT bin `m`, in `-n/2 ..= n/2 - 1`.
    pub fn mode(&self, m: usize) -> i64 {
        let n = self.n as i64;
        let m = m as i64;
        if m < n / 2 {
            m
        } else {
            m - n
        }
    }

    /// Angular frequency of FFT bin `m`.
    pub fn frequency(&self, m: usize) -> f64 {
        self.mode(m) as f64 * self.frequency_spacing()
    }

    pub fn frequencies(&self) -> Vec<f64> {
        (0..self.n).map(|m| self.frequency(m)).collect()
    }

    /// Frequencies used in Fourier multipliers. The unpaired Nyquist bin is
    /// mapped to zero so that odd symbols stay odd on the discrete lattice.
    pub fn symbol_frequencies(&self) -> Vec<f64> {
        (0..self.n)
            .map(|m| {
                if m == self.n / 2 {
                    0.0
                } else {
                    self.frequency(m)
                }
            })
            .collect()
    }

    pub fn nyquist_index(&self) -> usize {
        self.n / 2
    }

    pub fn largest_frequency(&self) -> f64 {
        PI / self.spacing()
    }

    pub fn same_as(&self, other: &Grid1) -> bool {
        let tol = 1e-12 * self.length.abs().max(1.0);
        self.n == other.n
            && (self.length - other.length).abs() <= tol
            && (self.origin - other.origin).abs() <= tol
    }
}

/// Tensor grid for phase space: `x` first (rows), `v` second (contiguous).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhaseGrid {
    pub gx: Grid1,
    pub gv: Grid1,
}

impl PhaseGrid {
    pub fn new(gx: Grid1, gv: Grid1) -> Result<Self> {
        let centered = -0.5 * gv.length();
        if (gv.origin() - centered).abs() > 1e-12 * gv.length() {
            return Err(Error::InvalidGrid(format!(
                "velocity grid must be symmetric about 0 (origin {} != {})",
                gv.origin(),
                centered
            )));
        }
        Ok(Self { gx, gv })
    }

    /// `nx` points on `[x0, x0 + lx)` and `nv` points on `[-lv/2, lv/2)`.
    pub fn build(nx: usize, lx: f64, x0: f64, nv: usize, lv: f64) -> Result<Self> {
        Self::new(Grid1::new(nx, lx, x0)?, Grid1::centered(nv, lv)?)
    }

    pub fn nx(&self) -> usize {
        self.gx.len()
    }

    pub fn nv(&self) -> usize {
        self.gv.len()
    }

    pub fn size(&self) -> usize {
        self.nx() * self.nv()
    }

    pub fn cell(&self) -> f64 {
        self.gx.spacing() * self.gv.spacing()
    }

    pub fn same_as(&self, other: &PhaseGrid) -> bool {
        self.gx.same_as(&other.gx) && self.gv.same_as(&other.gv)
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize) -> usize {
        i * self.nv() + j
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_sizes() {
        assert!(Grid1::new(3, 1.0, 0.0).is_err());
        assert!(Grid1::new(12, 1.0, 0.0).is_err());
        assert!(Grid1::new(2, 1.0, 0.0).is_err());
        assert!(Grid1::new(16, 0.0, 0.0).is_err());
        assert!(Grid1::new(16, -1.0, 0.0).is_err());
        assert!(Grid1::new(16, 1.0, 0.0).is_ok());
    }

    #[test]
    fn frequency_layout() {
        let g = Grid1::new(8, 2.0 * PI, 0.0).unwrap();
        let modes: Vec<i64> = (0..8).map(|m| g.mode(m)).collect();
        assert_eq!(modes, vec![0, 1, 2, 3, -4, -3, -2, -1]);
        assert_eq!(g.frequency(5), -3.0);
        assert_eq!(g.symbol_frequencies()[4], 0.0);
        assert_eq!(g.largest_frequency(), 4.0);
    }

    #[test]
    fn velocity_grid_must_be_centered() {
        let gx = Grid1::new(16, 1.0, 0.0).unwrap();
        assert!(PhaseGrid::new(gx, Grid1::new(16, 4.0, 0.0).unwrap()).is_err());
        assert!(PhaseGrid::new(gx, Grid1::centered(16, 4.0).unwrap()).is_ok());
    }
}
