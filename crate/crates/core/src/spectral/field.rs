use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::fft;
use super::grid::{Grid1, PhaseGrid};
use crate::error::{Error, Result};

/// Which axes of a [`PhaseField`] currently hold Fourier coefficients.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Representation {
    Physical,
    FourierX,
    FourierV,
    FourierXV,
}

impl Representation {
    pub fn x_transformed(self) -> bool {
        matches!(self, Representation::FourierX | Representation::FourierXV)
    }

    pub fn v_transformed(self) -> bool {
        matches!(self, Representation::FourierV | Representation::FourierXV)
    }

    fn from_flags(x: bool, v: bool) -> Self {
        match (x, v) {
            (false, false) => Representation::Physical,
            (true, false) => Representation::FourierX,
            (false, true) => Representation::FourierV,
            (true, true) => Representation::FourierXV,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    X,
    V,
    Both,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Forward,
    Inverse,
}

/// Forward transform of one line in place: `u_hat(k_m) = dx e^{-i k_m a} DFT[m]`.
pub(crate) fn forward_line_scale(grid: &Grid1) -> Vec<Complex64> {
    let dx = grid.spacing();
    let a = grid.origin();
    (0..grid.len())
        .map(|m| Complex64::from_polar(dx, -grid.frequency(m) * a))
        .collect()
}

/// Factors applied before the raw inverse DFT, including `1/(n dx)`.
pub(crate) fn inverse_line_scale(grid: &Grid1) -> Vec<Complex64> {
    let s = 1.0 / (grid.len() as f64 * grid.spacing());
    let a = grid.origin();
    (0..grid.len())
        .map(|m| Complex64::from_polar(s, grid.frequency(m) * a))
        .collect()
}

/// Continuous-normalized Fourier transform of a sampled function,
/// `u_hat(xi) = int u(y) e^{-i xi y} dy`, in FFT bin order.
pub fn forward_1d(grid: &Grid1, samples: &[Complex64]) -> Vec<Complex64> {
    let mut out = samples.to_vec();
    fft::fft(&mut out, false);
    for (c, s) in out.iter_mut().zip(forward_line_scale(grid)) {
        *c *= s;
    }
    out
}

/// Inverse of [`forward_1d`], carrying the `(2 pi)^{-1}` factor.
pub fn inverse_1d(grid: &Grid1, coeffs: &[Complex64]) -> Vec<Complex64> {
    let mut out: Vec<Complex64> = coeffs
        .iter()
        .zip(inverse_line_scale(grid))
        .map(|(c, s)| c * s)
        .collect();
    fft::fft(&mut out, true);
    out
}

/// Samples of `f(x, v)` on a [`PhaseGrid`], row-major with `v` contiguous.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseField {
    grid: PhaseGrid,
    data: Vec<Complex64>,
    repr: Representation,
    real_valued: bool,
}

impl PhaseField {
    pub fn zeros(grid: PhaseGrid) -> Self {
        Self {
            grid,
            data: vec![Complex64::new(0.0, 0.0); grid.size()],
            repr: Representation::Physical,
            real_valued: true,
        }
    }

    pub fn from_fn(grid: PhaseGrid, f: impl Fn(f64, f64) -> f64) -> Self {
        let xs = grid.gx.points();
        let vs = grid.gv.points();
        let mut data = Vec::with_capacity(grid.size());
        for &x in &xs {
            for &v in &vs {
                data.push(Complex64::new(f(x, v), 0.0));
            }
        }
        Self {
            grid,
            data,
            repr: Representation::Physical,
            real_valued: true,
        }
    }

    pub fn from_complex_fn(grid: PhaseGrid, f: impl Fn(f64, f64) -> Complex64) -> Self {
        let xs = grid.gx.points();
        let vs = grid.gv.points();
        let mut data = Vec::with_capacity(grid.size());
        for &x in &xs {
            for &v in &vs {
                data.push(f(x, v));
            }
        }
        Self {
            grid,
            data,
            repr: Representation::Physical,
            real_valued: false,
        }
    }

    pub fn from_real_samples(grid: PhaseGrid, samples: &[f64]) -> Result<Self> {
        if samples.len() != grid.size() {
            return Err(Error::GridMismatch(format!(
                "{} samples for a {}x{} grid",
                samples.len(),
                grid.nx(),
                grid.nv()
            )));
        }
        Ok(Self {
            grid,
            data: samples.iter().map(|&r| Complex64::new(r, 0.0)).collect(),
            repr: Representation::Physical,
            real_valued: true,
        })
    }

    pub fn from_parts(
        grid: PhaseGrid,
        data: Vec<Complex64>,
        repr: Representation,
        real_valued: bool,
    ) -> Result<Self> {
        if data.len() != grid.size() {
            return Err(Error::GridMismatch(format!(
                "{} samples for a {}x{} grid",
                data.len(),
                grid.nx(),
                grid.nv()
            )));
        }
        Ok(Self {
            grid,
            data,
            repr,
            real_valued,
        })
    }

    pub fn grid(&self) -> &PhaseGrid {
        &self.grid
    }

    pub fn data(&self) -> &[Complex64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [Complex64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<Complex64> {
        self.data
    }

    pub fn repr(&self) -> Representation {
        self.repr
    }

    /// Whether the physical samples are meant to be real.
    pub fn is_real_valued(&self) -> bool {
        self.real_valued
    }

    pub fn set_real_valued(&mut self, flag: bool) {
        self.real_valued = flag;
    }

    pub fn at(&self, i: usize, j: usize) -> Complex64 {
        self.data[self.grid.index(i, j)]
    }

    pub(crate) fn require_physical(&self) -> Result<()> {
        if self.repr != Representation::Physical {
            return Err(Error::Representation {
                found: self.repr,
                expected: "physical",
            });
        }
        Ok(())
    }

    pub(crate) fn require_same_grid(&self, other: &PhaseField) -> Result<()> {
        if !self.grid.same_as(&other.grid) {
            return Err(Error::GridMismatch("phase fields on different grids".into()));
        }
        Ok(())
    }

    /// Fourier transform along one or both axes with the continuous
    /// normalization `u_hat(xi) = int u e^{-i xi y} dy`.
    pub fn transform(&self, axis: Axis, direction: Direction) -> Result<PhaseField> {
        let forward = direction == Direction::Forward;
        let (dx, dv) = match axis {
            Axis::X => (true, false),
            Axis::V => (false, true),
            Axis::Both => (true, true),
        };
        let bad = (dx && self.repr.x_transformed() == forward)
            || (dv && self.repr.v_transformed() == forward);
        if bad {
            return Err(Error::Representation {
                found: self.repr,
                expected: match (axis, forward) {
                    (Axis::X, true) => "x in physical space",
                    (Axis::X, false) => "x in Fourier space",
                    (Axis::V, true) => "v in physical space",
                    (Axis::V, false) => "v in Fourier space",
                    (Axis::Both, true) => "both axes in physical space",
                    (Axis::Both, false) => "both axes in Fourier space",
                },
            });
        }
        let mut out = self.clone();
        let (nx, nv) = (self.grid.nx(), self.grid.nv());
        if dv {
            transform_v(&mut out.data, &self.grid, forward);
        }
        if dx {
            transform_x(&mut out.data, nx, nv, &self.grid.gx, forward);
        }
        let xt = if dx { forward } else { self.repr.x_transformed() };
        let vt = if dv { forward } else { self.repr.v_transformed() };
        out.repr = Representation::from_flags(xt, vt);
        if out.repr == Representation::Physical && out.real_valued {
            out.project_real();
        }
        Ok(out)
    }

    /// Convert to `target`, going through whatever transforms are needed.
    pub fn to_representation(&self, target: Representation) -> PhaseField {
        let mut out = self.clone();
        let (nx, nv) = (self.grid.nx(), self.grid.nv());
        if out.repr.v_transformed() != target.v_transformed() {
            transform_v(&mut out.data, &self.grid, target.v_transformed());
        }
        if out.repr.x_transformed() != target.x_transformed() {
            transform_x(&mut out.data, nx, nv, &self.grid.gx, target.x_transformed());
        }
        out.repr = target;
        if target == Representation::Physical && out.real_valued {
            out.project_real();
        }
        out
    }

    pub fn to_physical(&self) -> PhaseField {
        self.to_representation(Representation::Physical)
    }

    /// Drop imaginary parts (physical representation only).
    pub fn project_real(&mut self) {
        if self.repr == Representation::Physical {
            self.data.iter_mut().for_each(|c| c.im = 0.0);
        }
    }

    pub fn real_parts(&self) -> Vec<f64> {
        self.data.iter().map(|c| c.re).collect()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    /// `max |Im f| / max |f|` over the physical samples.
    pub fn imaginary_ratio(&self) -> f64 {
        let m = self.max_abs();
        if m == 0.0 {
            return 0.0;
        }
        self.data.iter().map(|c| c.im.abs()).fold(0.0, f64::max) / m
    }

    /// Discrete `L^2` norm, consistent with the representation's measure.
    pub fn l2_norm(&self) -> f64 {
        let sum: f64 = self.data.iter().map(|c| c.norm_sqr()).sum();
        let wx = if self.repr.x_transformed() {
            self.grid.gx.frequency_spacing() / (2.0 * std::f64::consts::PI)
        } else {
            self.grid.gx.spacing()
        };
        let wv = if self.repr.v_transformed() {
            self.grid.gv.frequency_spacing() / (2.0 * std::f64::consts::PI)
        } else {
            self.grid.gv.spacing()
        };
        (sum * wx * wv).sqrt()
    }

    /// `dx dv sum f` (real part), physical representation.
    pub fn mass(&self) -> f64 {
        let s: f64 = self.data.iter().map(|c| c.re).sum();
        s * self.grid.cell()
    }

    /// `<f, g> = dx dv sum f conj(g)`.
    pub fn inner(&self, other: &PhaseField) -> Result<Complex64> {
        self.require_same_grid(other)?;
        let s: Complex64 = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a * b.conj())
            .sum();
        Ok(s * self.grid.cell())
    }

    /// Largest `|f|` on the outermost two velocity columns relative to `max |f|`.
    pub fn tail_ratio(&self) -> f64 {
        let m = self.max_abs();
        if m == 0.0 {
            return 0.0;
        }
        let nv = self.grid.nv();
        let cols = [0, 1, nv - 2, nv - 1];
        let mut t: f64 = 0.0;
        for i in 0..self.grid.nx() {
            for &j in &cols {
                t = t.max(self.at(i, j).norm());
            }
        }
        t / m
    }

    /// Returns the measured ratio when the velocity tails exceed `tol`.
    pub fn check_tail(&self, tol: f64) -> Option<f64> {
        let r = self.tail_ratio();
        (r > tol).then_some(r)
    }

    pub fn linear_combination(&self, a: f64, other: &PhaseField, b: f64) -> Result<PhaseField> {
        self.require_same_grid(other)?;
        if self.repr != other.repr {
            return Err(Error::Representation {
                found: other.repr,
                expected: "matching representations",
            });
        }
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(x, y)| x * a + y * b)
            .collect();
        Ok(PhaseField {
            grid: self.grid,
            data,
            repr: self.repr,
            real_valued: self.real_valued && other.real_valued,
        })
    }

    pub fn difference(&self, other: &PhaseField) -> Result<PhaseField> {
        self.linear_combination(1.0, other, -1.0)
    }

    pub fn scaled(&self, a: f64) -> PhaseField {
        let mut out = self.clone();
        out.data.iter_mut().for_each(|c| *c *= a);
        out
    }

    pub fn max_abs_difference(&self, other: &PhaseField) -> Result<f64> {
        self.require_same_grid(other)?;
        Ok(self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max))
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|c| c.re.is_finite() && c.im.is_finite())
    }
}

pub(crate) fn transform_v(data: &mut [Complex64], grid: &PhaseGrid, forward: bool) {
    let nv = grid.nv();
    let scale = if forward {
        forward_line_scale(&grid.gv)
    } else {
        inverse_line_scale(&grid.gv)
    };
    if forward {
        fft::fft_rows(data, nv, false);
        for row in data.chunks_mut(nv) {
            for (c, s) in row.iter_mut().zip(&scale) {
                *c *= s;
            }
        }
    } else {
        for row in data.chunks_mut(nv) {
            for (c, s) in row.iter_mut().zip(&scale) {
                *c *= s;
            }
        }
        fft::fft_rows(data, nv, true);
    }
}

pub(crate) fn transform_x(data: &mut [Complex64], nx: usize, nv: usize, gx: &Grid1, forward: bool) {
    let scale = if forward {
        forward_line_scale(gx)
    } else {
        inverse_line_scale(gx)
    };
    if forward {
        fft::fft_cols(data, nx, nv, false);
        for (i, row) in data.chunks_mut(nv).enumerate() {
            row.iter_mut().for_each(|c| *c *= scale[i]);
        }
    } else {
        for (i, row) in data.chunks_mut(nv).enumerate() {
            row.iter_mut().for_each(|c| *c *= scale[i]);
        }
        fft::fft_cols(data, nx, nv, true);
    }
}

/// Samples of a spatial density `rho(x)`.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityField {
    grid: Grid1,
    data: Vec<f64>,
}

impl DensityField {
    pub fn new(grid: Grid1, data: Vec<f64>) -> Result<Self> {
        if data.len() != grid.len() {
            return Err(Error::GridMismatch(format!(
                "{} density samples for {} grid points",
                data.len(),
                grid.len()
            )));
        }
        Ok(Self { grid, data })
    }

    pub fn from_fn(grid: Grid1, f: impl Fn(f64) -> f64) -> Self {
        let data = grid.points().into_iter().map(f).collect();
        Self { grid, data }
    }

    pub fn constant(grid: Grid1, value: f64) -> Self {
        Self {
            grid,
            data: vec![value; grid.len()],
        }
    }

    pub fn grid(&self) -> &Grid1 {
        &self.grid
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    /// `dx sum rho`.
    pub fn mass(&self) -> f64 {
        self.data.iter().sum::<f64>() * self.grid.spacing()
    }

    pub fn l2_norm(&self) -> f64 {
        (self.data.iter().map(|r| r * r).sum::<f64>() * self.grid.spacing()).sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|r| r.abs()).fold(0.0, f64::max)
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|r| r.is_finite())
    }

    pub fn difference(&self, other: &DensityField) -> Result<DensityField> {
        if !self.grid.same_as(&other.grid) {
            return Err(Error::GridMismatch("densities on different grids".into()));
        }
        Ok(DensityField {
            grid: self.grid,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect(),
        })
    }

    pub fn max_abs_difference(&self, other: &DensityField) -> f64 {
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

/// `rho(x_i) = dv sum_j f(x_i, v_j)`.
pub fn density(f: &PhaseField) -> Result<DensityField> {
    f.require_physical()?;
    let dv = f.grid().gv.spacing();
    let nv = f.grid().nv();
    let data = f
        .data()
        .chunks(nv)
        .map(|row| row.iter().map(|c| c.re).sum::<f64>() * dv)
        .collect();
    Ok(DensityField {
        grid: f.grid().gx,
        data,
    })
}

/// Density read off the `xi_v = 0` slice of the velocity transform.
pub fn density_from_fourier_slice(f: &PhaseField) -> Result<DensityField> {
    let fv = if f.repr().v_transformed() {
        f.clone()
    } else {
        f.transform(Axis::V, Direction::Forward)?
    };
    let fv = if fv.repr().x_transformed() {
        fv.transform(Axis::X, Direction::Inverse)?
    } else {
        fv
    };
    let nv = f.grid().nv();
    let data = fv.data().chunks(nv).map(|row| row[0].re).collect();
    Ok(DensityField {
        grid: f.grid().gx,
        data,
    })
}
