//! Semiclassical Wigner transform of pure and finite-rank mixed states.
//!
//! `W(x, v) = (2 pi)^{-1} int e^{-i v y} u(x + eps y/2) conj(u(x - eps y/2)) dy`.
//!
//! The `y` grid is the DFT dual of the velocity grid (`dy = 2 pi / L_v`,
//! `y_j = (j - Nv/2) dy`), so the `y` integral becomes one FFT per `x` row.
//! The endpoint `y = -Y` has no mirror partner on the grid; it is replaced by
//! the average of the two endpoint values, which keeps `W` exactly real for
//! self-adjoint kernels.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{param_err, Error, Result};
use crate::potential::Epsilon;
use crate::spectral::{self, fft, Grid1, PhaseField, PhaseGrid, Representation};

/// One rank-one term `weight * |u><u|`.
#[derive(Debug, Clone, PartialEq)]
pub struct PureState {
    grid: Grid1,
    psi: Vec<Complex64>,
    weight: f64,
}

impl PureState {
    pub fn new(grid: Grid1, psi: Vec<Complex64>, weight: f64) -> Result<Self> {
        if psi.len() != grid.len() {
            return Err(Error::GridMismatch(format!(
                "{} wavefunction samples for {} grid points",
                psi.len(),
                grid.len()
            )));
        }
        if !(weight.is_finite() && weight >= 0.0) {
            return Err(param_err("weight", format!("{weight} must be finite and nonnegative")));
        }
        if psi.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(param_err("psi", "non-finite sample"));
        }
        Ok(Self { grid, psi, weight })
    }

    pub fn from_fn(grid: Grid1, weight: f64, u: impl Fn(f64) -> Complex64) -> Result<Self> {
        let psi = grid.points().into_iter().map(u).collect();
        Self::new(grid, psi, weight)
    }

    pub fn grid(&self) -> &Grid1 {
        &self.grid
    }

    pub fn psi(&self) -> &[Complex64] {
        &self.psi
    }

    pub fn weight(&self) -> f64 {
        self.weight
    }

    /// `||u||_{L^2}^2`.
    pub fn norm_sqr(&self) -> f64 {
        self.psi.iter().map(|z| z.norm_sqr()).sum::<f64>() * self.grid.spacing()
    }
}

/// Finite-rank density operator `sum_j lambda_j |u_j><u_j|`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct MixedState {
    pub components: Vec<PureState>,
}

impl MixedState {
    pub fn new(components: Vec<PureState>) -> Self {
        Self { components }
    }

    /// `sum_j lambda_j ||u_j||^2`, the mass of the Wigner transform.
    pub fn trace(&self) -> f64 {
        self.components.iter().map(|c| c.weight * c.norm_sqr()).sum()
    }
}

/// Complex samples of `W` before projection, row-major `[i * nv + k]`.
pub(crate) fn wigner_samples(u: &PureState, eps: f64, target: &PhaseGrid) -> Result<Vec<Complex64>> {
    if !u.grid.same_as(&target.gx) {
        return Err(Error::GridMismatch(
            "wavefunction grid differs from the target x grid".into(),
        ));
    }
    let (nx, nv) = (target.nx(), target.nv());
    let dy = 2.0 * PI / target.gv.length();
    let y0 = -(nv as f64 / 2.0) * dy;
    let v0 = target.gv.origin();
    let coeffs = spectral::complex_spectrum(&u.psi);

    // Shifted copies u(x +- eps y_j / 2), one column per y_j.
    let shifted = |y: f64, sign: f64| {
        spectral::shifted_from_spectrum(&coeffs, &u.grid, sign * 0.5 * eps * y, |_| {
            Complex64::new(1.0, 0.0)
        })
    };
    let cols: Vec<Vec<Complex64>> = (0..nv)
        .into_par_iter()
        .map(|j| {
            let y = y0 + j as f64 * dy;
            let plus = shifted(y, 1.0);
            let minus = shifted(y, -1.0);
            let pre = Complex64::from_polar(1.0, -v0 * j as f64 * dy);
            plus.iter()
                .zip(&minus)
                .map(|(p, m)| {
                    let g = p * m.conj();
                    if j == 0 {
                        // average of y = -Y and its conjugate partner y = +Y
                        Complex64::new(g.re, 0.0) * pre
                    } else {
                        g * pre
                    }
                })
                .collect()
        })
        .collect();

    let mut data = vec![Complex64::new(0.0, 0.0); nx * nv];
    for (j, col) in cols.iter().enumerate() {
        for (i, g) in col.iter().enumerate() {
            data[i * nv + j] = *g;
        }
    }
    fft::fft_rows(&mut data, nv, false);
    let post: Vec<Complex64> = (0..nv)
        .map(|k| {
            let v = target.gv.point(k);
            Complex64::from_polar(u.weight * dy / (2.0 * PI), -v * y0)
        })
        .collect();
    for row in data.chunks_mut(nv) {
        for (c, p) in row.iter_mut().zip(&post) {
            *c *= p;
        }
    }
    Ok(data)
}

/// Wigner transform of `weight * |u><u|` on `target`, flagged real-valued.
pub fn wigner_of_pure(u: &PureState, eps: Epsilon, target: &PhaseGrid) -> Result<PhaseField> {
    let data = wigner_samples(u, eps.value(), target)?;
    let mut w = PhaseField::from_parts(*target, data, Representation::Physical, true)?;
    w.project_real();
    Ok(w)
}

/// Weighted sum of the component transforms; components are transformed in
/// parallel and summed in order.
pub fn wigner_of_mixed(state: &MixedState, eps: Epsilon, target: &PhaseGrid) -> Result<PhaseField> {
    let parts: Vec<Vec<Complex64>> = state
        .components
        .par_iter()
        .map(|c| wigner_samples(c, eps.value(), target))
        .collect::<Result<_>>()?;
    let mut acc = vec![Complex64::new(0.0, 0.0); target.size()];
    for p in parts {
        for (a, b) in acc.iter_mut().zip(p) {
            *a += b;
        }
    }
    let mut w = PhaseField::from_parts(*target, acc, Representation::Physical, true)?;
    w.project_real();
    Ok(w)
}
