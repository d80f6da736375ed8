//! The semiclassical interaction operator `B_eps[rho, f]` and its classical
//! limit `-c_V d_x rho d_v f`.
//!
//! In the mixed `(x, xi_v)` representation `B` is a pointwise multiplier:
//!
//! ```text
//! F_v B(x, xi_v) = (i/eps) [V_rho(x - eps xi_v/2) - V_rho(x + eps xi_v/2)] F_v f(x, xi_v)
//! ```
//!
//! with `F_x V_rho(k) = V_hat(eps k) rho_hat(k)`. The shifted evaluations
//! are done by one Fourier-shift pass per `xi_v` column, so one application
//! costs `O(Nx Nv log Nx)`.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::potential::{Epsilon, PairPotential};
use crate::spectral::{
    self, transform_v, DensityField, Grid1, PhaseField, Representation,
};

/// Which exponential branch of `B = B_+ - B_-`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Branch {
    Plus,
    Minus,
}

/// Raw DFT coefficients of `V_eps * rho`.
pub(crate) fn interaction_spectrum(rho: &DensityField, eps: f64, pot: &PairPotential) -> Vec<Complex64> {
    let ks = rho.grid().symbol_frequencies();
    let mut c = spectral::real_spectrum(rho.data());
    for (ci, k) in c.iter_mut().zip(ks) {
        *ci *= pot.vhat(eps * k);
    }
    c
}

/// `a(x_i, xi_j) = V_rho(x_i - eps xi_j/2) - V_rho(x_i + eps xi_j/2)`, row-major `[i * nv + j]`.
///
/// Odd in `xi_v`; zero on the `xi_v = 0` and Nyquist columns.
pub(crate) fn shift_difference_symbol(
    vrho_hat: &[Complex64],
    gx: &Grid1,
    gv: &Grid1,
    eps: f64,
) -> Vec<f64> {
    let (nx, nv) = (gx.len(), gv.len());
    let xis = gv.symbol_frequencies();
    let cols: Vec<(usize, Vec<f64>)> = (1..nv / 2)
        .into_par_iter()
        .map(|j| {
            let s = 0.5 * eps * xis[j];
            let col = spectral::shifted_from_spectrum(vrho_hat, gx, 0.0, |k| {
                Complex64::new(0.0, -2.0 * (k * s).sin())
            });
            (j, col.into_iter().map(|z| z.re).collect())
        })
        .collect();
    let mut a = vec![0.0; nx * nv];
    for (j, col) in cols {
        for (i, val) in col.into_iter().enumerate() {
            a[i * nv + j] = val;
            a[i * nv + (nv - j)] = -val;
        }
    }
    a
}

/// `V_rho(x_i + sign * eps xi_j / 2)` for every column `j`.
fn shifted_potential(vrho_hat: &[Complex64], gx: &Grid1, gv: &Grid1, eps: f64, sign: f64) -> Vec<f64> {
    let (nx, nv) = (gx.len(), gv.len());
    let xis = gv.symbol_frequencies();
    let cols: Vec<Vec<f64>> = (0..nv)
        .into_par_iter()
        .map(|j| {
            let shift = sign * 0.5 * eps * xis[j];
            spectral::shifted_from_spectrum(vrho_hat, gx, shift, |_| Complex64::new(1.0, 0.0))
                .into_iter()
                .map(|z| z.re)
                .collect()
        })
        .collect();
    let mut out = vec![0.0; nx * nv];
    for (j, col) in cols.into_iter().enumerate() {
        for (i, val) in col.into_iter().enumerate() {
            out[i * nv + j] = val;
        }
    }
    out
}

fn check_grids(rho: &DensityField, f: &PhaseField) -> Result<()> {
    if !rho.grid().same_as(&f.grid().gx) {
        return Err(Error::GridMismatch(
            "density grid differs from the phase-space x grid".into(),
        ));
    }
    Ok(())
}

/// `F_v f` as a mutable buffer; accepts physical or velocity-Fourier input.
fn velocity_spectrum(f: &PhaseField) -> Result<Vec<Complex64>> {
    match f.repr() {
        Representation::Physical => {
            let mut d = f.data().to_vec();
            transform_v(&mut d, f.grid(), true);
            Ok(d)
        }
        Representation::FourierV => Ok(f.data().to_vec()),
        other => Err(Error::Representation {
            found: other,
            expected: "physical or fourier-v",
        }),
    }
}

fn back_to_physical(f: &PhaseField, mut spec: Vec<Complex64>, real: bool) -> PhaseField {
    transform_v(&mut spec, f.grid(), false);
    let mut out = PhaseField::from_parts(*f.grid(), spec, Representation::Physical, real)
        .expect("buffer sized from the input grid");
    if real {
        out.project_real();
    }
    out
}

/// `B_eps[rho, f]`, returned in the physical representation.
pub fn apply_b(
    rho: &DensityField,
    f: &PhaseField,
    eps: Epsilon,
    pot: &PairPotential,
) -> Result<PhaseField> {
    check_grids(rho, f)?;
    let eps = eps.value();
    let mut spec = velocity_spectrum(f)?;
    let g = f.grid();
    let a = shift_difference_symbol(&interaction_spectrum(rho, eps, pot), &g.gx, &g.gv, eps);
    let scale = Complex64::new(0.0, 1.0 / eps);
    spec.par_iter_mut()
        .zip(a.par_iter())
        .for_each(|(c, &ai)| *c *= scale * ai);
    Ok(back_to_physical(f, spec, f.is_real_valued()))
}

/// One branch of the decomposition `B = B_+ - B_-`:
/// `F_v B_pm = (1/(i eps)) V_rho(x pm eps xi_v/2) F_v f`.
pub fn apply_b_split(
    rho: &DensityField,
    f: &PhaseField,
    eps: Epsilon,
    pot: &PairPotential,
    branch: Branch,
) -> Result<PhaseField> {
    check_grids(rho, f)?;
    let eps = eps.value();
    let mut spec = velocity_spectrum(f)?;
    let g = f.grid();
    let sign = match branch {
        Branch::Plus => 1.0,
        Branch::Minus => -1.0,
    };
    let vs = shifted_potential(&interaction_spectrum(rho, eps, pot), &g.gx, &g.gv, eps, sign);
    let scale = Complex64::new(0.0, -1.0 / eps);
    spec.par_iter_mut()
        .zip(vs.par_iter())
        .for_each(|(c, &vi)| *c *= scale * vi);
    Ok(back_to_physical(f, spec, false))
}

/// `-c_V d_x rho d_v f`, the formal `eps -> 0` limit of `B_eps[rho, f]`.
pub fn classical_force(rho: &DensityField, f: &PhaseField, pot: &PairPotential) -> Result<PhaseField> {
    check_grids(rho, f)?;
    let mut spec = velocity_spectrum(f)?;
    let g = f.grid();
    let (nx, nv) = (g.nx(), g.nv());
    let xis = g.gv.symbol_frequencies();
    for row in spec.chunks_mut(nv) {
        for (c, &xi) in row.iter_mut().zip(&xis) {
            *c *= Complex64::new(0.0, xi);
        }
    }
    let mut dvf = spec;
    transform_v(&mut dvf, g, false);
    let drho = spectral::spectral_derivative(rho.data(), rho.grid());
    let cv = pot.c_v();
    for i in 0..nx {
        let w = -cv * drho[i];
        dvf[i * nv..(i + 1) * nv].iter_mut().for_each(|c| *c *= w);
    }
    let mut out = PhaseField::from_parts(*g, dvf, Representation::Physical, f.is_real_valued())?;
    if f.is_real_valued() {
        out.project_real();
    }
    Ok(out)
}

/// The symbol `b_f(x, v, xi_x) = int_{-1/2}^{1/2} xi_x d_v f(x, v + lambda xi_x) d lambda`.
///
/// The `lambda` integral is done exactly in the velocity Fourier variable,
/// where it becomes the multiplier `2 i sin(xi_x xi_v / 2)`.
pub fn symbol_b_f(f: &PhaseField, xi_x: f64) -> Result<PhaseField> {
    let mut spec = velocity_spectrum(f)?;
    let g = f.grid();
    let nv = g.nv();
    let mult: Vec<Complex64> = g
        .gv
        .symbol_frequencies()
        .iter()
        .map(|&xi| Complex64::new(0.0, 2.0 * (0.5 * xi_x * xi).sin()))
        .collect();
    for row in spec.chunks_mut(nv) {
        for (c, m) in row.iter_mut().zip(&mult) {
            *c *= m;
        }
    }
    Ok(back_to_physical(f, spec, f.is_real_valued()))
}

/// `(1/(i eps)) b_f^eps(x, v, D_x) V_rho`: the operator `B` rebuilt from the
/// symbol `b_f`, one symbol evaluation per spatial frequency.
pub fn quantize_symbol_b_f(
    rho: &DensityField,
    f: &PhaseField,
    eps: Epsilon,
    pot: &PairPotential,
) -> Result<PhaseField> {
    check_grids(rho, f)?;
    let e = eps.value();
    let g = f.grid();
    let (nx, nv) = (g.nx(), g.nv());
    let c = interaction_spectrum(rho, e, pot);
    let ks = g.gx.symbol_frequencies();
    let xs = g.gx.points();
    let x0 = g.gx.origin();
    let mut acc = vec![Complex64::new(0.0, 0.0); nx * nv];
    for (m, &k) in ks.iter().enumerate() {
        if c[m].norm() == 0.0 || k == 0.0 {
            continue;
        }
        let b = symbol_b_f(f, e * k)?;
        for i in 0..nx {
            let wave = c[m] * Complex64::from_polar(1.0, k * (xs[i] - x0)) / nx as f64;
            for j in 0..nv {
                acc[i * nv + j] += wave * b.at(i, j);
            }
        }
    }
    let scale = Complex64::new(0.0, -1.0 / e);
    acc.iter_mut().for_each(|z| *z *= scale);
    let mut out = PhaseField::from_parts(*g, acc, Representation::Physical, f.is_real_valued())?;
    if f.is_real_valued() {
        out.project_real();
    }
    Ok(out)
}
