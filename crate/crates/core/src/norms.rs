//! Standard and `eps`-weighted Sobolev norms used as uniform-bound diagnostics.
//!
//! The weighted norms are built from the vector fields
//! `V_pm = eps d_x pm 2 i v` and `X_pm = eps d_v pm 2 i x`:
//!
//! ```text
//! |f|_{H^0_r}   = sum_{a+b<=r, c+d<=r} || X_-^a V_+^b X_+^c V_-^d f ||
//! |f|_{H^m_r}   = sum_{|alpha|<=m} || d^alpha f ||_{H^0_r}
//! |f|_{H^0_r,0} = sum_{b<=r, d<=r} || V_+^b V_-^d f ||
//! |rho|_{H^m_r} = sum_{|alpha|<=m, beta<=r} || (eps d_x)^beta d^alpha rho ||
//! ```
//!
//! Compositions are applied exactly in the written order. On the periodic
//! box the weights `x` and `v` are the grid coordinates, so the weighted
//! norms are only meaningful for fields that decay inside the box.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::potential::Epsilon;
use crate::spectral::{density, fft, DensityField, Grid1, PhaseField, PhaseGrid, Representation};

/// Spectral energy fraction above half the largest resolved frequency that
/// is still accepted as resolved.
pub const RESOLUTION_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum VectorField {
    VPlus,
    VMinus,
    XPlus,
    XMinus,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NormFamily {
    /// `|| <v>^r (I - Delta)^{m/2} f ||`, independent of `eps`.
    HmrStandard,
    /// The `eps`-weighted `H^m_r` norm built from `X_pm`, `V_pm`.
    HmrEps,
    /// `H^0_{r,0}`: only the `V_pm` fields (`m` is ignored).
    H0r0Eps,
    /// The density norm `H^m_r` of `rho = int f dv`.
    DensityHmrEps,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct NormSpec {
    pub m: u32,
    pub r: u32,
    pub family: NormFamily,
}

impl NormSpec {
    pub fn new(family: NormFamily, m: u32, r: u32) -> Self {
        Self { m, r, family }
    }

    pub fn label(&self) -> String {
        let fam = match self.family {
            NormFamily::HmrStandard => "Hmr_standard",
            NormFamily::HmrEps => "Hmr_eps",
            NormFamily::H0r0Eps => "H0r0_eps",
            NormFamily::DensityHmrEps => "density_Hmr_eps",
        };
        format!("{fam}(m={},r={})", self.m, self.r)
    }
}

/// Physical samples plus the grid; all operators below act on this.
#[derive(Clone)]
struct Work<'a> {
    grid: &'a PhaseGrid,
    data: Vec<Complex64>,
}

impl<'a> Work<'a> {
    fn dx(&self, order: u32) -> Vec<Complex64> {
        let (nx, nv) = (self.grid.nx(), self.grid.nv());
        let mut d = self.data.clone();
        if order == 0 {
            return d;
        }
        fft::fft_cols(&mut d, nx, nv, false);
        let ks = self.grid.gx.symbol_frequencies();
        for (i, row) in d.chunks_mut(nv).enumerate() {
            let m = Complex64::new(0.0, ks[i]).powu(order) / nx as f64;
            row.iter_mut().for_each(|c| *c *= m);
        }
        fft::fft_cols(&mut d, nx, nv, true);
        d
    }

    fn dv(&self, order: u32) -> Vec<Complex64> {
        let nv = self.grid.nv();
        let mut d = self.data.clone();
        if order == 0 {
            return d;
        }
        fft::fft_rows(&mut d, nv, false);
        let ms: Vec<Complex64> = self
            .grid
            .gv
            .symbol_frequencies()
            .iter()
            .map(|&k| Complex64::new(0.0, k).powu(order) / nv as f64)
            .collect();
        for row in d.chunks_mut(nv) {
            row.iter_mut().zip(&ms).for_each(|(c, m)| *c *= m);
        }
        fft::fft_rows(&mut d, nv, true);
        d
    }

    fn apply(&self, which: VectorField, eps: f64) -> Work<'a> {
        let nv = self.grid.nv();
        let (mut d, sign, weight): (Vec<Complex64>, f64, Vec<f64>) = match which {
            VectorField::VPlus => (self.dx(1), 1.0, self.grid.gv.points()),
            VectorField::VMinus => (self.dx(1), -1.0, self.grid.gv.points()),
            VectorField::XPlus => (self.dv(1), 1.0, self.grid.gx.points()),
            VectorField::XMinus => (self.dv(1), -1.0, self.grid.gx.points()),
        };
        let on_v = matches!(which, VectorField::VPlus | VectorField::VMinus);
        for (k, (out, inp)) in d.iter_mut().zip(&self.data).enumerate() {
            let w = if on_v { weight[k % nv] } else { weight[k / nv] };
            *out = *out * eps + Complex64::new(0.0, 2.0 * sign * w) * inp;
        }
        Work { grid: self.grid, data: d }
    }

    fn l2(&self) -> f64 {
        (self.data.iter().map(|c| c.norm_sqr()).sum::<f64>() * self.grid.cell()).sqrt()
    }
}

fn physical_work(f: &PhaseField) -> Work<'_> {
    let data = if f.repr() == Representation::Physical {
        f.data().to_vec()
    } else {
        f.to_physical().into_data()
    };
    Work { grid: f.grid(), data }
}

/// `V_pm f` or `X_pm f` in the physical representation.
pub fn vector_field_apply(f: &PhaseField, which: VectorField, eps: Epsilon) -> PhaseField {
    let w = physical_work(f).apply(which, eps.value());
    PhaseField::from_parts(*f.grid(), w.data, Representation::Physical, false)
        .expect("same grid as the input")
}

/// Apply `fields` right to left, i.e. the last entry acts first.
fn compose<'a>(w: &Work<'a>, fields: &[VectorField], eps: f64) -> Work<'a> {
    let mut cur = w.clone();
    for &vf in fields.iter().rev() {
        cur = cur.apply(vf, eps);
    }
    cur
}

fn repeated(vf: VectorField, n: u32) -> impl Iterator<Item = VectorField> {
    std::iter::repeat_n(vf, n as usize)
}

fn h0r_terms(r: u32) -> Vec<Vec<VectorField>> {
    use VectorField::*;
    let mut terms = Vec::new();
    for a in 0..=r {
        for b in 0..=(r - a) {
            for c in 0..=r {
                for d in 0..=(r - c) {
                    terms.push(
                        repeated(XMinus, a)
                            .chain(repeated(VPlus, b))
                            .chain(repeated(XPlus, c))
                            .chain(repeated(VMinus, d))
                            .collect(),
                    );
                }
            }
        }
    }
    terms
}

fn h0r0_terms(r: u32) -> Vec<Vec<VectorField>> {
    use VectorField::*;
    let mut terms = Vec::new();
    for b in 0..=r {
        for d in 0..=r {
            terms.push(repeated(VPlus, b).chain(repeated(VMinus, d)).collect());
        }
    }
    terms
}

/// Sum of `||T f||` over the compositions `T`, evaluated in parallel and
/// summed in a fixed order.
fn sum_terms(w: &Work<'_>, terms: &[Vec<VectorField>], eps: f64) -> f64 {
    let parts: Vec<f64> = terms.par_iter().map(|t| compose(w, t, eps).l2()).collect();
    parts.iter().sum()
}

fn derivative(w: &Work<'_>, ax: u32, av: u32) -> Vec<Complex64> {
    let tmp = Work { grid: w.grid, data: w.dx(ax) };
    tmp.dv(av)
}

/// Fraction of spectral energy above half the largest resolved frequency,
/// the larger of the two axes.
pub fn highest_mode_fraction(f: &PhaseField) -> f64 {
    let g = f.grid();
    let (nx, nv) = (g.nx(), g.nv());
    let mut d = f.to_physical().into_data();
    fft::fft_rows(&mut d, nv, false);
    fft::fft_cols(&mut d, nx, nv, false);
    let total: f64 = d.iter().map(|c| c.norm_sqr()).sum();
    if total == 0.0 {
        return 0.0;
    }
    let high = |m: usize, n: usize| {
        let k = if m < n / 2 { m } else { n - m };
        k > n / 4
    };
    let (mut hx, mut hv) = (0.0, 0.0);
    for i in 0..nx {
        for j in 0..nv {
            let e = d[i * nv + j].norm_sqr();
            if high(i, nx) {
                hx += e;
            }
            if high(j, nv) {
                hv += e;
            }
        }
    }
    f64::max(hx, hv) / total
}

fn density_highest_mode_fraction(rho: &DensityField) -> f64 {
    let n = rho.grid().len();
    let mut c: Vec<Complex64> = rho.data().iter().map(|&r| Complex64::new(r, 0.0)).collect();
    fft::fft(&mut c, false);
    let total: f64 = c.iter().map(|z| z.norm_sqr()).sum();
    if total == 0.0 {
        return 0.0;
    }
    let high: f64 = c
        .iter()
        .enumerate()
        .filter(|(m, _)| (*m).min(n - m) > n / 4)
        .map(|(_, z)| z.norm_sqr())
        .sum();
    high / total
}

fn require_resolved(fraction: f64) -> Result<()> {
    if fraction > RESOLUTION_TOL {
        return Err(Error::Underresolved { fraction });
    }
    Ok(())
}

/// `|| <v>^r (I - Delta_{x,v})^{m/2} f ||`.
fn standard_norm(f: &PhaseField, m: u32, r: u32) -> f64 {
    let g = f.grid();
    let (nx, nv) = (g.nx(), g.nv());
    let mut d = f.to_physical().into_data();
    if m > 0 {
        fft::fft_rows(&mut d, nv, false);
        fft::fft_cols(&mut d, nx, nv, false);
        let kx = g.gx.frequencies();
        let kv = g.gv.frequencies();
        let scale = 1.0 / (nx * nv) as f64;
        for i in 0..nx {
            for j in 0..nv {
                let s = (1.0 + kx[i] * kx[i] + kv[j] * kv[j]).powf(0.5 * m as f64);
                d[i * nv + j] *= s * scale;
            }
        }
        fft::fft_cols(&mut d, nx, nv, true);
        fft::fft_rows(&mut d, nv, true);
    }
    let vs = g.gv.points();
    let s: f64 = d
        .iter()
        .enumerate()
        .map(|(k, c)| {
            let v = vs[k % nv];
            (1.0 + v * v).powi(r as i32) * c.norm_sqr()
        })
        .sum();
    (s * g.cell()).sqrt()
}

/// `sum_{alpha<=m, beta<=r} || (eps d_x)^beta d_x^alpha rho ||`.
pub fn density_norm(rho: &DensityField, m: u32, r: u32, eps: Epsilon) -> Result<f64> {
    require_resolved(density_highest_mode_fraction(rho))?;
    let e = eps.value();
    let g: &Grid1 = rho.grid();
    let n = g.len();
    let mut c: Vec<Complex64> = rho.data().iter().map(|&x| Complex64::new(x, 0.0)).collect();
    fft::fft(&mut c, false);
    let ks = g.symbol_frequencies();
    let mut total = 0.0;
    for alpha in 0..=m {
        for beta in 0..=r {
            let mut d: Vec<Complex64> = c
                .iter()
                .zip(&ks)
                .map(|(z, &k)| {
                    z * Complex64::new(0.0, k).powu(alpha)
                        * Complex64::new(0.0, e * k).powu(beta)
                        / n as f64
                })
                .collect();
            fft::fft(&mut d, true);
            total += (d.iter().map(|z| z.norm_sqr()).sum::<f64>() * g.spacing()).sqrt();
        }
    }
    Ok(total)
}

/// Evaluate the norm selected by `spec`. Fails with
/// [`Error::Underresolved`] when the field carries too much energy in the
/// upper half of the spectrum for spectral differentiation to be trusted.
pub fn norm(f: &PhaseField, spec: NormSpec, eps: Epsilon) -> Result<f64> {
    if spec.family == NormFamily::DensityHmrEps {
        let rho = density(&f.to_physical())?;
        return density_norm(&rho, spec.m, spec.r, eps);
    }
    require_resolved(highest_mode_fraction(f))?;
    let e = eps.value();
    let w = physical_work(f);
    Ok(match spec.family {
        NormFamily::HmrStandard => standard_norm(f, spec.m, spec.r),
        NormFamily::H0r0Eps => sum_terms(&w, &h0r0_terms(spec.r), e),
        NormFamily::HmrEps => {
            let terms = h0r_terms(spec.r);
            let mut total = 0.0;
            for ax in 0..=spec.m {
                for av in 0..=(spec.m - ax) {
                    let dw = Work { grid: w.grid, data: derivative(&w, ax, av) };
                    total += sum_terms(&dw, &terms, e);
                }
            }
            total
        }
        NormFamily::DensityHmrEps => unreachable!(),
    })
}
