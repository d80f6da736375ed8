//! Bicharacteristics of the eikonal equation
//!
//! ```text
//! d_t phi + v d_x phi + a_rho(t, x, d_v phi) = 0,   phi_{s,s}(z, xi) = z . xi
//! a_rho(t, x, xi_v) = V_rho(t, x - xi_v/2) - V_rho(t, x + xi_v/2)
//! ```
//!
//! solved through the Hamiltonian flow of `a(t, z, xi) = v xi_x + a_rho`,
//! the action `psi` along rays, and Newton inversion of `z -> Z_{t,s}(z, xi)`.
//! Frequencies are unscaled.

use std::io::Write;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{param_err, Error, Result};
use crate::norms::RESOLUTION_TOL;
use crate::potential::PairPotential;
use crate::spectral::{real_spectrum, DensityField, Grid1};

type TimeSpaceFn = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;

/// `V_rho` sampled in time, stored as real Fourier coefficients in `x`.
#[derive(Debug, Clone)]
pub struct VrhoHistory {
    grid: Grid1,
    times: Vec<f64>,
    /// per time: `(a_m, b_m)` with `V = sum a_m cos(k_m y) + b_m sin(k_m y)`
    coeffs: Vec<Vec<(f64, f64)>>,
}

impl VrhoHistory {
    /// `V_rho = V_eps * rho` with `V_eps_hat(k) = V_hat(eps k)`, or
    /// `V_hat(0) rho` when `eps` is `None`. Times must increase strictly.
    pub fn from_densities(
        history: &[(f64, DensityField)],
        pot: &PairPotential,
        eps: Option<f64>,
    ) -> Result<Self> {
        if history.len() < 2 {
            return Err(param_err("history", "need at least two time samples"));
        }
        if history.windows(2).any(|w| !(w[1].0 > w[0].0)) {
            return Err(param_err("history", "times must increase strictly"));
        }
        let grid = *history[0].1.grid();
        if history.iter().any(|(_, d)| !d.grid().same_as(&grid)) {
            return Err(Error::GridMismatch("density history on different grids".into()));
        }
        let n = grid.len();
        let nyq = grid.nyquist_index();
        let mut coeffs = Vec::with_capacity(history.len());
        for (_, rho) in history {
            let spec = real_spectrum(rho.data());
            let mut cs = Vec::with_capacity(nyq + 1);
            let mut total = 0.0;
            let mut high = 0.0;
            for (m, c) in spec.iter().enumerate().take(nyq + 1) {
                let k = grid.frequency(m);
                let w = pot.vhat(eps.map_or(0.0, |e| e * k)) / n as f64;
                let c = c * w;
                let e2 = c.norm_sqr();
                total += e2;
                if m > n / 4 {
                    high += e2;
                }
                // c_m e^{iky} + conj(c_m) e^{-iky} = 2 Re c cos - 2 Im c sin
                let (a, b) = if m == 0 || m == nyq {
                    (c.re, 0.0)
                } else {
                    (2.0 * c.re, -2.0 * c.im)
                };
                cs.push((a, b));
            }
            if total > 0.0 && high / total > RESOLUTION_TOL {
                return Err(Error::Underresolved { fraction: high / total });
            }
            coeffs.push(cs);
        }
        Ok(Self {
            grid,
            times: history.iter().map(|(t, _)| *t).collect(),
            coeffs,
        })
    }

    pub fn start(&self) -> f64 {
        self.times[0]
    }

    pub fn end(&self) -> f64 {
        *self.times.last().expect("nonempty")
    }

    /// `(V, d_x V)` at one time sample.
    fn eval_sample(&self, k: usize, x: f64) -> (f64, f64) {
        let y = x - self.grid.origin();
        let dk = self.grid.frequency_spacing();
        let (s1, c1) = (dk * y).sin_cos();
        let (mut s, mut c) = (0.0, 1.0);
        let (mut v, mut dv) = (0.0, 0.0);
        for (m, &(a, b)) in self.coeffs[k].iter().enumerate() {
            let km = dk * m as f64;
            v += a * c + b * s;
            dv += km * (b * c - a * s);
            let (sn, cn) = (s * c1 + c * s1, c * c1 - s * s1);
            s = sn;
            c = cn;
        }
        (v, dv)
    }

    /// Cubic Lagrange interpolation in time through the four nearest samples.
    fn eval(&self, t: f64, x: f64) -> Result<(f64, f64)> {
        let (t0, t1) = (self.start(), self.end());
        let slack = 1e-12 * (t1 - t0);
        if !(t >= t0 - slack && t <= t1 + slack) {
            return Err(Error::HistoryRange { t, start: t0, end: t1 });
        }
        let n = self.times.len();
        let j = self.times.partition_point(|&ti| ti <= t).clamp(1, n - 1);
        let lo = j.saturating_sub(2).min(n.saturating_sub(4));
        let hi = (lo + 4).min(n);
        let (mut v, mut dv) = (0.0, 0.0);
        for i in lo..hi {
            let mut w = 1.0;
            for l in lo..hi {
                if l != i {
                    w *= (t - self.times[l]) / (self.times[i] - self.times[l]);
                }
            }
            let (a, b) = self.eval_sample(i, x);
            v += w * a;
            dv += w * b;
        }
        Ok((v, dv))
    }
}

#[derive(Clone)]
enum Source {
    Zero,
    Analytic { value: TimeSpaceFn, gradient: TimeSpaceFn },
    History(Arc<VrhoHistory>),
    Frozen(Box<Source>, f64),
}

impl Source {
    fn eval(&self, t: f64, x: f64) -> Result<(f64, f64)> {
        match self {
            Self::Zero => Ok((0.0, 0.0)),
            Self::Analytic { value, gradient } => Ok((value(t, x), gradient(t, x))),
            Self::History(h) => h.eval(t, x),
            Self::Frozen(inner, t0) => inner.eval(*t0, x),
        }
    }
}

/// `a(t, z, xi) = v xi_x + V_rho(t, x - xi_v/2) - V_rho(t, x + xi_v/2)`.
#[derive(Clone)]
pub struct Hamiltonian {
    source: Source,
}

impl std::fmt::Debug for Hamiltonian {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let kind = match &self.source {
            Source::Zero => "free",
            Source::Analytic { .. } => "analytic",
            Source::History(_) => "history",
            Source::Frozen(..) => "frozen",
        };
        write!(f, "Hamiltonian({kind})")
    }
}

impl Hamiltonian {
    pub fn free() -> Self {
        Self { source: Source::Zero }
    }

    /// `V_rho(t, x)` and its `x` derivative as closures.
    pub fn analytic(
        value: impl Fn(f64, f64) -> f64 + Send + Sync + 'static,
        gradient: impl Fn(f64, f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Self {
            source: Source::Analytic {
                value: Arc::new(value),
                gradient: Arc::new(gradient),
            },
        }
    }

    pub fn from_history(history: VrhoHistory) -> Self {
        Self {
            source: Source::History(Arc::new(history)),
        }
    }

    /// The same Hamiltonian with time frozen at `t0`.
    pub fn frozen(&self, t0: f64) -> Self {
        Self {
            source: Source::Frozen(Box::new(self.source.clone()), t0),
        }
    }

    pub fn vrho(&self, t: f64, x: f64) -> Result<f64> {
        Ok(self.source.eval(t, x)?.0)
    }

    pub fn a_rho(&self, t: f64, x: f64, xi_v: f64) -> Result<f64> {
        Ok(self.vrho(t, x - 0.5 * xi_v)? - self.vrho(t, x + 0.5 * xi_v)?)
    }

    pub fn a(&self, t: f64, z: [f64; 2], xi: [f64; 2]) -> Result<f64> {
        Ok(z[1] * xi[0] + self.a_rho(t, z[0], xi[1])?)
    }

    /// Right-hand side of `(X, V, Xi_x, Xi_v, psi)`.
    fn rhs(&self, t: f64, y: &[f64; 5]) -> Result<[f64; 5]> {
        let [x, v, _, xv, _] = *y;
        let (vm, dm) = self.source.eval(t, x - 0.5 * xv)?;
        let (vp, dp) = self.source.eval(t, x + 0.5 * xv)?;
        let a_rho = vm - vp;
        let da_dxiv = -0.5 * (dm + dp);
        let da_dx = dm - dp;
        Ok([
            v,
            da_dxiv,
            -da_dx,
            -y[2],
            -a_rho + xv * da_dxiv,
        ])
    }
}

/// Ray state `(Z, Xi)` at time `t`, launched from `(z, xi)` at `s`, with the
/// accumulated action `psi_{t,s}(z, xi)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BicharState {
    pub z: [f64; 2],
    pub xi: [f64; 2],
    pub psi: f64,
    pub s: f64,
    pub t: f64,
}

/// Numerical controls.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EikonalOptions {
    pub dt_ode: f64,
    pub newton_tol: f64,
    pub newton_max_iter: usize,
    /// Forward-difference step of the Newton Jacobian.
    pub jacobian_step: f64,
    /// Centered-difference step for phase derivatives.
    pub fd_step: f64,
}

impl Default for EikonalOptions {
    fn default() -> Self {
        Self {
            dt_ode: 1e-3,
            newton_tol: 1e-12,
            newton_max_iter: 50,
            jacobian_step: 1e-7,
            fd_step: 1e-3,
        }
    }
}

impl EikonalOptions {
    fn validate(&self) -> Result<()> {
        if !(self.dt_ode > 0.0 && self.dt_ode.is_finite()) {
            return Err(param_err("dt_ode", "must be positive"));
        }
        if !(self.fd_step > 0.0 && self.jacobian_step > 0.0) {
            return Err(param_err("fd_step", "difference steps must be positive"));
        }
        Ok(())
    }
}

/// Classical RK4 from `s` to `t` with `ceil(|t - s| / dt_ode)` equal steps;
/// `t < s` integrates backward.
pub fn integrate_bichar(
    ham: &Hamiltonian,
    z0: [f64; 2],
    xi0: [f64; 2],
    s: f64,
    t: f64,
    dt_ode: f64,
) -> Result<BicharState> {
    if !(dt_ode > 0.0 && dt_ode.is_finite()) {
        return Err(param_err("dt_ode", "must be positive"));
    }
    let mut y = [z0[0], z0[1], xi0[0], xi0[1], z0[0] * xi0[0] + z0[1] * xi0[1]];
    let n = ((t - s).abs() / dt_ode).ceil() as usize;
    if n > 0 {
        let h = (t - s) / n as f64;
        let add = |y: &[f64; 5], k: &[f64; 5], c: f64| -> [f64; 5] {
            let mut out = *y;
            for i in 0..5 {
                out[i] += c * k[i];
            }
            out
        };
        for step in 0..n {
            let tau = s + step as f64 * h;
            let k1 = ham.rhs(tau, &y)?;
            let k2 = ham.rhs(tau + 0.5 * h, &add(&y, &k1, 0.5 * h))?;
            let k3 = ham.rhs(tau + 0.5 * h, &add(&y, &k2, 0.5 * h))?;
            let k4 = ham.rhs(tau + h, &add(&y, &k3, h))?;
            for i in 0..5 {
                y[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
            }
        }
    }
    if y.iter().any(|c| !c.is_finite()) {
        return Err(Error::NonFinite {
            t,
            what: "bicharacteristic".into(),
        });
    }
    Ok(BicharState {
        z: [y[0], y[1]],
        xi: [y[2], y[3]],
        psi: y[4],
        s,
        t,
    })
}

/// `psi_{t,s}(z, xi)`.
pub fn phase_psi(ham: &Hamiltonian, z0: [f64; 2], xi0: [f64; 2], s: f64, t: f64, opts: &EikonalOptions) -> Result<f64> {
    Ok(integrate_bichar(ham, z0, xi0, s, t, opts.dt_ode)?.psi)
}

type Mat2 = [[f64; 2]; 2];

fn dev_norm(j: &Mat2) -> f64 {
    // infinity norm of J - I
    let r0 = (j[0][0] - 1.0).abs() + j[0][1].abs();
    let r1 = j[1][0].abs() + (j[1][1] - 1.0).abs();
    r0.max(r1)
}

/// Forward-difference Jacobian `grad_z Z_{t,s}(z0, xi)` and `Z(z0)`.
fn flow_jacobian(
    ham: &Hamiltonian,
    z0: [f64; 2],
    xi: [f64; 2],
    s: f64,
    t: f64,
    opts: &EikonalOptions,
) -> Result<([f64; 2], Mat2)> {
    let base = integrate_bichar(ham, z0, xi, s, t, opts.dt_ode)?.z;
    let mut j = [[0.0; 2]; 2];
    for c in 0..2 {
        let h = opts.jacobian_step * z0[c].abs().max(1.0);
        let mut zp = z0;
        zp[c] += h;
        let zz = integrate_bichar(ham, zp, xi, s, t, opts.dt_ode)?.z;
        for r in 0..2 {
            j[r][c] = (zz[r] - base[r]) / h;
        }
    }
    Ok((base, j))
}

/// `z0 = Y_{t,s}(z, xi)` with diagnostics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Inversion {
    pub z0: [f64; 2],
    pub residual: f64,
    pub iterations: usize,
    /// `||grad_z Z - I||_inf` at the solution.
    pub jacobian_deviation: f64,
}

/// Newton iteration on `z0 -> Z_{t,s}(z0, xi) - z`, started from the free
/// inverse `(x - (t - s) v, v)`.
pub fn invert_z(
    ham: &Hamiltonian,
    z: [f64; 2],
    xi: [f64; 2],
    s: f64,
    t: f64,
    opts: &EikonalOptions,
) -> Result<Inversion> {
    opts.validate()?;
    let mut z0 = [z[0] - (t - s) * z[1], z[1]];
    let scale = z[0].abs().max(z[1].abs()).max(1.0);
    let mut last_dev = 0.0;
    for it in 0..=opts.newton_max_iter {
        let (zz, j) = flow_jacobian(ham, z0, xi, s, t, opts)?;
        last_dev = dev_norm(&j);
        let r = [zz[0] - z[0], zz[1] - z[1]];
        let res = r[0].abs().max(r[1].abs());
        if res <= opts.newton_tol * scale {
            return Ok(Inversion {
                z0,
                residual: res,
                iterations: it,
                jacobian_deviation: last_dev,
            });
        }
        let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
        if !(det.abs() > 1e-14) || !res.is_finite() {
            break;
        }
        z0[0] -= (j[1][1] * r[0] - j[0][1] * r[1]) / det;
        z0[1] -= (-j[1][0] * r[0] + j[0][0] * r[1]) / det;
    }
    Err(Error::WindowTooLarge {
        jacobian_deviation: last_dev,
        detail: format!("Newton inversion of Z_(t={t}, s={s}) did not converge at z = {z:?}, xi = {xi:?}"),
    })
}

/// `phi_{t,s}(z, xi) = psi_{t,s}(Y_{t,s}(z, xi), xi)`.
pub fn phase(ham: &Hamiltonian, z: [f64; 2], xi: [f64; 2], s: f64, t: f64, opts: &EikonalOptions) -> Result<f64> {
    let y = invert_z(ham, z, xi, s, t, opts)?;
    phase_psi(ham, y.z0, xi, s, t, opts)
}

/// `(x - (t - s) v) xi_x + v xi_v`.
pub fn free_phase(z: [f64; 2], xi: [f64; 2], s: f64, t: f64) -> f64 {
    (z[0] - (t - s) * z[1]) * xi[0] + z[1] * xi[1]
}

/// Centered-difference `grad_z phi`.
pub fn phase_gradient_z(
    ham: &Hamiltonian,
    z: [f64; 2],
    xi: [f64; 2],
    s: f64,
    t: f64,
    opts: &EikonalOptions,
) -> Result<[f64; 2]> {
    let h = opts.fd_step;
    let mut g = [0.0; 2];
    for c in 0..2 {
        let (mut zp, mut zm) = (z, z);
        zp[c] += h;
        zm[c] -= h;
        g[c] = (phase(ham, zp, xi, s, t, opts)? - phase(ham, zm, xi, s, t, opts)?) / (2.0 * h);
    }
    Ok(g)
}

/// `d_t phi + v d_x phi + a_rho(t, x, d_v phi)` by centered differences.
pub fn hj_residual(ham: &Hamiltonian, z: [f64; 2], xi: [f64; 2], s: f64, t: f64, opts: &EikonalOptions) -> Result<f64> {
    let h = opts.fd_step;
    let dt = (phase(ham, z, xi, s, t + h, opts)? - phase(ham, z, xi, s, t - h, opts)?) / (2.0 * h);
    let g = phase_gradient_z(ham, z, xi, s, t, opts)?;
    Ok(dt + z[1] * g[0] + ham.a_rho(t, z[0], g[1])?)
}

/// Mixed derivatives `d_{z_r} d_{xi_c} phi` by centered differences.
pub fn mixed_hessian(
    ham: &Hamiltonian,
    z: [f64; 2],
    xi: [f64; 2],
    s: f64,
    t: f64,
    opts: &EikonalOptions,
) -> Result<Mat2> {
    let h = opts.fd_step;
    let mut m = [[0.0; 2]; 2];
    for c in 0..2 {
        let (mut xp, mut xm) = (xi, xi);
        xp[c] += h;
        xm[c] -= h;
        let gp = phase_gradient_z(ham, z, xp, s, t, opts)?;
        let gm = phase_gradient_z(ham, z, xm, s, t, opts)?;
        for r in 0..2 {
            m[r][c] = (gp[r] - gm[r]) / (2.0 * h);
        }
    }
    Ok(m)
}

/// Determinant of the full `(z, xi)` flow Jacobian, by centered differences.
pub fn flow_determinant(
    ham: &Hamiltonian,
    z: [f64; 2],
    xi: [f64; 2],
    s: f64,
    t: f64,
    opts: &EikonalOptions,
) -> Result<f64> {
    let h = 1e-5;
    let y0 = [z[0], z[1], xi[0], xi[1]];
    let mut j = [[0.0; 4]; 4];
    for c in 0..4 {
        let mut out = [[0.0; 4]; 2];
        for (k, sign) in [1.0, -1.0].into_iter().enumerate() {
            let mut y = y0;
            y[c] += sign * h;
            let b = integrate_bichar(ham, [y[0], y[1]], [y[2], y[3]], s, t, opts.dt_ode)?;
            out[k] = [b.z[0], b.z[1], b.xi[0], b.xi[1]];
        }
        for r in 0..4 {
            j[r][c] = (out[0][r] - out[1][r]) / (2.0 * h);
        }
    }
    Ok(det4(j))
}

fn det4(mut m: [[f64; 4]; 4]) -> f64 {
    let mut det = 1.0;
    for c in 0..4 {
        let p = (c..4).max_by(|&a, &b| m[a][c].abs().total_cmp(&m[b][c].abs())).expect("rows");
        if m[p][c] == 0.0 {
            return 0.0;
        }
        if p != c {
            m.swap(p, c);
            det = -det;
        }
        det *= m[c][c];
        for r in c + 1..4 {
            let f = m[r][c] / m[c][c];
            let pivot = m[c];
            for (x, p) in m[r].iter_mut().zip(pivot).skip(c) {
                *x -= f * p;
            }
        }
    }
    det
}

/// Test lattice of rays `(x, v, xi_x, xi_v)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Lattice {
    pub xs: Vec<f64>,
    pub vs: Vec<f64>,
    pub xi_xs: Vec<f64>,
    pub xi_vs: Vec<f64>,
}

impl Lattice {
    fn points(&self) -> Vec<([f64; 2], [f64; 2])> {
        let mut out = Vec::new();
        for &x in &self.xs {
            for &v in &self.vs {
                for &a in &self.xi_xs {
                    for &b in &self.xi_vs {
                        out.push(([x, v], [a, b]));
                    }
                }
            }
        }
        out
    }
}

/// Per-point residuals and estimate slacks. Slacks are `bound - value`, so
/// negative entries are violations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LatticeRow {
    pub x: f64,
    pub v: f64,
    pub xi_x: f64,
    pub xi_v: f64,
    pub inversion_residual: f64,
    pub hj_residual: f64,
    /// `|grad_z phi(Z(z, xi), xi) - Xi(z, xi)|`.
    pub gradient_mismatch: f64,
    /// `||d_z d_xi phi - I||_inf`.
    pub hessian_deviation: f64,
    pub jacobian_deviation: f64,
    /// `1 - |phi - phi_free|`.
    pub phase_slack: f64,
    /// `|xi_v| + |t - s| |xi_x| / 2 - max(|phi - phi_free|, |grad_z (phi - phi_free)|)`.
    pub dz_slack: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LatticeReport {
    pub s: f64,
    pub t: f64,
    pub rows: Vec<LatticeRow>,
    pub max_inversion_residual: f64,
    pub max_hj_residual: f64,
    pub max_gradient_mismatch: f64,
    pub max_hessian_deviation: f64,
    pub max_jacobian_deviation: f64,
    pub min_phase_slack: f64,
    pub min_dz_slack: f64,
}

impl LatticeReport {
    pub fn write_csv(&self, mut w: impl Write) -> std::io::Result<()> {
        writeln!(
            w,
            "x,v,xi_x,xi_v,inversion_residual,hj_residual,gradient_mismatch,hessian_deviation,jacobian_deviation,phase_slack,dz_slack"
        )?;
        for r in &self.rows {
            writeln!(
                w,
                "{},{},{},{},{},{},{},{},{},{},{}",
                r.x,
                r.v,
                r.xi_x,
                r.xi_v,
                r.inversion_residual,
                r.hj_residual,
                r.gradient_mismatch,
                r.hessian_deviation,
                r.jacobian_deviation,
                r.phase_slack,
                r.dz_slack
            )?;
        }
        Ok(())
    }
}

fn lattice_row(
    ham: &Hamiltonian,
    z: [f64; 2],
    xi: [f64; 2],
    s: f64,
    t: f64,
    opts: &EikonalOptions,
) -> Result<LatticeRow> {
    let inv = invert_z(ham, z, xi, s, t, opts)?;
    let hj = hj_residual(ham, z, xi, s, t, opts)?.abs();
    // gradient identity at the image of the lattice point
    let ray = integrate_bichar(ham, z, xi, s, t, opts.dt_ode)?;
    let g = phase_gradient_z(ham, ray.z, xi, s, t, opts)?;
    let mismatch = (g[0] - ray.xi[0]).abs().max((g[1] - ray.xi[1]).abs());
    let hess = mixed_hessian(ham, z, xi, s, t, opts)?;
    let phi = phase(ham, z, xi, s, t, opts)?;
    let dphi = (phi - free_phase(z, xi, s, t)).abs();
    let gz = phase_gradient_z(ham, z, xi, s, t, opts)?;
    let free_g = [xi[0], xi[1] - (t - s) * xi[0]];
    let dgz = (gz[0] - free_g[0]).abs().max((gz[1] - free_g[1]).abs());
    let bound = xi[1].abs() + 0.5 * (t - s).abs() * xi[0].abs();
    Ok(LatticeRow {
        x: z[0],
        v: z[1],
        xi_x: xi[0],
        xi_v: xi[1],
        inversion_residual: inv.residual,
        hj_residual: hj,
        gradient_mismatch: mismatch,
        hessian_deviation: dev_norm(&hess),
        jacobian_deviation: inv.jacobian_deviation,
        phase_slack: 1.0 - dphi,
        dz_slack: bound - dphi.max(dgz),
    })
}

/// Residuals and phase estimates on every lattice point, in parallel.
pub fn check_lattice(ham: &Hamiltonian, lattice: &Lattice, s: f64, t: f64, opts: &EikonalOptions) -> Result<LatticeReport> {
    opts.validate()?;
    let pts = lattice.points();
    if pts.is_empty() {
        return Err(param_err("lattice", "empty lattice"));
    }
    let rows: Vec<LatticeRow> = pts
        .par_iter()
        .map(|&(z, xi)| lattice_row(ham, z, xi, s, t, opts))
        .collect::<Result<_>>()?;
    let max = |f: fn(&LatticeRow) -> f64| rows.iter().map(f).fold(0.0, f64::max);
    let min = |f: fn(&LatticeRow) -> f64| rows.iter().map(f).fold(f64::INFINITY, f64::min);
    Ok(LatticeReport {
        s,
        t,
        max_inversion_residual: max(|r| r.inversion_residual),
        max_hj_residual: max(|r| r.hj_residual),
        max_gradient_mismatch: max(|r| r.gradient_mismatch),
        max_hessian_deviation: max(|r| r.hessian_deviation),
        max_jacobian_deviation: max(|r| r.jacobian_deviation),
        min_phase_slack: min(|r| r.phase_slack),
        min_dz_slack: min(|r| r.dz_slack),
        rows,
    })
}

/// `||grad_z Z_{s + w, s} - I||_inf` for each window `w`, and the
/// least-squares slope through the origin.
pub fn jacobian_growth(
    ham: &Hamiltonian,
    z: [f64; 2],
    xi: [f64; 2],
    s: f64,
    windows: &[f64],
    opts: &EikonalOptions,
) -> Result<(Vec<(f64, f64)>, f64)> {
    let pts: Vec<(f64, f64)> = windows
        .par_iter()
        .map(|&w| Ok((w, dev_norm(&flow_jacobian(ham, z, xi, s, s + w, opts)?.1))))
        .collect::<Result<_>>()?;
    let num: f64 = pts.iter().map(|(w, d)| w * d).sum();
    let den: f64 = pts.iter().map(|(w, _)| w * w).sum();
    Ok((pts, if den > 0.0 { num / den } else { 0.0 }))
}

/// Largest sampled window `w <= w_max` such that the flow Jacobian and the
/// mixed phase Hessian stay within `1/2` of the identity on every lattice
/// point for all sampled windows up to `w`.
pub fn empirical_window(
    ham: &Hamiltonian,
    lattice: &Lattice,
    s: f64,
    w_max: f64,
    samples: usize,
    opts: &EikonalOptions,
) -> Result<f64> {
    let pts = lattice.points();
    let mut valid = 0.0;
    for k in 1..=samples.max(1) {
        let w = w_max * k as f64 / samples.max(1) as f64;
        let ok = pts
            .par_iter()
            .map(|&(z, xi)| -> Result<bool> {
                let j = flow_jacobian(ham, z, xi, s, s + w, opts)?.1;
                if dev_norm(&j) > 0.5 {
                    return Ok(false);
                }
                Ok(dev_norm(&mixed_hessian(ham, z, xi, s, s + w, opts)?) <= 0.5)
            })
            .map(|r| r.unwrap_or(false))
            .collect::<Vec<bool>>()
            .into_iter()
            .all(|b| b);
        if !ok {
            break;
        }
        valid = w;
    }
    Ok(valid)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::DensityField;
    use std::f64::consts::PI;

    fn smooth() -> Hamiltonian {
        // V_rho(t, x) = 0.3 (1 + t) cos x + 0.1 sin(2x - t)
        Hamiltonian::analytic(
            |t, x| 0.3 * (1.0 + t) * x.cos() + 0.1 * (2.0 * x - t).sin(),
            |t, x| -0.3 * (1.0 + t) * x.sin() + 0.2 * (2.0 * x - t).cos(),
        )
    }

    fn opts() -> EikonalOptions {
        EikonalOptions::default()
    }

    #[test]
    fn free_flow_is_exact() {
        let h = Hamiltonian::free();
        let b = integrate_bichar(&h, [0.3, -1.2], [0.7, 0.4], 0.1, 0.6, 1e-2).unwrap();
        assert!((b.z[0] - (0.3 - 0.5 * 1.2)).abs() <= 1e-14);
        assert_eq!(b.z[1], -1.2);
        assert_eq!(b.xi[0], 0.7);
        assert!((b.xi[1] - (0.4 - 0.5 * 0.7)).abs() <= 1e-14);
        assert!((b.psi - (0.3 * 0.7 - 1.2 * 0.4)).abs() <= 1e-14);
        let inv = invert_z(&h, [0.3, -1.2], [0.7, 0.4], 0.1, 0.6, &opts()).unwrap();
        assert!((inv.z0[0] - (0.3 + 0.5 * 1.2)).abs() <= 1e-12 && (inv.z0[1] + 1.2).abs() <= 1e-12);
        let phi = phase(&h, [0.3, -1.2], [0.7, 0.4], 0.1, 0.6, &opts()).unwrap();
        assert!((phi - free_phase([0.3, -1.2], [0.7, 0.4], 0.1, 0.6)).abs() <= 1e-12);
    }

    #[test]
    fn equal_times_give_the_initial_phase() {
        let b = integrate_bichar(&smooth(), [1.0, 2.0], [3.0, -0.5], 0.2, 0.2, 1e-3).unwrap();
        assert_eq!(b.psi, 1.0 * 3.0 - 2.0 * 0.5);
        assert_eq!(b.z, [1.0, 2.0]);
    }

    #[test]
    fn reversibility() {
        let h = smooth();
        let f = integrate_bichar(&h, [0.4, 0.9], [1.1, -0.6], 0.0, 0.4, 1e-3).unwrap();
        let b = integrate_bichar(&h, f.z, f.xi, 0.4, 0.0, 1e-3).unwrap();
        assert!((b.z[0] - 0.4).abs() <= 1e-8 && (b.z[1] - 0.9).abs() <= 1e-8);
        assert!((b.xi[0] - 1.1).abs() <= 1e-8 && (b.xi[1] + 0.6).abs() <= 1e-8);
    }

    #[test]
    fn rk4_order() {
        let h = smooth();
        let run = |dt| integrate_bichar(&h, [0.4, 0.9], [1.1, -0.6], 0.0, 0.8, dt).unwrap();
        let reference = run(0.1 / 8.0);
        let err = |b: BicharState| {
            let d = [b.z[0] - reference.z[0], b.z[1] - reference.z[1], b.xi[0] - reference.xi[0], b.xi[1] - reference.xi[1], b.psi - reference.psi];
            d.iter().map(|x| x * x).sum::<f64>().sqrt()
        };
        let ratio = err(run(0.2)) / err(run(0.1));
        assert!((ratio / 16.0 - 1.0).abs() <= 0.2, "{ratio}");
    }

    #[test]
    fn inversion_and_gradient_identity() {
        let h = smooth();
        let o = opts();
        for z in [[0.1, 0.5], [2.0, -1.0]] {
            for xi in [[0.5, 0.3], [-1.0, 0.8]] {
                let inv = invert_z(&h, z, xi, 0.0, 0.3, &o).unwrap();
                let back = integrate_bichar(&h, inv.z0, xi, 0.0, 0.3, o.dt_ode).unwrap().z;
                assert!((back[0] - z[0]).abs().max((back[1] - z[1]).abs()) <= 1e-10);
                let ray = integrate_bichar(&h, z, xi, 0.0, 0.3, o.dt_ode).unwrap();
                let g = phase_gradient_z(&h, ray.z, xi, 0.0, 0.3, &o).unwrap();
                assert!((g[0] - ray.xi[0]).abs() <= 1e-6 && (g[1] - ray.xi[1]).abs() <= 1e-6);
            }
        }
    }

    #[test]
    fn hj_residual_is_small() {
        let h = smooth();
        for z in [[0.1, 0.5], [2.0, -1.0]] {
            for xi in [[0.5, 0.3], [-1.0, 0.8]] {
                let r = hj_residual(&h, z, xi, 0.0, 0.3, &opts()).unwrap();
                assert!(r.abs() <= 1e-5, "{r}");
            }
        }
    }

    #[test]
    fn jacobian_deviation_grows_linearly_for_free_flow() {
        let (pts, slope) = jacobian_growth(&Hamiltonian::free(), [0.0, 1.0], [1.0, 0.0], 0.0, &[0.05, 0.1, 0.2], &opts()).unwrap();
        assert!((slope - 1.0).abs() <= 1e-6);
        for (w, d) in pts {
            assert!((d - w).abs() <= 1e-6);
        }
    }

    #[test]
    fn frozen_flow_preserves_volume() {
        let h = smooth().frozen(0.2);
        let d = flow_determinant(&h, [0.7, -0.3], [0.9, 0.4], 0.0, 1.0, &opts()).unwrap();
        assert!((d - 1.0).abs() <= 1e-6, "{d}");
    }

    #[test]
    fn history_interpolation_and_range() {
        let g = Grid1::new(32, 2.0 * PI, 0.0).unwrap();
        let times: Vec<f64> = (0..9).map(|k| 0.1 * k as f64).collect();
        let hist: Vec<(f64, DensityField)> = times
            .iter()
            .map(|&t| (t, DensityField::from_fn(g, |x| 1.0 + 0.2 * (1.0 + t) * x.cos())))
            .collect();
        let h = VrhoHistory::from_densities(&hist, &PairPotential::defocusing_cubic(), Some(0.1)).unwrap();
        let (v, dv) = h.eval(0.37, 1.3).unwrap();
        assert!((v - (1.0 + 0.2 * 1.37 * 1.3f64.cos())).abs() <= 1e-12);
        assert!((dv + 0.2 * 1.37 * 1.3f64.sin()).abs() <= 1e-12);
        let ham = Hamiltonian::from_history(h);
        assert!(matches!(
            integrate_bichar(&ham, [0.0, 1.0], [0.0, 0.0], 0.5, 1.5, 1e-2),
            Err(Error::HistoryRange { .. })
        ));
        let rough: Vec<(f64, DensityField)> = times
            .iter()
            .map(|&t| (t, DensityField::from_fn(g, |x| if x < PI { 1.0 } else { 0.0 })))
            .collect();
        assert!(matches!(
            VrhoHistory::from_densities(&rough, &PairPotential::defocusing_cubic(), None),
            Err(Error::Underresolved { .. })
        ));
    }

    #[test]
    fn lattice_report_and_window() {
        let lat = Lattice {
            xs: vec![0.0, 1.5],
            vs: vec![-0.5, 0.5],
            xi_xs: vec![0.5],
            xi_vs: vec![-0.3, 0.3],
        };
        let r = check_lattice(&smooth(), &lat, 0.0, 0.2, &opts()).unwrap();
        assert_eq!(r.rows.len(), 8);
        assert!(r.max_hj_residual <= 1e-5);
        assert!(r.max_gradient_mismatch <= 1e-6);
        assert!(r.max_hessian_deviation <= 0.5);
        assert!(r.min_phase_slack >= 0.0);
        let mut csv = Vec::new();
        r.write_csv(&mut csv).unwrap();
        assert_eq!(String::from_utf8(csv).unwrap().lines().count(), 9);
        // free flow: both deviations equal the window length
        let w = empirical_window(&Hamiltonian::free(), &lat, 0.0, 1.0, 9, &opts()).unwrap();
        assert!((w - 4.0 / 9.0).abs() <= 1e-12, "{w}");
    }
}
