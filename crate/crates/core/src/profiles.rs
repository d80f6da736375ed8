//! Velocity profiles and phase-space initial data: Maxwellians, two-stream
//! profiles, and Boltzmann, Fermi and Bose gases with `x`-dependent
//! coefficients.
//!
//! The velocity transform is `F f(zeta) = int f(v) e^{-i zeta v} dv`. When no
//! closed form is known it is evaluated as the trapezoid sum over a sampled
//! window, which converges spectrally for smooth, decaying profiles.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{param_err, Result};
use crate::spectral::{Grid1, PhaseField, PhaseGrid};

type RealFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;
type ComplexFn = Arc<dyn Fn(f64) -> Complex64 + Send + Sync>;

/// Trapezoid samples of a profile on `[center - half, center + half)`.
#[derive(Debug, Clone)]
struct SampledTransform {
    v0: f64,
    dv: f64,
    values: Vec<f64>,
}

impl SampledTransform {
    fn new(eval: &RealFn, center: f64, half_width: f64, n: usize) -> Self {
        let dv = 2.0 * half_width / n as f64;
        let v0 = center - half_width;
        let values = (0..n).map(|j| eval(v0 + j as f64 * dv)).collect();
        Self { v0, dv, values }
    }

    fn eval(&self, zeta: f64) -> Complex64 {
        let step = Complex64::from_polar(1.0, -zeta * self.dv);
        let mut w = Complex64::from_polar(self.dv, -zeta * self.v0);
        let mut s = Complex64::new(0.0, 0.0);
        for &f in &self.values {
            s += w * f;
            w *= step;
        }
        s
    }

    fn nyquist(&self) -> f64 {
        PI / self.dv
    }
}

/// A function of velocity with its Fourier transform.
#[derive(Clone)]
pub struct VelocityProfile {
    name: String,
    eval: RealFn,
    fourier: ComplexFn,
    closed_form: bool,
    /// `|F f(zeta)| <= FOURIER_TAIL * l1` for `|zeta| >= zeta_cutoff`.
    zeta_cutoff: f64,
    /// Rough velocity support radius; used to pick quadrature panel sizes.
    extent: f64,
    even: bool,
}

/// Relative level below which a closed-form velocity transform is treated as zero.
pub const FOURIER_TAIL: f64 = 1e-17;

/// Same for sampled transforms, whose floor is set by rounding in the sum.
const SAMPLED_TAIL: f64 = 1e-14;

impl fmt::Debug for VelocityProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("VelocityProfile")
            .field("name", &self.name)
            .field("closed_form", &self.closed_form)
            .field("zeta_cutoff", &self.zeta_cutoff)
            .field("extent", &self.extent)
            .field("even", &self.even)
            .finish()
    }
}

/// `zeta` beyond which `exp(-sigma^2 zeta^2 / 2)` drops below `FOURIER_TAIL`.
fn gaussian_cutoff(sigma: f64) -> f64 {
    (2.0 * (1.0 / FOURIER_TAIL).ln()).sqrt() / sigma
}

impl VelocityProfile {
    /// Profile with a closed-form transform.
    pub fn closed(
        name: impl Into<String>,
        eval: impl Fn(f64) -> f64 + Send + Sync + 'static,
        fourier: impl Fn(f64) -> Complex64 + Send + Sync + 'static,
        zeta_cutoff: f64,
        extent: f64,
        even: bool,
    ) -> Self {
        Self {
            name: name.into(),
            eval: Arc::new(eval),
            fourier: Arc::new(fourier),
            closed_form: true,
            zeta_cutoff,
            extent,
            even,
        }
    }

    /// Profile whose transform is computed from `n` samples on
    /// `[center - half_width, center + half_width)`. The decay cutoff is
    /// located by scanning the sampled transform.
    pub fn sampled(
        name: impl Into<String>,
        eval: impl Fn(f64) -> f64 + Send + Sync + 'static,
        center: f64,
        half_width: f64,
        n: usize,
        even: bool,
    ) -> Result<Self> {
        if !(half_width > 0.0 && n >= 16) {
            return Err(param_err("sampling", "need half_width > 0 and at least 16 samples"));
        }
        let eval: RealFn = Arc::new(eval);
        let st = SampledTransform::new(&eval, center, half_width, n);
        let l1: f64 = st.values.iter().map(|x| x.abs()).sum::<f64>() * st.dv;
        let nyq = st.nyquist();
        // last zeta (on a fine scan up to the Nyquist frequency) where the
        // transform is still above the tail level
        let scan = 4096;
        let mut cutoff = f64::INFINITY;
        if l1 == 0.0 {
            cutoff = 0.0;
        } else {
            let mut last_big = 0.0;
            for k in 0..=scan {
                let z = nyq * k as f64 / scan as f64;
                if st.eval(z).norm() > SAMPLED_TAIL * l1 {
                    last_big = z;
                }
            }
            if last_big < 0.5 * nyq {
                cutoff = last_big * 1.1 + 1e-12;
            }
        }
        let st = Arc::new(st);
        let st2 = Arc::clone(&st);
        Ok(Self {
            name: name.into(),
            eval,
            fourier: Arc::new(move |z| st2.eval(z)),
            closed_form: false,
            zeta_cutoff: cutoff,
            extent: center.abs() + half_width,
            even,
        })
    }

    pub fn zero() -> Self {
        Self::closed("zero", |_| 0.0, |_| Complex64::new(0.0, 0.0), 0.0, 0.0, true)
    }

    /// `exp(-v^2 / (2 sigma^2)) / (sqrt(2 pi) sigma)`, transform `exp(-sigma^2 zeta^2 / 2)`.
    pub fn maxwellian(sigma: f64) -> Result<Self> {
        if !(sigma.is_finite() && sigma > 0.0) {
            return Err(param_err("sigma", format!("{sigma} must be positive")));
        }
        Ok(Self::closed(
            format!("maxwellian(sigma={sigma})"),
            move |v| (-0.5 * v * v / (sigma * sigma)).exp() / ((2.0 * PI).sqrt() * sigma),
            move |z| Complex64::new((-0.5 * sigma * sigma * z * z).exp(), 0.0),
            gaussian_cutoff(sigma),
            9.0 * sigma,
            true,
        ))
    }

    /// `1/2 M_sigma(v - u) + 1/2 M_sigma(v + u)`, transform `exp(-sigma^2 zeta^2/2) cos(u zeta)`.
    pub fn two_stream(u: f64, sigma: f64) -> Result<Self> {
        if !(sigma.is_finite() && sigma > 0.0) {
            return Err(param_err("sigma", format!("{sigma} must be positive")));
        }
        if !u.is_finite() {
            return Err(param_err("u", "must be finite"));
        }
        let m = move |v: f64| (-0.5 * v * v / (sigma * sigma)).exp() / ((2.0 * PI).sqrt() * sigma);
        Ok(Self::closed(
            format!("two_stream(u={u},sigma={sigma})"),
            move |v| 0.5 * m(v - u) + 0.5 * m(v + u),
            move |z| Complex64::new((-0.5 * sigma * sigma * z * z).exp() * (u * z).cos(), 0.0),
            gaussian_cutoff(sigma),
            u.abs() + 9.0 * sigma,
            true,
        ))
    }

    /// Gaussian bump `exp(-(v - c)^2 / (2 w^2))` (not normalized).
    pub fn bump(center: f64, width: f64) -> Result<Self> {
        if !(width.is_finite() && width > 0.0) {
            return Err(param_err("width", format!("{width} must be positive")));
        }
        let norm = (2.0 * PI).sqrt() * width;
        Ok(Self::closed(
            format!("bump(c={center},w={width})"),
            move |v| (-0.5 * (v - center).powi(2) / (width * width)).exp(),
            move |z| Complex64::from_polar(norm * (-0.5 * width * width * z * z).exp(), -center * z),
            gaussian_cutoff(width),
            center.abs() + 9.0 * width,
            center == 0.0,
        ))
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn eval(&self, v: f64) -> f64 {
        (self.eval)(v)
    }

    pub fn fourier(&self, zeta: f64) -> Complex64 {
        (self.fourier)(zeta)
    }

    pub fn has_closed_form(&self) -> bool {
        self.closed_form
    }

    pub fn zeta_cutoff(&self) -> f64 {
        self.zeta_cutoff
    }

    pub fn extent(&self) -> f64 {
        self.extent
    }

    pub fn is_even(&self) -> bool {
        self.even
    }

    /// `alpha f`.
    pub fn scaled(&self, alpha: f64) -> Self {
        let (e, f) = (Arc::clone(&self.eval), Arc::clone(&self.fourier));
        Self {
            name: format!("{alpha}*{}", self.name),
            eval: Arc::new(move |v| alpha * e(v)),
            fourier: Arc::new(move |z| alpha * f(z)),
            closed_form: self.closed_form,
            zeta_cutoff: if alpha == 0.0 { 0.0 } else { self.zeta_cutoff },
            extent: self.extent,
            even: self.even,
        }
    }

    /// `alpha f + beta g`.
    pub fn combine(&self, alpha: f64, other: &Self, beta: f64) -> Self {
        let (e1, f1) = (Arc::clone(&self.eval), Arc::clone(&self.fourier));
        let (e2, f2) = (Arc::clone(&other.eval), Arc::clone(&other.fourier));
        Self {
            name: format!("{alpha}*{}+{beta}*{}", self.name, other.name),
            eval: Arc::new(move |v| alpha * e1(v) + beta * e2(v)),
            fourier: Arc::new(move |z| alpha * f1(z) + beta * f2(z)),
            closed_form: self.closed_form && other.closed_form,
            zeta_cutoff: self.zeta_cutoff.max(other.zeta_cutoff),
            extent: self.extent.max(other.extent),
            even: self.even && other.even,
        }
    }

    /// Largest deviation between the declared transform and the trapezoid
    /// transform of the samples on `grid`, over the grid's frequencies.
    pub fn fourier_mismatch(&self, grid: &Grid1) -> f64 {
        let eval = Arc::clone(&self.eval);
        let st = SampledTransform::new(&eval, grid.origin() + 0.5 * grid.length(), 0.5 * grid.length(), grid.len());
        (0..grid.len())
            .map(|m| {
                let z = grid.frequency(m);
                (st.eval(z) - self.fourier(z)).norm()
            })
            .fold(0.0, f64::max)
    }
}

/// Occupation statistics of a gas.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Statistics {
    Boltzmann,
    Fermi,
    Bose,
}

/// Local parameters `(rho, u, mu, T)` at one point of space.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LocalParams {
    pub rho: f64,
    pub u: f64,
    pub mu: f64,
    pub temperature: f64,
}

impl LocalParams {
    fn occupation(&self, stats: Statistics, v: f64) -> f64 {
        let w = (v - self.u).powi(2);
        let e = (w - self.mu) / self.temperature;
        match stats {
            Statistics::Boltzmann => self.rho * ((-w - self.mu) / self.temperature).exp(),
            Statistics::Fermi => self.rho / (e.exp() + 1.0),
            Statistics::Bose => self.rho / e.exp_m1(),
        }
    }
}

/// Phase-space data `f0(x, v) = occupation(x, v)` stored through its
/// coefficient functions, materialized on a grid only when asked.
#[derive(Clone)]
pub struct PhaseProfile {
    name: String,
    stats: Statistics,
    rho: RealFn,
    u: RealFn,
    mu: RealFn,
    temperature: RealFn,
}

impl fmt::Debug for PhaseProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PhaseProfile")
            .field("name", &self.name)
            .field("stats", &self.stats)
            .finish()
    }
}

impl PhaseProfile {
    fn build(
        name: &str,
        stats: Statistics,
        rho: impl Fn(f64) -> f64 + Send + Sync + 'static,
        u: impl Fn(f64) -> f64 + Send + Sync + 'static,
        mu: impl Fn(f64) -> f64 + Send + Sync + 'static,
        temperature: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Self {
            name: name.into(),
            stats,
            rho: Arc::new(rho),
            u: Arc::new(u),
            mu: Arc::new(mu),
            temperature: Arc::new(temperature),
        }
    }

    /// `rho(x) exp((-|v - u(x)|^2 - mu(x)) / T(x))`.
    pub fn boltzmann(
        rho: impl Fn(f64) -> f64 + Send + Sync + 'static,
        u: impl Fn(f64) -> f64 + Send + Sync + 'static,
        mu: impl Fn(f64) -> f64 + Send + Sync + 'static,
        temperature: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Self::build("boltzmann", Statistics::Boltzmann, rho, u, mu, temperature)
    }

    /// `rho(x) / (exp((|v - u(x)|^2 - mu(x)) / T(x)) + 1)`.
    pub fn fermi(
        rho: impl Fn(f64) -> f64 + Send + Sync + 'static,
        u: impl Fn(f64) -> f64 + Send + Sync + 'static,
        mu: impl Fn(f64) -> f64 + Send + Sync + 'static,
        temperature: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Self::build("fermi", Statistics::Fermi, rho, u, mu, temperature)
    }

    /// `rho(x) / (exp((|v - u(x)|^2 - mu(x)) / T(x)) - 1)`; requires `mu < 0`.
    pub fn bose(
        rho: impl Fn(f64) -> f64 + Send + Sync + 'static,
        u: impl Fn(f64) -> f64 + Send + Sync + 'static,
        mu: impl Fn(f64) -> f64 + Send + Sync + 'static,
        temperature: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Self::build("bose", Statistics::Bose, rho, u, mu, temperature)
    }

    /// `(1 + alpha cos(k x)) M(v)` with the unit Maxwellian `M`.
    pub fn modulated_maxwellian(alpha: f64, k: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&alpha) {
            return Err(param_err("alpha", format!("{alpha} is outside [0, 1)")));
        }
        let c = 1.0 / (2.0 * PI).sqrt();
        let mut p = Self::boltzmann(move |x| c * (1.0 + alpha * (k * x).cos()), |_| 0.0, |_| 0.0, |_| 2.0);
        p.name = format!("modulated_maxwellian(alpha={alpha},k={k})");
        Ok(p)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn statistics(&self) -> Statistics {
        self.stats
    }

    /// Coefficients at `x`, validated.
    pub fn params_at(&self, x: f64) -> Result<LocalParams> {
        let p = LocalParams {
            rho: (self.rho)(x),
            u: (self.u)(x),
            mu: (self.mu)(x),
            temperature: (self.temperature)(x),
        };
        if !(p.rho.is_finite() && p.rho > 0.0) {
            return Err(param_err("rho", format!("rho({x}) = {} must be positive", p.rho)));
        }
        if !(p.temperature.is_finite() && p.temperature > 0.0) {
            return Err(param_err("T", format!("T({x}) = {} must be positive", p.temperature)));
        }
        if !p.u.is_finite() || !p.mu.is_finite() {
            return Err(param_err("u/mu", format!("non-finite coefficient at x = {x}")));
        }
        if self.stats == Statistics::Bose && p.mu >= 0.0 {
            return Err(param_err("mu", format!("Bose gas needs mu < 0, got mu({x}) = {}", p.mu)));
        }
        Ok(p)
    }

    /// Per-point parameter tuples on an `x` grid.
    pub fn params_on(&self, gx: &Grid1) -> Result<Vec<LocalParams>> {
        gx.points().into_iter().map(|x| self.params_at(x)).collect()
    }

    pub fn eval(&self, x: f64, v: f64) -> Result<f64> {
        Ok(self.params_at(x)?.occupation(self.stats, v))
    }

    /// Materialize on a phase-space grid.
    pub fn sample(&self, grid: &PhaseGrid) -> Result<PhaseField> {
        let params = self.params_on(&grid.gx)?;
        let vs = grid.gv.points();
        let mut data = Vec::with_capacity(grid.size());
        for p in &params {
            for &v in &vs {
                data.push(p.occupation(self.stats, v));
            }
        }
        PhaseField::from_real_samples(*grid, &data)
    }

    /// The velocity profile `v -> f0(x, v)` at a fixed `x`. Boltzmann
    /// profiles carry a closed-form transform; Fermi and Bose are sampled.
    pub fn velocity_profile_at(&self, x: f64) -> Result<VelocityProfile> {
        let p = self.params_at(x)?;
        let stats = self.stats;
        let name = format!("{}@x={x}", self.name);
        match stats {
            Statistics::Boltzmann => {
                // rho e^{-mu/T} sqrt(pi T) * Gaussian with variance T/2
                let amp = p.rho * (-p.mu / p.temperature).exp() * (PI * p.temperature).sqrt();
                let sigma = (0.5 * p.temperature).sqrt();
                Ok(VelocityProfile::closed(
                    name,
                    move |v| p.occupation(stats, v),
                    move |z| Complex64::from_polar(amp * (-0.5 * sigma * sigma * z * z).exp(), -p.u * z),
                    gaussian_cutoff(sigma),
                    p.u.abs() + 9.0 * sigma,
                    p.u == 0.0,
                ))
            }
            Statistics::Fermi | Statistics::Bose => {
                // occupation decays like exp(-(v-u)^2/T); window where it is below 1e-18
                let reach = (p.mu.max(0.0) + p.temperature * 42.0).sqrt();
                VelocityProfile::sampled(name, move |v| p.occupation(stats, v), p.u, reach, 1024, p.u == 0.0)
            }
        }
    }

    /// Velocity profiles on every point of an `x` grid.
    pub fn velocity_profiles(&self, gx: &Grid1) -> Result<Vec<VelocityProfile>> {
        gx.points().into_iter().map(|x| self.velocity_profile_at(x)).collect()
    }
}
