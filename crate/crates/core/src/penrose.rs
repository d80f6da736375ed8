//! Quantum and classical Penrose functions, margin searches and stability
//! certificates.
//!
//! For a velocity profile `f` with transform `F` the three functions are
//!
//! ```text
//! P_quant(g, t, eta) = -2 V_hat(eta) int_0^inf e^{-(g + i t) s} sin(s eta^2 / 2) F(s eta) ds
//! P_VB(g, t, eta)    = -int_0^inf e^{-(g + i t) s} s eta^2 F(s eta) ds
//! P_VP(g, t, eta)    = P_VB(g, t, eta) / (1 + eta^2)
//! ```
//!
//! Integrals are truncated where `|F(s eta)| e^{-g s}` falls below
//! `tail_tol` and evaluated with adaptive Gauss-Kronrod quadrature.
//!
//! A "certified" margin means the sampled infimum of `|1 - P|` and the tail
//! envelope are both bounded away from zero. It is a grid plus envelope
//! statement, not an interval-arithmetic proof.

use std::f64::consts::PI;
use std::io::Write;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{param_err, Error, Result};
use crate::potential::PairPotential;
use crate::profiles::VelocityProfile;
use crate::quadrature::{integrate, integrate_real, QuadSettings};

type C = Complex64;

/// Argument `(gamma, tau, eta)` of a Penrose function.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PenrosePoint {
    gamma: f64,
    tau: f64,
    eta: f64,
    /// Evaluate at `gamma = 0+`, relying on the decay of the profile alone.
    limit: bool,
}

impl PenrosePoint {
    pub fn new(gamma: f64, tau: f64, eta: f64) -> Result<Self> {
        if !(gamma.is_finite() && gamma > 0.0) {
            return Err(param_err("gamma", format!("{gamma} must be positive and finite")));
        }
        if !(tau.is_finite() && eta.is_finite()) {
            return Err(param_err("tau/eta", "must be finite"));
        }
        Ok(Self {
            gamma,
            tau,
            eta,
            limit: false,
        })
    }

    /// The boundary point `gamma -> 0+`.
    pub fn limit(tau: f64, eta: f64) -> Result<Self> {
        if !(tau.is_finite() && eta.is_finite()) {
            return Err(param_err("tau/eta", "must be finite"));
        }
        Ok(Self {
            gamma: 0.0,
            tau,
            eta,
            limit: true,
        })
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn is_limit(&self) -> bool {
        self.limit
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum PenroseKind {
    Quant,
    Vb,
    Vp,
}

/// Truncation and quadrature controls.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PenroseOptions {
    /// Truncate where `|F(s eta)| e^{-gamma s}` (times kernel growth) drops
    /// below `tail_tol * sup|F|`.
    pub tail_tol: f64,
    /// Largest admissible truncation point.
    pub s_cap: f64,
    /// Multiplier applied to the truncation point.
    pub s_max_factor: f64,
    /// Multiplier applied to the initial panel count.
    pub panel_factor: f64,
    pub quad: QuadSettings,
}

impl Default for PenroseOptions {
    fn default() -> Self {
        Self {
            tail_tol: 1e-17,
            s_cap: 1e7,
            s_max_factor: 1.0,
            panel_factor: 1.0,
            quad: QuadSettings::default(),
        }
    }
}

/// `int_0^inf e^{-(gamma + i tau) s} k(s) F(s eta) ds` with
/// `|k(s)| <= max(1, growth s)` and oscillation frequency `k_freq`.
fn laplace(
    p: &PenrosePoint,
    prof: &VelocityProfile,
    opts: &PenroseOptions,
    growth: f64,
    k_freq: f64,
    kernel: impl Fn(f64) -> f64,
) -> Result<C> {
    let zero = C::new(0.0, 0.0);
    if p.eta == 0.0 || prof.zeta_cutoff() == 0.0 {
        return Ok(zero);
    }
    let eta_abs = p.eta.abs();
    let s_f = prof.zeta_cutoff() / eta_abs;
    let s_g = if p.gamma > 0.0 {
        let log_tol = (1.0 / opts.tail_tol).ln();
        let mut s = log_tol / p.gamma;
        for _ in 0..4 {
            s = (log_tol + (growth * s).max(1.0).ln()) / p.gamma;
        }
        s
    } else {
        f64::INFINITY
    };
    let s_max = s_f.min(s_g) * opts.s_max_factor;
    if !(s_max <= opts.s_cap) {
        let s = opts.s_cap;
        let residual = prof.fourier(s * p.eta).norm() * (-p.gamma * s).exp();
        return Err(Error::TruncationFailure { s_cap: s, residual });
    }
    let omega = p.tau.abs() + k_freq + eta_abs * prof.extent() + p.gamma;
    let cap = (opts.quad.max_panels / 4).max(1);
    let n0 = ((s_max * omega / PI * opts.panel_factor).ceil() as usize + 4).min(cap);
    let a = C::new(-p.gamma, -p.tau);
    let r = integrate(
        |s| (a * s).exp() * kernel(s) * prof.fourier(s * p.eta),
        0.0,
        s_max,
        n0,
        &opts.quad,
    )?;
    Ok(r.value)
}

fn quant_integral(p: &PenrosePoint, prof: &VelocityProfile, opts: &PenroseOptions) -> Result<C> {
    let e2 = 0.5 * p.eta * p.eta;
    laplace(p, prof, opts, e2, e2, |s| (s * e2).sin())
}

/// Quantum Penrose function.
pub fn penrose_quant(p: &PenrosePoint, prof: &VelocityProfile, pot: &PairPotential, opts: &PenroseOptions) -> Result<C> {
    let v = pot.vhat(p.eta);
    if v == 0.0 {
        return Ok(C::new(0.0, 0.0));
    }
    Ok(-2.0 * v * quant_integral(p, prof, opts)?)
}

/// Quantum Penrose function for a general nonlinearity `Psi`, with the
/// prefactor `-2 Psi'(rho)`.
pub fn penrose_quant_general(
    p: &PenrosePoint,
    prof: &VelocityProfile,
    psi_prime_at_rho: f64,
    opts: &PenroseOptions,
) -> Result<C> {
    if psi_prime_at_rho == 0.0 {
        return Ok(C::new(0.0, 0.0));
    }
    Ok(-2.0 * psi_prime_at_rho * quant_integral(p, prof, opts)?)
}

/// Vlasov-Benney Penrose function.
pub fn penrose_vb(p: &PenrosePoint, prof: &VelocityProfile, opts: &PenroseOptions) -> Result<C> {
    let e2 = p.eta * p.eta;
    Ok(-laplace(p, prof, opts, e2, 0.0, |s| s * e2)?)
}

/// Quasineutral Vlasov-Poisson Penrose function.
pub fn penrose_vp(p: &PenrosePoint, prof: &VelocityProfile, opts: &PenroseOptions) -> Result<C> {
    Ok(penrose_vb(p, prof, opts)? / (1.0 + p.eta * p.eta))
}

/// Dispatch on `kind`; the classical kinds ignore `pot`.
pub fn penrose(
    kind: PenroseKind,
    p: &PenrosePoint,
    prof: &VelocityProfile,
    pot: &PairPotential,
    opts: &PenroseOptions,
) -> Result<C> {
    match kind {
        PenroseKind::Quant => penrose_quant(p, prof, pot, opts),
        PenroseKind::Vb => penrose_vb(p, prof, opts),
        PenroseKind::Vp => penrose_vp(p, prof, opts),
    }
}

/// Profiles indexed by the spatial grid, or a single profile.
#[derive(Debug, Clone)]
pub enum ProfileFamily {
    Single(VelocityProfile),
    PerX(Vec<VelocityProfile>),
    /// `f(x_i, v) = weights[i] * base(v)`; scanned through linearity.
    Separable {
        base: VelocityProfile,
        weights: Vec<f64>,
    },
}

impl ProfileFamily {
    fn sources(&self) -> Vec<&VelocityProfile> {
        match self {
            Self::Single(p) | Self::Separable { base: p, .. } => vec![p],
            Self::PerX(ps) => ps.iter().collect(),
        }
    }

    /// `(x_index, source, weight)` triples.
    fn members(&self) -> Vec<(usize, usize, f64)> {
        match self {
            Self::Single(_) => vec![(0, 0, 1.0)],
            Self::PerX(ps) => (0..ps.len()).map(|i| (i, i, 1.0)).collect(),
            Self::Separable { weights, .. } => weights.iter().enumerate().map(|(i, &w)| (i, 0, w)).collect(),
        }
    }

    fn all_even(&self) -> bool {
        self.sources().iter().all(|p| p.is_even())
    }

    fn max_weight(&self) -> f64 {
        match self {
            Self::Separable { weights, .. } => weights.iter().fold(0.0, |m, w| m.max(w.abs())),
            _ => 1.0,
        }
    }
}

/// Sampled box `(0, gamma_max] x [-tau_max, tau_max] x [eta_min, eta_max]`.
/// `gamma` and `eta` are sampled geometrically, `tau` uniformly.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SearchBox {
    pub gamma_min: f64,
    pub gamma_max: f64,
    pub n_gamma: usize,
    pub tau_max: f64,
    pub n_tau: usize,
    pub eta_min: f64,
    pub eta_max: f64,
    pub n_eta: usize,
}

impl Default for SearchBox {
    fn default() -> Self {
        Self {
            gamma_min: 1e-4,
            gamma_max: 4.0,
            n_gamma: 13,
            tau_max: 30.0,
            n_tau: 61,
            eta_min: 0.05,
            eta_max: 6.0,
            n_eta: 16,
        }
    }
}

impl SearchBox {
    fn validate(&self) -> Result<()> {
        if !(self.gamma_min > 0.0 && self.gamma_max >= self.gamma_min && self.gamma_max.is_finite()) {
            return Err(param_err("box.gamma", "need 0 < gamma_min <= gamma_max < inf"));
        }
        if !(self.tau_max >= 0.0 && self.tau_max.is_finite()) {
            return Err(param_err("box.tau_max", "must be finite and nonnegative"));
        }
        if !(self.eta_min > 0.0 && self.eta_max >= self.eta_min && self.eta_max.is_finite()) {
            return Err(param_err("box.eta", "need 0 < eta_min <= eta_max < inf"));
        }
        if self.n_gamma == 0 || self.n_tau == 0 || self.n_eta == 0 {
            return Err(param_err("box", "every axis needs at least one sample"));
        }
        Ok(())
    }
}

fn geometric(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![hi];
    }
    let r = (hi / lo).ln() / (n - 1) as f64;
    (0..n).map(|k| if k + 1 == n { hi } else { lo * (r * k as f64).exp() }).collect()
}

fn uniform(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![0.5 * (lo + hi)];
    }
    let h = (hi - lo) / (n - 1) as f64;
    (0..n).map(|k| if k + 1 == n { hi } else { lo + h * k as f64 }).collect()
}

/// One evaluated point of a scan.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ScanSample {
    pub x_index: usize,
    pub gamma: f64,
    pub tau: f64,
    pub eta: f64,
    pub value: [f64; 2],
    pub abs_one_minus_p: f64,
}

/// Upper bounds of `|P|` outside the sampled box.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Envelope {
    pub eta_tail: f64,
    pub gamma_tail: f64,
    pub tau_tail: f64,
    pub total: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PenroseReport {
    pub kind: PenroseKind,
    pub margin: f64,
    pub argmin: ScanSample,
    pub envelope: Envelope,
    /// `min(margin, 1 - envelope)`, a lower bound for `|1 - P|` on the
    /// sampled set and its tails.
    pub lower_bound: f64,
    pub certified: bool,
    pub search: SearchBox,
    pub refine_levels: usize,
    /// Classical VB scans run at `eta = 1` through homogeneity.
    pub eta_reduced: bool,
    pub x_points: usize,
    pub evaluations: usize,
    pub options: PenroseOptions,
    pub note: String,
}

impl PenroseReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

/// Report plus every sampled point.
#[derive(Debug, Clone)]
pub struct PenroseScan {
    pub report: PenroseReport,
    pub surface: Vec<ScanSample>,
}

/// CSV of a scanned surface, one row per sample.
pub fn write_surface_csv(mut w: impl Write, surface: &[ScanSample]) -> std::io::Result<()> {
    writeln!(w, "gamma,tau,eta,x_index,abs_one_minus_p,re,im")?;
    for s in surface {
        writeln!(
            w,
            "{},{},{},{},{},{},{}",
            s.gamma, s.tau, s.eta, s.x_index, s.abs_one_minus_p, s.value[0], s.value[1]
        )?;
    }
    Ok(())
}

fn envelope_settings() -> QuadSettings {
    QuadSettings {
        abs_tol: 1e-13,
        rel_tol: 1e-10,
        max_panels: 200_000,
    }
}

/// `int_0^cutoff w(zeta) |F(zeta)| dzeta`.
fn weighted_abs_integral(prof: &VelocityProfile, w: impl Fn(f64) -> f64) -> Result<f64> {
    let cut = prof.zeta_cutoff();
    if cut == 0.0 {
        return Ok(0.0);
    }
    if !cut.is_finite() {
        return Err(Error::TruncationFailure {
            s_cap: f64::INFINITY,
            residual: f64::NAN,
        });
    }
    let n0 = ((cut * prof.extent() / PI).ceil() as usize + 8).min(50_000);
    integrate_real(|z| w(z) * prof.fourier(z).norm(), 0.0, cut, n0, &envelope_settings())
}

/// `int_0^cutoff |d/dzeta (zeta^j F(zeta))| dzeta` for `j = 0, 1`, by
/// central differences.
fn derivative_l1(prof: &VelocityProfile, j: i32) -> Result<f64> {
    let cut = prof.zeta_cutoff();
    if cut == 0.0 {
        return Ok(0.0);
    }
    let h = 1e-5;
    let g = |z: f64| prof.fourier(z) * z.powi(j);
    let n0 = ((cut * prof.extent() / PI).ceil() as usize + 8).min(50_000);
    integrate_real(
        |z| ((g(z + h) - g(z - h)) / (2.0 * h)).norm(),
        0.0,
        cut,
        n0,
        &envelope_settings(),
    )
}

/// `sup |f|` bound `int |f(v)| dv`.
fn profile_l1(prof: &VelocityProfile) -> Result<f64> {
    let e = prof.extent();
    if prof.zeta_cutoff() == 0.0 || e == 0.0 {
        return Ok(0.0);
    }
    let n0 = 64;
    integrate_real(|v| prof.eval(v).abs(), -e, e, n0, &envelope_settings())
}

fn envelope_for(kind: PenroseKind, prof: &VelocityProfile, pot: &PairPotential, b: &SearchBox) -> Result<Envelope> {
    let (eta_tail, gamma_tail, tau_tail) = match kind {
        PenroseKind::Quant => {
            let vs = 2.0 * pot.sup_norm();
            let inv = 1.0 / b.eta_max;
            let eta_tail = vs * weighted_abs_integral(prof, |z| inv.min(0.5 * z))?;
            let gamma_tail = vs * profile_l1(prof)? / b.gamma_max;
            let tau_tail = if b.tau_max > 0.0 {
                vs * (0.5 * b.eta_max * weighted_abs_integral(prof, |_| 1.0)? + derivative_l1(prof, 0)?) / b.tau_max
            } else {
                f64::INFINITY
            };
            (eta_tail, gamma_tail, tau_tail)
        }
        PenroseKind::Vb => {
            // reduced variables at eta = 1 cover every eta by homogeneity
            let g = b.gamma_max;
            let gamma_tail = weighted_abs_integral(prof, |s| (-g * s).exp() * s)?;
            let tau_tail = derivative_l1(prof, 1)? / b.tau_max;
            (0.0, gamma_tail, tau_tail)
        }
        PenroseKind::Vp => {
            let sup_vb = weighted_abs_integral(prof, |s| s)?;
            let eta_tail = sup_vb / (1.0 + b.eta_max * b.eta_max);
            let g = b.gamma_max / b.eta_max;
            let gamma_tail = weighted_abs_integral(prof, |s| (-g * s).exp() * s)?;
            let tau_tail = derivative_l1(prof, 1)? * b.eta_max / b.tau_max;
            (eta_tail, gamma_tail, tau_tail)
        }
    };
    let total = eta_tail.max(gamma_tail).max(tau_tail);
    Ok(Envelope {
        eta_tail,
        gamma_tail,
        tau_tail,
        total,
    })
}

struct Evaluator<'a> {
    kind: PenroseKind,
    sources: Vec<&'a VelocityProfile>,
    members: Vec<(usize, usize, f64)>,
    pot: &'a PairPotential,
    opts: &'a PenroseOptions,
}

impl Evaluator<'_> {
    /// Values for every member at each point, parallel over points and
    /// sources; sequential order of the output is fixed.
    fn eval_points(&self, pts: &[(f64, f64, f64)], member_filter: Option<usize>) -> Result<Vec<ScanSample>> {
        let tasks: Vec<(usize, usize)> = (0..pts.len())
            .flat_map(|k| (0..self.sources.len()).map(move |s| (k, s)))
            .filter(|&(_, s)| member_filter.is_none_or(|m| self.members[m].1 == s))
            .collect();
        let values: Vec<C> = tasks
            .par_iter()
            .map(|&(k, s)| {
                let (g, t, e) = pts[k];
                let p = PenrosePoint::new(g, t, e)?;
                penrose(self.kind, &p, self.sources[s], self.pot, self.opts)
            })
            .collect::<Result<_>>()?;
        let mut out = Vec::new();
        let members: Vec<usize> = match member_filter {
            Some(m) => vec![m],
            None => (0..self.members.len()).collect(),
        };
        let nsrc = if member_filter.is_some() { 1 } else { self.sources.len() };
        for (k, &(g, t, e)) in pts.iter().enumerate() {
            for &m in &members {
                let (xi, s, w) = self.members[m];
                let idx = if member_filter.is_some() { k } else { k * nsrc + s };
                let v = w * values[idx];
                out.push(ScanSample {
                    x_index: xi,
                    gamma: g,
                    tau: t,
                    eta: e,
                    value: [v.re, v.im],
                    abs_one_minus_p: (C::new(1.0, 0.0) - v).norm(),
                });
            }
        }
        Ok(out)
    }
}

/// Index of the smallest `abs_one_minus_p`, first in order on ties.
fn argmin(samples: &[ScanSample]) -> usize {
    let mut best = 0;
    for (k, s) in samples.iter().enumerate() {
        if s.abs_one_minus_p < samples[best].abs_one_minus_p {
            best = k;
        }
    }
    best
}

/// Coarse scan of `|1 - P|` over the box and the spatial index, followed by
/// `refine_levels` rounds of local grid bisection around the three best
/// coarse points.
pub fn margin_search(
    family: &ProfileFamily,
    kind: PenroseKind,
    pot: &PairPotential,
    search: &SearchBox,
    refine_levels: usize,
    opts: &PenroseOptions,
) -> Result<PenroseScan> {
    search.validate()?;
    let members = family.members();
    if members.is_empty() {
        return Err(param_err("family", "no profiles to scan"));
    }
    let ev = Evaluator {
        kind,
        sources: family.sources(),
        members,
        pot,
        opts,
    };
    let eta_reduced = kind == PenroseKind::Vb;
    let gammas = geometric(search.gamma_min, search.gamma_max, search.n_gamma);
    let taus = uniform(-search.tau_max, search.tau_max, search.n_tau);
    let mut etas = if eta_reduced {
        vec![1.0]
    } else {
        geometric(search.eta_min, search.eta_max, search.n_eta)
    };
    if !eta_reduced && !family.all_even() {
        let neg: Vec<f64> = etas.iter().rev().map(|e| -e).collect();
        etas = neg.into_iter().chain(etas).collect();
    }
    let mut pts = Vec::with_capacity(gammas.len() * taus.len() * etas.len());
    for &g in &gammas {
        for &t in &taus {
            for &e in &etas {
                pts.push((g, t, e));
            }
        }
    }
    let mut surface = ev.eval_points(&pts, None)?;
    let mut evaluations = surface.len();

    // three best coarse samples at distinct points
    let mut order: Vec<usize> = (0..surface.len()).collect();
    order.sort_by(|&a, &b| surface[a].abs_one_minus_p.total_cmp(&surface[b].abs_one_minus_p).then(a.cmp(&b)));
    let mut seeds: Vec<ScanSample> = Vec::new();
    for &k in &order {
        let s = surface[k];
        if seeds.iter().all(|q| (q.gamma, q.tau, q.eta, q.x_index) != (s.gamma, s.tau, s.eta, s.x_index)) {
            seeds.push(s);
        }
        if seeds.len() == 3 {
            break;
        }
    }

    let dlg = if gammas.len() > 1 {
        (search.gamma_max / search.gamma_min).ln() / (gammas.len() - 1) as f64
    } else {
        0.0
    };
    let dt = if taus.len() > 1 { 2.0 * search.tau_max / (taus.len() - 1) as f64 } else { 0.0 };
    let dle = if !eta_reduced && search.n_eta > 1 {
        (search.eta_max / search.eta_min).ln() / (search.n_eta - 1) as f64
    } else {
        0.0
    };
    for seed in seeds {
        let member = ev.members.iter().position(|m| m.0 == seed.x_index).expect("member exists");
        let mut best = seed;
        for level in 1..=refine_levels {
            let f = 0.5f64.powi(level as i32);
            let mut local = Vec::new();
            for a in -1i32..=1 {
                for b in -1i32..=1 {
                    for c in -1i32..=1 {
                        if (a, b, c) == (0, 0, 0) || (dle == 0.0 && c != 0) {
                            continue;
                        }
                        let g = (best.gamma * (a as f64 * f * dlg).exp()).clamp(search.gamma_min, search.gamma_max);
                        let t = (best.tau + b as f64 * f * dt).clamp(-search.tau_max, search.tau_max);
                        let e_abs = (best.eta.abs() * (c as f64 * f * dle).exp()).clamp(search.eta_min, search.eta_max);
                        let e = if eta_reduced { 1.0 } else { e_abs.copysign(best.eta) };
                        local.push((g, t, e));
                    }
                }
            }
            let vals = ev.eval_points(&local, Some(member))?;
            evaluations += vals.len();
            let k = argmin(&vals);
            if vals[k].abs_one_minus_p < best.abs_one_minus_p {
                best = vals[k];
            }
            surface.extend(vals);
        }
    }

    let best = surface[argmin(&surface)];
    let mut envelope = Envelope {
        eta_tail: 0.0,
        gamma_tail: 0.0,
        tau_tail: 0.0,
        total: 0.0,
    };
    let wmax = family.max_weight();
    for src in ev.sources.iter() {
        let e = envelope_for(kind, src, pot, search)?;
        envelope.eta_tail = envelope.eta_tail.max(wmax * e.eta_tail);
        envelope.gamma_tail = envelope.gamma_tail.max(wmax * e.gamma_tail);
        envelope.tau_tail = envelope.tau_tail.max(wmax * e.tau_tail);
    }
    envelope.total = envelope.eta_tail.max(envelope.gamma_tail).max(envelope.tau_tail);
    let margin = best.abs_one_minus_p;
    let lower_bound = margin.min(1.0 - envelope.total);
    let certified = envelope.total < 1.0 && lower_bound > 0.0;
    let mut note = String::from(
        "certified means positive sampled margin with a tail envelope below one; \
         it is not an interval-arithmetic certificate",
    );
    if eta_reduced {
        note.push_str("; VB is homogeneous of degree zero in (gamma, tau, eta) and is scanned at eta = 1");
    }
    if envelope.total >= 1.0 {
        note.push_str("; tail envelope is not below one, tails are inconclusive");
    }
    Ok(PenroseScan {
        report: PenroseReport {
            kind,
            margin,
            argmin: best,
            envelope,
            lower_bound,
            certified,
            search: *search,
            refine_levels,
            eta_reduced,
            x_points: ev.members.len(),
            evaluations,
            options: *opts,
            note,
        },
        surface,
    })
}

/// `sup_k |P(p_k, f) - P(p_k, g)|`.
pub fn perturbation_gap(
    f: &VelocityProfile,
    g: &VelocityProfile,
    kind: PenroseKind,
    pot: &PairPotential,
    samples: &[PenrosePoint],
    opts: &PenroseOptions,
) -> Result<f64> {
    let gaps: Vec<f64> = samples
        .par_iter()
        .map(|p| Ok((penrose(kind, p, f, pot, opts)? - penrose(kind, p, g, pot, opts)?).norm()))
        .collect::<Result<_>>()?;
    Ok(gaps.into_iter().fold(0.0, f64::max))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HomogeneityRow {
    pub r: f64,
    pub value: [f64; 2],
    pub reference: [f64; 2],
    pub difference: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HomogeneityTable {
    pub direction: [f64; 3],
    pub rows: Vec<HomogeneityRow>,
}

impl HomogeneityTable {
    /// Ratios of consecutive differences.
    pub fn ratios(&self) -> Vec<f64> {
        self.rows.windows(2).map(|w| w[0].difference / w[1].difference).collect()
    }
}

/// Rescaled quantum Penrose function `P_quant(r g, r t, r eta)` compared
/// with its homogeneous limit `V_hat(0) P_VB(g, t, eta)` for a unit
/// direction `(g, t, eta)` and decreasing `r`.
pub fn homogeneity_limit_check(
    prof: &VelocityProfile,
    pot: &PairPotential,
    direction: [f64; 3],
    r_sequence: &[f64],
    opts: &PenroseOptions,
) -> Result<HomogeneityTable> {
    let n = direction.iter().map(|d| d * d).sum::<f64>().sqrt();
    if (n - 1.0).abs() > 1e-9 {
        return Err(param_err("direction", format!("must lie on the unit sphere, |d| = {n}")));
    }
    if r_sequence.windows(2).any(|w| !(w[1] < w[0])) || r_sequence.iter().any(|&r| !(r > 0.0)) {
        return Err(param_err("r_sequence", "must be positive and strictly decreasing"));
    }
    let [g, t, e] = direction;
    let p = PenrosePoint::new(g, t, e)?;
    let reference = pot.vhat(0.0) * penrose_vb(&p, prof, opts)?;
    let e2 = 0.5 * e * e;
    let rows = r_sequence
        .par_iter()
        .map(|&r| {
            let v = pot.vhat(r * e);
            let value = if v == 0.0 {
                C::new(0.0, 0.0)
            } else {
                -2.0 * v * laplace(&p, prof, opts, e2, r * e2, |s| (r * s * e2).sin() / r)?
            };
            Ok(HomogeneityRow {
                r,
                value: [value.re, value.im],
                reference: [reference.re, reference.im],
                difference: (value - reference).norm(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(HomogeneityTable { direction, rows })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SmallDataReport {
    /// Bound of `sup |P_quant|` over all `(gamma, tau, eta)`.
    pub envelope: f64,
    pub certified: bool,
    /// `1 - envelope` when certified.
    pub margin_lower_bound: Option<f64>,
    pub note: String,
}

/// Smallness test `2 ||V_hat||_inf sup_eta int min(1, s eta^2 / 2) |F(s eta)| ds < 1`.
/// In `zeta = s eta` the integrand weight is `min(1/eta, zeta/2)`, which
/// increases as `eta -> 0`, so the supremum is `||V_hat||_inf int zeta |F|`.
pub fn small_data_check(prof: &VelocityProfile, pot: &PairPotential) -> Result<SmallDataReport> {
    let envelope = pot.sup_norm() * weighted_abs_integral(prof, |z| z)?;
    let certified = envelope < 1.0;
    let note = if certified {
        "envelope below one: |1 - P_quant| >= 1 - envelope everywhere".to_string()
    } else {
        "envelope not below one: inconclusive, use margin_search".to_string()
    };
    Ok(SmallDataReport {
        envelope,
        certified,
        margin_lower_bound: certified.then_some(1.0 - envelope),
        note,
    })
}
