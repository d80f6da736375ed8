//! Strang splitting for the Wigner equation and its Vlasov-Benney limit.
//!
//! Both equations share the transport step and differ only in the kick:
//! the Wigner kick multiplies `F_v f` by `exp(-i (dt/eps) a_rho)` and the
//! Vlasov kick by `exp(i xi_v dt c_V d_x rho)`. Every sub-step is a
//! unit-modulus Fourier multiplier, so mass, `L^2` norm and (for kicks) the
//! density are preserved to rounding.

mod checkpoint;

pub use checkpoint::{read_checkpoint, write_checkpoint, Checkpoint};

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::boperator::{interaction_spectrum, shift_difference_symbol};
use crate::error::{param_err, Error, Result};
use crate::norms::{norm, NormSpec};
use crate::potential::{Epsilon, PairPotential};
use crate::spectral::{density, spectral_derivative, DensityField, PhaseField, Representation};

/// Which equation a run integrates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Model {
    Wigner(Epsilon),
    Vlasov,
}

impl Model {
    /// `eps` for the Wigner model, `None` for the classical one.
    pub fn eps(self) -> Option<Epsilon> {
        match self {
            Model::Wigner(e) => Some(e),
            Model::Vlasov => None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SimConfig {
    pub model: Model,
    pub dt: f64,
    pub t_end: f64,
    pub potential: PairPotential,
    /// Record diagnostics every this many steps (and at the final time).
    pub diag_every: usize,
    /// Keep a full snapshot every this many steps; `0` keeps only the endpoints.
    pub snapshot_every: usize,
    pub tail_tol: f64,
    /// Weighted norms added to every diagnostic record.
    pub norms: Vec<NormSpec>,
}

impl SimConfig {
    pub fn new(model: Model, dt: f64, t_end: f64, potential: PairPotential) -> Result<Self> {
        if !(dt.is_finite() && dt > 0.0) {
            return Err(param_err("dt", format!("{dt} must be positive")));
        }
        if !(t_end.is_finite() && t_end >= 0.0) {
            return Err(param_err("t_end", format!("{t_end} must be nonnegative")));
        }
        Ok(Self {
            model,
            dt,
            t_end,
            potential,
            diag_every: 1,
            snapshot_every: 0,
            tail_tol: 1e-8,
            norms: Vec::new(),
        })
    }

    /// Step sizes covering `[0, t_end]`; the last one is shortened if
    /// `t_end` is not a multiple of `dt`.
    pub fn steps(&self) -> Vec<f64> {
        let n = (self.t_end / self.dt - 1e-9).ceil().max(0.0) as usize;
        (0..n)
            .map(|k| {
                if k + 1 == n {
                    self.t_end - (n - 1) as f64 * self.dt
                } else {
                    self.dt
                }
            })
            .collect()
    }
}

fn to_repr(f: &PhaseField, target: Representation) -> PhaseField {
    if f.repr() == target {
        f.clone()
    } else {
        f.to_representation(target)
    }
}

fn restore(mut g: PhaseField, original: Representation) -> PhaseField {
    if g.repr() != original {
        g = g.to_representation(original);
    }
    g
}

/// Exact free transport: `F_x f` multiplied by `exp(-i dt v xi_x)`.
pub fn step_transport(f: &PhaseField, dt: f64) -> PhaseField {
    let original = f.repr();
    let mut g = to_repr(f, Representation::FourierX);
    let grid = *g.grid();
    let nv = grid.nv();
    let ks = grid.gx.symbol_frequencies();
    let vs = grid.gv.points();
    g.data_mut()
        .par_chunks_mut(nv)
        .zip(ks.par_iter())
        .for_each(|(row, &k)| {
            for (c, &v) in row.iter_mut().zip(&vs) {
                *c *= Complex64::from_polar(1.0, -dt * v * k);
            }
        });
    restore(g, original)
}

/// Multiply `F_v f` by `exp(i phase[i * nv + j])`.
fn apply_velocity_phase(f: &PhaseField, phase: &[f64]) -> PhaseField {
    let original = f.repr();
    let mut g = to_repr(f, Representation::FourierV);
    g.data_mut()
        .par_iter_mut()
        .zip(phase.par_iter())
        .for_each(|(c, &p)| *c *= Complex64::from_polar(1.0, p));
    restore(g, original)
}

/// `a_rho(x, xi_v) = V_rho(x - eps xi_v/2) - V_rho(x + eps xi_v/2)` on the grid.
pub fn kick_symbol(rho: &DensityField, f: &PhaseField, eps: Epsilon, pot: &PairPotential) -> Vec<f64> {
    let e = eps.value();
    let g = f.grid();
    shift_difference_symbol(&interaction_spectrum(rho, e, pot), &g.gx, &g.gv, e)
}

fn check_density_grid(rho: &DensityField, f: &PhaseField) -> Result<()> {
    if !rho.grid().same_as(&f.grid().gx) {
        return Err(Error::GridMismatch("density grid differs from the phase-space x grid".into()));
    }
    Ok(())
}

/// Exact solution of `d_t f + B[rho_frozen, f] = 0` over `dt`.
pub fn step_kick_wigner(
    f: &PhaseField,
    rho_frozen: &DensityField,
    dt: f64,
    eps: Epsilon,
    pot: &PairPotential,
) -> Result<PhaseField> {
    check_density_grid(rho_frozen, f)?;
    let a = kick_symbol(rho_frozen, f, eps, pot);
    let s = -dt / eps.value();
    let phase: Vec<f64> = a.iter().map(|&ai| s * ai).collect();
    Ok(apply_velocity_phase(f, &phase))
}

/// Exact velocity shift `f(x, v + dt c_V d_x rho(x))`.
pub fn step_kick_vlasov(
    f: &PhaseField,
    rho_frozen: &DensityField,
    dt: f64,
    pot: &PairPotential,
) -> Result<PhaseField> {
    check_density_grid(rho_frozen, f)?;
    let g = f.grid();
    let nv = g.nv();
    let drho = spectral_derivative(rho_frozen.data(), rho_frozen.grid());
    let xis = g.gv.symbol_frequencies();
    let cv = pot.c_v();
    let mut phase = vec![0.0; g.size()];
    for (row, &d) in phase.chunks_mut(nv).zip(&drho) {
        for (p, &xi) in row.iter_mut().zip(&xis) {
            *p = xi * dt * cv * d;
        }
    }
    Ok(apply_velocity_phase(f, &phase))
}

fn kick(f: &PhaseField, dt: f64, cfg: &SimConfig) -> Result<(PhaseField, f64)> {
    let phys = to_repr(f, Representation::Physical);
    let rho = density(&phys)?;
    match cfg.model {
        Model::Wigner(eps) => {
            let a = kick_symbol(&rho, f, eps, &cfg.potential);
            let s = -dt / eps.value();
            let amax = a.iter().fold(0.0f64, |m, x| m.max(x.abs()));
            let phase: Vec<f64> = a.iter().map(|&ai| s * ai).collect();
            Ok((apply_velocity_phase(f, &phase), amax * dt.abs() / eps.value()))
        }
        Model::Vlasov => {
            let dmax = spectral_derivative(rho.data(), rho.grid())
                .iter()
                .fold(0.0f64, |m, x| m.max(x.abs()));
            let out = step_kick_vlasov(f, &rho, dt, &cfg.potential)?;
            let phase = dmax * dt.abs() * cfg.potential.c_v().abs() * f.grid().gv.largest_frequency();
            Ok((out, phase))
        }
    }
}

/// Per-step bookkeeping returned by [`strang_step`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StepReport {
    /// Largest kick phase per full step; accuracy needs this below `pi`.
    pub max_phase: f64,
    /// Set when the velocity tails exceed `tail_tol`.
    pub tail_violation: Option<f64>,
}

/// Half kick, full transport, half kick; `rho` is recomputed before each kick.
pub fn strang_step(f: &PhaseField, dt: f64, cfg: &SimConfig) -> Result<(PhaseField, StepReport)> {
    let (g, p1) = kick(f, 0.5 * dt, cfg)?;
    let g = step_transport(&g, dt);
    let (g, p2) = kick(&g, 0.5 * dt, cfg)?;
    let phys = to_repr(&g, Representation::Physical);
    let tail_violation = phys.check_tail(cfg.tail_tol);
    if let Some(r) = tail_violation {
        log::warn!("velocity tail ratio {r:.3e} exceeds tail_tol {:.1e}", cfg.tail_tol);
    }
    Ok((
        g,
        StepReport {
            max_phase: p1 + p2,
            tail_violation,
        },
    ))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Diagnostic {
    pub t: f64,
    pub mass: f64,
    pub l2: f64,
    pub max_abs: f64,
    pub tail_ratio: f64,
    pub max_phase: f64,
    /// `(label, value)` for every configured norm.
    pub norms: Vec<(String, f64)>,
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub snapshots: Vec<(f64, PhaseField)>,
    pub densities: Vec<(f64, DensityField)>,
    pub diagnostics: Vec<Diagnostic>,
    pub tail_warnings: usize,
}

impl Trajectory {
    pub fn final_field(&self) -> &PhaseField {
        &self.snapshots.last().expect("trajectory holds the initial field").1
    }

    pub fn final_time(&self) -> f64 {
        self.snapshots.last().map(|s| s.0).unwrap_or(0.0)
    }
}

fn diagnose(f: &PhaseField, t: f64, max_phase: f64, cfg: &SimConfig) -> Result<Diagnostic> {
    let eps_for_norms = cfg.model.eps().unwrap_or(Epsilon::new(1.0)?);
    let norms = cfg
        .norms
        .iter()
        .map(|s| norm(f, *s, eps_for_norms).map(|v| (s.label(), v)))
        .collect::<Result<Vec<_>>>()?;
    Ok(Diagnostic {
        t,
        mass: f.mass(),
        l2: f.l2_norm(),
        max_abs: f.max_abs(),
        tail_ratio: f.tail_ratio(),
        max_phase,
        norms,
    })
}

/// Integrate from `f0` to `cfg.t_end`. Aborts with [`Error::NonFinite`] as
/// soon as a non-finite sample appears.
pub fn evolve(f0: &PhaseField, cfg: &SimConfig) -> Result<Trajectory> {
    let mut f = f0.to_physical();
    if !f.is_real_valued() {
        return Err(param_err("f0", "initial data must be real-valued"));
    }
    if !f.is_finite() {
        return Err(Error::NonFinite { t: 0.0, what: "initial data".into() });
    }
    let steps = cfg.steps();
    let mut traj = Trajectory {
        snapshots: vec![(0.0, f.clone())],
        densities: vec![(0.0, density(&f)?)],
        diagnostics: vec![diagnose(&f, 0.0, 0.0, cfg)?],
        tail_warnings: 0,
    };
    let mut t = 0.0;
    let n = steps.len();
    for (k, &dt) in steps.iter().enumerate() {
        let (g, report) = strang_step(&f, dt, cfg)?;
        f = g;
        t = if k + 1 == n { cfg.t_end } else { (k + 1) as f64 * cfg.dt };
        if !f.is_finite() {
            return Err(Error::NonFinite { t, what: "phase-space field".into() });
        }
        if report.tail_violation.is_some() {
            traj.tail_warnings += 1;
        }
        let last = k + 1 == n;
        let every = cfg.diag_every.max(1);
        if last || (k + 1) % every == 0 {
            traj.diagnostics.push(diagnose(&f, t, report.max_phase, cfg)?);
            traj.densities.push((t, density(&f)?));
        }
        if !last && cfg.snapshot_every > 0 && (k + 1) % cfg.snapshot_every == 0 {
            traj.snapshots.push((t, f.clone()));
        }
    }
    if n > 0 {
        traj.snapshots.push((t, f));
    }
    Ok(traj)
}

/// Observed order from three solutions at `dt`, `dt/2`, `dt/4`:
/// `log2(|f_dt - f_dt/2| / |f_dt/2 - f_dt/4|)`.
pub fn richardson_order(coarse: &PhaseField, mid: &PhaseField, fine: &PhaseField) -> Result<f64> {
    let d1 = coarse.difference(mid)?.l2_norm();
    let d2 = mid.difference(fine)?.l2_norm();
    Ok((d1 / d2).log2())
}
