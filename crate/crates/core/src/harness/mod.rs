//! Experiment orchestration: evolution runs, epsilon sweeps, Penrose scans,
//! eikonal lattices and the invariant suite, with files written under one
//! output directory.
//!
//! Layout of an output directory:
//!
//! ```text
//! summary.json            kind, resolved config, results
//! <member>/timeseries.csv t,quantity,value
//! <member>/final.wvl      binary checkpoint
//! <member>/snap_<k>.wvl   snapshots when snapshot_every > 0
//! report.json, surface.csv   (penrose)
//! lattice.csv                (eikonal)
//! check.json                 (check)
//! ```

pub mod config;

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::Context;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;

use crate::boperator::apply_b;
use crate::eikonal::{
    check_lattice, empirical_window, free_phase, jacobian_growth, phase, Hamiltonian, VrhoHistory,
};
use crate::error::{param_err, Error, Result};
use crate::evolution::{evolve, step_kick_wigner, strang_step, write_checkpoint, Model, SimConfig, Trajectory};
use crate::norms::{norm, NormFamily, NormSpec};
use crate::penrose::{margin_search, penrose, write_surface_csv, PenroseKind, PenrosePoint, ProfileFamily};
use crate::potential::{Epsilon, PairPotential};
use crate::profiles::VelocityProfile;
use crate::spectral::{density, PhaseField, PhaseGrid};

pub use config::{
    EikonalSpec, ExperimentKind, ExperimentSpec, GridSpec, PenroseSpec, PhaseProfileSpec, PotentialSpec, TimeSpec,
    TolProfile, VelocityProfileSpec, VrhoSpec,
};

/// Distances between two runs on matching grids and snapshot times.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Comparison {
    /// `sup_t ||f_a - f_b||_{L^2}` over the common snapshots.
    pub sup_l2: f64,
    pub final_l2: f64,
    /// `||rho_a - rho_b||_{L^2_t L^2_x}` by the trapezoid rule over the
    /// recorded densities.
    pub density_l2t: f64,
    /// Requested weighted norms of the final difference.
    pub weighted_final: Vec<(String, f64)>,
}

fn times_match(a: &[f64], b: &[f64]) -> bool {
    a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() <= 1e-12 * x.abs().max(1.0))
}

/// Symmetric distances between two trajectories.
pub fn compare(a: &Trajectory, b: &Trajectory, norms: &[NormSpec], eps: Epsilon) -> Result<Comparison> {
    let ta: Vec<f64> = a.snapshots.iter().map(|s| s.0).collect();
    let tb: Vec<f64> = b.snapshots.iter().map(|s| s.0).collect();
    if !times_match(&ta, &tb) {
        return Err(param_err("compare", "snapshot times differ"));
    }
    let da: Vec<f64> = a.densities.iter().map(|s| s.0).collect();
    let db: Vec<f64> = b.densities.iter().map(|s| s.0).collect();
    if !times_match(&da, &db) {
        return Err(param_err("compare", "density sample times differ"));
    }
    let mut sup_l2 = 0.0f64;
    let mut final_l2 = 0.0;
    for ((_, fa), (_, fb)) in a.snapshots.iter().zip(&b.snapshots) {
        final_l2 = fa.difference(fb)?.l2_norm();
        sup_l2 = sup_l2.max(final_l2);
    }
    let sq: Vec<f64> = a
        .densities
        .iter()
        .zip(&b.densities)
        .map(|((_, ra), (_, rb))| ra.difference(rb).map(|d| d.l2_norm().powi(2)))
        .collect::<Result<_>>()?;
    let mut integral = 0.0;
    for k in 1..sq.len() {
        integral += 0.5 * (da[k] - da[k - 1]) * (sq[k] + sq[k - 1]);
    }
    let diff = a.final_field().difference(b.final_field())?;
    let weighted_final = norms
        .iter()
        .map(|&spec| Ok((spec.label(), norm(&diff, spec, eps)?)))
        .collect::<Result<_>>()?;
    Ok(Comparison {
        sup_l2,
        final_l2,
        density_l2t: integral.sqrt(),
        weighted_final,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceEntry {
    pub eps: f64,
    pub distances: Comparison,
}

/// Distances of each Wigner run to the Vlasov-Benney run, with the
/// observed rates `log(d_i / d_{i+1}) / log(eps_i / eps_{i+1})`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceRecord {
    pub entries: Vec<ConvergenceEntry>,
    pub sup_l2_ratios: Vec<f64>,
    pub density_ratios: Vec<f64>,
    pub sup_l2_rates: Vec<f64>,
    pub density_rates: Vec<f64>,
    pub strictly_decreasing: bool,
}

impl ConvergenceRecord {
    pub fn new(entries: Vec<ConvergenceEntry>) -> Self {
        let ratios = |f: fn(&Comparison) -> f64| -> Vec<f64> {
            entries.windows(2).map(|w| f(&w[0].distances) / f(&w[1].distances)).collect()
        };
        let sup_l2_ratios = ratios(|c| c.sup_l2);
        let density_ratios = ratios(|c| c.density_l2t);
        let rates = |r: &[f64]| -> Vec<f64> {
            r.iter()
                .zip(entries.windows(2))
                .map(|(q, w)| q.ln() / (w[0].eps / w[1].eps).ln())
                .collect()
        };
        let strictly_decreasing = sup_l2_ratios.iter().chain(&density_ratios).all(|&q| q > 1.0);
        Self {
            sup_l2_rates: rates(&sup_l2_ratios),
            density_rates: rates(&density_ratios),
            sup_l2_ratios,
            density_ratios,
            strictly_decreasing,
            entries,
        }
    }
}

/// Output directory, worker count and tolerance preset of one invocation.
#[derive(Debug, Clone)]
pub struct RunContext {
    pub out: PathBuf,
    /// `0` uses rayon's default pool.
    pub workers: usize,
}

fn quote(s: &str) -> String {
    if s.contains(',') || s.contains('"') {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// `t,quantity,value` rows for every diagnostic record.
pub fn write_timeseries(path: &Path, traj: &Trajectory) -> std::io::Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "t,quantity,value")?;
    for d in &traj.diagnostics {
        for (q, v) in [
            ("mass", d.mass),
            ("l2", d.l2),
            ("max_abs", d.max_abs),
            ("tail_ratio", d.tail_ratio),
            ("max_phase", d.max_phase),
        ] {
            writeln!(w, "{},{},{}", d.t, q, v)?;
        }
        for (label, v) in &d.norms {
            writeln!(w, "{},{},{}", d.t, quote(label), v)?;
        }
    }
    for (t, rho) in &traj.densities {
        writeln!(w, "{},density_l2,{}", t, rho.l2_norm())?;
    }
    w.flush()
}

fn write_json(path: &Path, value: &impl Serialize) -> anyhow::Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    fs::write(path, text + "\n").with_context(|| format!("writing {}", path.display()))
}

fn sim_config(spec: &ExperimentSpec, model: Model) -> Result<SimConfig> {
    let t = spec.time()?;
    let mut cfg = SimConfig::new(model, t.dt, t.t_end, spec.potential.build())?;
    cfg.diag_every = t.diag_every.max(1);
    cfg.snapshot_every = t.snapshot_every;
    cfg.tail_tol = spec.tol_profile.tail_tol();
    cfg.norms = spec.norms.clone();
    Ok(cfg)
}

fn initial_field(spec: &ExperimentSpec) -> Result<PhaseField> {
    spec.phase_profile()?.sample(&spec.grid()?)
}

fn member_name(model: Model) -> String {
    match model {
        Model::Wigner(e) => format!("eps_{}", e.value()),
        Model::Vlasov => "vlasov".into(),
    }
}

#[derive(Debug, Clone, Serialize)]
struct MemberSummary {
    member: String,
    eps: Option<f64>,
    steps: usize,
    final_time: f64,
    mass_drift: f64,
    l2_drift: f64,
    tail_warnings: usize,
}

/// One evolution written to `dir`.
fn run_member(f0: &PhaseField, cfg: &SimConfig, dir: &Path) -> anyhow::Result<(Trajectory, MemberSummary)> {
    fs::create_dir_all(dir)?;
    let traj = evolve(f0, cfg)?;
    write_timeseries(&dir.join("timeseries.csv"), &traj)?;
    let eps = cfg.model.eps().map(|e| e.value());
    for (k, (t, f)) in traj.snapshots.iter().enumerate() {
        if k + 1 == traj.snapshots.len() {
            write_checkpoint(&dir.join("final.wvl"), f, eps, *t)?;
        } else if cfg.snapshot_every > 0 {
            write_checkpoint(&dir.join(format!("snap_{k:04}.wvl")), f, eps, *t)?;
        }
    }
    let d0 = &traj.diagnostics[0];
    let d1 = traj.diagnostics.last().expect("diagnostics");
    let summary = MemberSummary {
        member: member_name(cfg.model),
        eps,
        steps: cfg.steps().len(),
        final_time: traj.final_time(),
        mass_drift: ((d1.mass - d0.mass) / d0.mass).abs(),
        l2_drift: ((d1.l2 - d0.l2) / d0.l2).abs(),
        tail_warnings: traj.tail_warnings,
    };
    Ok((traj, summary))
}

fn in_pool<T: Send>(workers: usize, f: impl FnOnce() -> T + Send) -> anyhow::Result<T> {
    if workers == 0 {
        return Ok(f());
    }
    let pool = rayon::ThreadPoolBuilder::new().num_threads(workers).build()?;
    Ok(pool.install(f))
}

fn run_members(spec: &ExperimentSpec, models: Vec<Model>, ctx: &RunContext) -> anyhow::Result<Vec<(Trajectory, MemberSummary)>> {
    let f0 = initial_field(spec)?;
    let cfgs: Vec<SimConfig> = models.into_iter().map(|m| sim_config(spec, m)).collect::<Result<_>>()?;
    in_pool(ctx.workers, || {
        cfgs.par_iter()
            .map(|cfg| run_member(&f0, cfg, &ctx.out.join(member_name(cfg.model))))
            .collect::<anyhow::Result<Vec<_>>>()
    })?
}

fn summary(spec: &ExperimentSpec, result: serde_json::Value) -> serde_json::Value {
    json!({ "kind": spec.kind, "config": spec, "result": result })
}

/// Runs an experiment and writes its artifacts; returns the summary that
/// was written to `summary.json`.
pub fn run(spec: &ExperimentSpec, ctx: &RunContext) -> anyhow::Result<serde_json::Value> {
    spec.validate()?;
    fs::create_dir_all(&ctx.out).with_context(|| format!("creating {}", ctx.out.display()))?;
    let result = match spec.kind {
        ExperimentKind::EvolveWigner => {
            let models = spec.epsilons()?.into_iter().map(Model::Wigner).collect();
            let members: Vec<MemberSummary> = run_members(spec, models, ctx)?.into_iter().map(|m| m.1).collect();
            json!({ "members": members })
        }
        ExperimentKind::EvolveVlasov => {
            let members: Vec<MemberSummary> =
                run_members(spec, vec![Model::Vlasov], ctx)?.into_iter().map(|m| m.1).collect();
            json!({ "members": members })
        }
        ExperimentKind::Converge => {
            let (record, members) = run_converge(spec, ctx)?;
            write_convergence_csv(&ctx.out.join("convergence.csv"), &record)?;
            json!({ "members": members, "convergence": record })
        }
        ExperimentKind::Penrose => run_penrose(spec, ctx)?,
        ExperimentKind::Eikonal => run_eikonal(spec, ctx)?,
    };
    let s = summary(spec, result);
    write_json(&ctx.out.join("summary.json"), &s)?;
    Ok(s)
}

fn run_converge(spec: &ExperimentSpec, ctx: &RunContext) -> anyhow::Result<(ConvergenceRecord, Vec<serde_json::Value>)> {
    let eps = spec.epsilons()?;
    let mut spec = spec.clone();
    if let Some(t) = spec.time.as_mut() {
        if t.snapshot_every == 0 {
            t.snapshot_every = t.diag_every.max(1);
        }
    }
    let mut models = vec![Model::Vlasov];
    models.extend(eps.iter().map(|&e| Model::Wigner(e)));
    let runs = run_members(&spec, models, ctx)?;
    let (reference, rest) = runs.split_first().expect("reference run");
    let entries = rest
        .iter()
        .zip(&eps)
        .map(|((traj, _), &e)| {
            Ok(ConvergenceEntry {
                eps: e.value(),
                distances: compare(traj, &reference.0, &spec.norms, e)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let members = runs.iter().map(|r| serde_json::to_value(&r.1)).collect::<serde_json::Result<_>>()?;
    Ok((ConvergenceRecord::new(entries), members))
}

/// `eps,quantity,value` rows of a convergence record.
pub fn write_convergence_csv(path: &Path, record: &ConvergenceRecord) -> std::io::Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "eps,quantity,value")?;
    for e in &record.entries {
        let d = &e.distances;
        writeln!(w, "{},sup_l2,{}", e.eps, d.sup_l2)?;
        writeln!(w, "{},final_l2,{}", e.eps, d.final_l2)?;
        writeln!(w, "{},density_l2t,{}", e.eps, d.density_l2t)?;
        for (label, v) in &d.weighted_final {
            writeln!(w, "{},{},{}", e.eps, quote(label), v)?;
        }
    }
    w.flush()
}

fn penrose_family(spec: &ExperimentSpec, p: &PenroseSpec) -> Result<ProfileFamily> {
    match &p.profile {
        Some(v) => Ok(ProfileFamily::Single(v.build()?)),
        None => {
            let grid = spec.grid()?;
            Ok(ProfileFamily::PerX(spec.phase_profile()?.velocity_profiles(&grid.gx)?))
        }
    }
}

fn run_penrose(spec: &ExperimentSpec, ctx: &RunContext) -> anyhow::Result<serde_json::Value> {
    let p = spec.penrose.as_ref().expect("validated");
    let family = penrose_family(spec, p)?;
    let opts = spec.tol_profile.penrose_options();
    let pot = spec.potential.build();
    let scan = in_pool(ctx.workers, || margin_search(&family, p.kind, &pot, &p.search, p.refine_levels, &opts))??;
    write_json(&ctx.out.join("report.json"), &scan.report)?;
    let mut w = BufWriter::new(File::create(ctx.out.join("surface.csv"))?);
    write_surface_csv(&mut w, &scan.surface)?;
    w.flush()?;
    Ok(serde_json::to_value(&scan.report)?)
}

fn eikonal_hamiltonian(spec: &ExperimentSpec, e: &EikonalSpec) -> Result<Hamiltonian> {
    match e.source {
        VrhoSpec::Cosine { amplitude, mode, growth } => Ok(Hamiltonian::analytic(
            move |t, x| amplitude * (1.0 + growth * t) * (mode * x).cos(),
            move |t, x| -amplitude * mode * (1.0 + growth * t) * (mode * x).sin(),
        )),
        VrhoSpec::Vlasov | VrhoSpec::Wigner { .. } => {
            let (model, eps) = match e.source {
                VrhoSpec::Wigner { eps } => (Model::Wigner(Epsilon::new(eps)?), Some(eps)),
                _ => (Model::Vlasov, None),
            };
            let mut cfg = sim_config(spec, model)?;
            cfg.norms.clear();
            let traj = evolve(&initial_field(spec)?, &cfg)?;
            let hist = VrhoHistory::from_densities(&traj.densities, &cfg.potential, eps)?;
            Ok(Hamiltonian::from_history(hist))
        }
    }
}

fn run_eikonal(spec: &ExperimentSpec, ctx: &RunContext) -> anyhow::Result<serde_json::Value> {
    let e = spec.eikonal.as_ref().expect("validated");
    let ham = eikonal_hamiltonian(spec, e)?;
    let opts = spec.tol_profile.eikonal_options();
    let (report, window, growth) = in_pool(ctx.workers, || -> Result<_> {
        let report = check_lattice(&ham, &e.lattice, e.s, e.t, &opts)?;
        let window = empirical_window(&ham, &e.lattice, e.s, e.window_max, e.window_samples, &opts)?;
        let first = report.rows[0];
        let ws: Vec<f64> = (1..=4).map(|k| 0.25 * k as f64 * (e.t - e.s)).collect();
        let growth = jacobian_growth(&ham, [first.x, first.v], [first.xi_x, first.xi_v], e.s, &ws, &opts)?;
        Ok((report, window, growth))
    })??;
    let mut w = BufWriter::new(File::create(ctx.out.join("lattice.csv"))?);
    report.write_csv(&mut w)?;
    w.flush()?;
    Ok(json!({
        "s": report.s,
        "t": report.t,
        "points": report.rows.len(),
        "max_inversion_residual": report.max_inversion_residual,
        "max_hj_residual": report.max_hj_residual,
        "max_gradient_mismatch": report.max_gradient_mismatch,
        "max_hessian_deviation": report.max_hessian_deviation,
        "max_jacobian_deviation": report.max_jacobian_deviation,
        "min_phase_slack": report.min_phase_slack,
        "min_dz_slack": report.min_dz_slack,
        "empirical_window": window,
        "jacobian_growth": growth.0,
        "jacobian_slope": growth.1,
    }))
}

/// One invariant of the `check` suite.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckResult {
    pub name: String,
    pub value: f64,
    pub tolerance: f64,
    pub pass: bool,
}

fn check(name: &str, value: f64, tolerance: f64) -> CheckResult {
    CheckResult {
        name: name.into(),
        value,
        tolerance,
        pass: value <= tolerance,
    }
}

/// Invariant suite on the configured grid and profile (a 32 x 64
/// modulated Maxwellian when absent), with Penrose symmetries at seeded
/// random points.
pub fn run_checks(spec: Option<&ExperimentSpec>) -> Result<Vec<CheckResult>> {
    let default = ExperimentSpec {
        grid: Some(GridSpec {
            nx: 32,
            lx: 2.0 * std::f64::consts::PI,
            x0: 0.0,
            nv: 64,
            lv: 20.0,
        }),
        ..ExperimentSpec::example_converge()
    };
    let spec = match spec {
        Some(s) if s.grid.is_some() && s.profile.is_some() => s,
        _ => &default,
    };
    let grid: PhaseGrid = spec.grid()?;
    let f = spec.phase_profile()?.sample(&grid)?;
    let pot: PairPotential = spec.potential.build();
    let eps = Epsilon::new(spec.eps.first().copied().unwrap_or(0.1))?;
    let rho = density(&f)?;
    let mut out = Vec::new();

    let b = apply_b(&rho, &f, eps, &pot)?;
    out.push(check("b_skew_symmetry", b.inner(&f)?.norm() / f.l2_norm().powi(2), 1e-11));
    out.push(check("b_density_neutrality", density(&b)?.max_abs(), 1e-12));

    let k = step_kick_wigner(&f, &rho, 0.01, eps, &pot)?;
    out.push(check("kick_mass", ((k.mass() - f.mass()) / f.mass()).abs(), 1e-12));
    out.push(check("kick_l2", ((k.l2_norm() - f.l2_norm()) / f.l2_norm()).abs(), 1e-12));
    out.push(check("kick_density", density(&k)?.max_abs_difference(&rho), 1e-12));

    let cfg = SimConfig::new(Model::Wigner(eps), 0.01, 0.01, pot.clone())?;
    let (g, _) = strang_step(&f, 0.01, &cfg)?;
    let (back, _) = strang_step(&g, -0.01, &cfg)?;
    out.push(check("strang_reversibility", back.max_abs_difference(&f)? / f.max_abs(), 1e-10));

    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let prof = VelocityProfile::two_stream(1.5, 1.0)?;
    let opts = spec.tol_profile.penrose_options();
    let mut conj = 0.0f64;
    let mut even = 0.0f64;
    for _ in 0..8 {
        let (gm, t, e) = (rng.gen_range(0.01..2.0), rng.gen_range(-3.0..3.0), rng.gen_range(0.1..3.0));
        for kind in [PenroseKind::Quant, PenroseKind::Vb, PenroseKind::Vp] {
            let p = penrose(kind, &PenrosePoint::new(gm, t, e)?, &prof, &pot, &opts)?;
            let c = penrose(kind, &PenrosePoint::new(gm, -t, e)?, &prof, &pot, &opts)?;
            let n = penrose(kind, &PenrosePoint::new(gm, t, -e)?, &prof, &pot, &opts)?;
            conj = conj.max((c - p.conj()).norm());
            even = even.max((n - p).norm());
        }
    }
    out.push(check("penrose_conjugation", conj, 1e-12));
    out.push(check("penrose_even_eta", even, 1e-12));

    let eo = spec.tol_profile.eikonal_options();
    let mut free = 0.0f64;
    for _ in 0..8 {
        let z = [rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0)];
        let xi = [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)];
        let phi = phase(&Hamiltonian::free(), z, xi, 0.0, 0.3, &eo)?;
        free = free.max((phi - free_phase(z, xi, 0.0, 0.3)).abs());
    }
    out.push(check("free_phase", free, 1e-12));

    let l2 = norm(&f, NormSpec::new(NormFamily::HmrStandard, 0, 0), eps)?;
    out.push(check("norm_m0_r0_is_l2", (l2 - f.l2_norm()).abs() / l2, 1e-12));
    Ok(out)
}

/// Runs the invariant suite and writes `check.json`.
pub fn run_check_suite(spec: Option<&ExperimentSpec>, ctx: &RunContext) -> anyhow::Result<(bool, serde_json::Value)> {
    fs::create_dir_all(&ctx.out)?;
    let results = in_pool(ctx.workers, || run_checks(spec))??;
    let ok = results.iter().all(|r| r.pass);
    let value = json!({ "kind": "check", "pass": ok, "checks": results });
    write_json(&ctx.out.join("check.json"), &value)?;
    Ok((ok, value))
}

/// Machine-readable error record.
pub fn error_json(err: &anyhow::Error) -> serde_json::Value {
    let kind = match err.downcast_ref::<Error>() {
        Some(Error::InvalidGrid(_)) => "invalid_grid",
        Some(Error::GridMismatch(_)) => "grid_mismatch",
        Some(Error::Parameter { .. }) => "parameter",
        Some(Error::Representation { .. }) => "representation",
        Some(Error::TruncationFailure { .. }) => "truncation_failure",
        Some(Error::Quadrature { .. }) => "quadrature",
        Some(Error::NonFinite { .. }) => "non_finite",
        Some(Error::Underresolved { .. }) => "underresolved",
        Some(Error::WindowTooLarge { .. }) => "window_too_large",
        Some(Error::HistoryRange { .. }) => "history_range",
        Some(Error::Checkpoint(_)) => "checkpoint",
        Some(Error::Io(_)) => "io",
        None if err.downcast_ref::<toml::de::Error>().is_some() => "config_parse",
        None if err.downcast_ref::<std::io::Error>().is_some() => "io",
        None => "other",
    };
    json!({ "error": { "kind": kind, "message": format!("{err:#}") } })
}
