use std::ffi::{CStr, CString};
use std::path::PathBuf;
use std::process::Command;
use std::ptr;

use wigner_vlasov_ffi::*;

fn last_error() -> String {
    let p = wv_last_error_message();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

struct Handles {
    grid: *mut WvGrid,
    pot: *mut WvPotential,
}

impl Handles {
    fn new(nx: usize, nv: usize, strength: f64) -> Self {
        let mut grid = ptr::null_mut();
        let mut pot = ptr::null_mut();
        unsafe {
            assert_eq!(wv_grid_new(nx, 2.0 * std::f64::consts::PI, 0.0, nv, 20.0, &mut grid), WvStatus::Ok);
            assert_eq!(wv_potential_new(WvPotentialKind::Contact, strength, 0.0, &mut pot), WvStatus::Ok);
        }
        Self { grid, pot }
    }
}

impl Drop for Handles {
    fn drop(&mut self) {
        unsafe {
            wv_grid_free(self.grid);
            wv_potential_free(self.pot);
        }
    }
}

#[test]
fn grid_and_field_round_trip() {
    let h = Handles::new(8, 16, 1.0);
    let (mut nx, mut nv) = (0, 0);
    unsafe {
        assert_eq!(wv_grid_shape(h.grid, &mut nx, &mut nv), WvStatus::Ok);
        assert_eq!((nx, nv), (8, 16));
        let samples: Vec<f64> = (0..nx * nv).map(|k| (k as f64 * 0.37).sin()).collect();
        let mut f = ptr::null_mut();
        assert_eq!(wv_field_from_samples(h.grid, samples.as_ptr(), samples.len(), &mut f), WvStatus::Ok);
        let mut back = vec![0.0; nx * nv];
        assert_eq!(wv_field_samples(f, back.as_mut_ptr(), back.len()), WvStatus::Ok);
        assert_eq!(back, samples);
        let mut rho = vec![0.0; nx];
        assert_eq!(wv_field_density(f, rho.as_mut_ptr(), nx), WvStatus::Ok);
        let dv = 20.0 / nv as f64;
        for i in 0..nx {
            let direct: f64 = samples[i * nv..(i + 1) * nv].iter().sum::<f64>() * dv;
            assert!((rho[i] - direct).abs() < 1e-12);
        }
        wv_field_free(f);
    }
}

#[test]
fn stepping_conserves_mass_and_l2() {
    let h = Handles::new(32, 64, 1.0);
    unsafe {
        let mut f = ptr::null_mut();
        assert_eq!(wv_field_modulated_maxwellian(h.grid, 0.2, 1.0, &mut f), WvStatus::Ok);
        let (mut m0, mut l0, mut m1, mut l1) = (0.0, 0.0, 0.0, 0.0);
        wv_field_mass(f, &mut m0);
        wv_field_l2_norm(f, &mut l0);
        for eps in [0.1, 0.0] {
            let mut s = ptr::null_mut();
            assert_eq!(wv_solver_new(h.pot, eps, 0.01, &mut s), WvStatus::Ok);
            assert_eq!(wv_solver_step(s, f, 25, ptr::null_mut()), WvStatus::Ok);
            wv_solver_free(s);
        }
        wv_field_mass(f, &mut m1);
        wv_field_l2_norm(f, &mut l1);
        assert!(((m1 - m0) / m0).abs() < 1e-12);
        assert!(((l1 - l0) / l0).abs() < 1e-12);
        wv_field_free(f);
    }
}

#[test]
fn errors_set_status_and_message() {
    let h = Handles::new(8, 16, 1.0);
    unsafe {
        let mut g = ptr::null_mut();
        assert_eq!(wv_grid_new(0, 1.0, 0.0, 8, 1.0, &mut g), WvStatus::InvalidGrid);
        assert!(g.is_null());
        assert!(!last_error().is_empty());
        wv_clear_last_error();
        assert!(wv_last_error_message().is_null());

        let mut s = ptr::null_mut();
        assert_eq!(wv_solver_new(h.pot, 1.5, 0.01, &mut s), WvStatus::InvalidArgument);
        assert!(last_error().contains("eps"));
        assert_eq!(wv_solver_new(h.pot, 0.1, -1.0, &mut s), WvStatus::InvalidArgument);
        assert_eq!(wv_solver_new(ptr::null(), 0.1, 0.01, &mut s), WvStatus::NullPointer);

        let mut f = ptr::null_mut();
        let samples = [0.0; 3];
        assert_eq!(wv_field_from_samples(h.grid, samples.as_ptr(), 3, &mut f), WvStatus::BufferSize);
        let mut mass = 0.0;
        assert_eq!(wv_field_mass(ptr::null(), &mut mass), WvStatus::NullPointer);

        let mut pot = ptr::null_mut();
        assert_eq!(wv_potential_new(WvPotentialKind::Lorentzian, 1.0, 0.0, &mut pot), WvStatus::InvalidArgument);
        let bad = CString::new("/nonexistent/config.toml").unwrap();
        let out = CString::new("/tmp").unwrap();
        assert_eq!(wv_run_experiment(bad.as_ptr(), out.as_ptr(), 1), WvStatus::Config);
        assert!(last_error().contains("nonexistent"));
    }
}

#[test]
fn penrose_symmetries_and_margin() {
    let h = Handles::new(8, 16, 1.0);
    unsafe {
        let mut prof = ptr::null_mut();
        assert_eq!(wv_profile_new(WvProfileKind::Maxwellian, 1.0, 0.0, &mut prof), WvStatus::Ok);
        let (mut a, mut b, mut c, mut d) = (0.0, 0.0, 0.0, 0.0);
        for kind in [WvPenroseKind::Quant, WvPenroseKind::Vb, WvPenroseKind::Vp] {
            assert_eq!(wv_penrose(kind, 0.3, 0.7, 1.2, prof, h.pot, &mut a, &mut b), WvStatus::Ok);
            assert_eq!(wv_penrose(kind, 0.3, -0.7, 1.2, prof, h.pot, &mut c, &mut d), WvStatus::Ok);
            assert!((a - c).abs() < 1e-12 && (b + d).abs() < 1e-12);
        }
        assert_eq!(
            wv_penrose(WvPenroseKind::Vb, -1.0, 0.0, 1.0, prof, h.pot, &mut a, &mut b),
            WvStatus::InvalidArgument
        );
        let mut m = WvMargin::default();
        assert_eq!(wv_penrose_margin(WvPenroseKind::Quant, prof, h.pot, 1, &mut m), WvStatus::Ok);
        assert!(m.certified && m.margin > 0.0 && m.lower_bound > 0.0);
        wv_profile_free(prof);
    }
}

#[test]
fn run_experiment_writes_summary() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("penrose.toml");
    std::fs::write(
        &cfg,
        "kind = \"penrose\"\n[potential]\ntype = \"contact\"\nstrength = 1.0\n[penrose]\nkind = \"vb\"\nrefine_levels = 1\nprofile = { type = \"maxwellian\", sigma = 1.0 }\n",
    )
    .unwrap();
    let c = CString::new(cfg.to_str().unwrap()).unwrap();
    let out = CString::new(dir.path().join("out").to_str().unwrap()).unwrap();
    assert_eq!(unsafe { wv_run_experiment(c.as_ptr(), out.as_ptr(), 1) }, WvStatus::Ok);
    assert!(dir.path().join("out/report.json").exists());
    assert!(dir.path().join("out/summary.json").exists());
}

#[test]
fn version_is_nul_terminated() {
    let v = unsafe { CStr::from_ptr(wv_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}

#[test]
fn header_declares_every_export() {
    let crate_dir = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    let header = std::fs::read_to_string(crate_dir.join("include/wigner_vlasov.h")).unwrap();
    let source = std::fs::read_to_string(crate_dir.join("src/lib.rs")).unwrap();
    let exports: Vec<&str> = source
        .lines()
        .filter_map(|l| l.split("extern \"C\" fn ").nth(1))
        .map(|rest| rest.split('(').next().unwrap())
        .collect();
    assert!(exports.len() >= 20);
    for name in exports {
        assert!(name.starts_with("wv_"), "{name}");
        assert!(header.contains(&format!(" {name}(")) || header.contains(&format!("*{name}(")), "{name}");
    }
    assert!(header.contains("typedef struct WvGrid WvGrid;"));
    assert!(header.contains("WV_STATUS_OK = 0"));
}

/// Compiles `tests/c/smoke.c` against the static library and runs it.
#[test]
fn c_program_links_and_runs() {
    if Command::new("cc").arg("--version").output().is_err() {
        eprintln!("cc not available; skipping");
        return;
    }
    let crate_dir = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    let exe = std::env::current_exe().unwrap();
    let profile_dir = exe.parent().unwrap().parent().unwrap();
    let lib = profile_dir.join("libwigner_vlasov_ffi.a");
    assert!(lib.exists(), "{} missing", lib.display());
    let dir = tempfile::tempdir().unwrap();
    let bin = dir.path().join("smoke");
    let status = Command::new("cc")
        .arg("-std=c99")
        .arg("-Wall")
        .arg("-Werror")
        .arg("-I")
        .arg(crate_dir.join("include"))
        .arg(crate_dir.join("tests/c/smoke.c"))
        .arg(&lib)
        .args(["-lm", "-lpthread", "-ldl", "-o"])
        .arg(&bin)
        .status()
        .unwrap();
    assert!(status.success());
    let out = Command::new(&bin).output().unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stdout).contains("nx=32 nv=64"));
}
