//! C interface to `wigner_vlasov`.
//!
//! Objects are opaque handles created by `wv_*_new` style constructors and
//! released with the matching `wv_*_free`. Every fallible call returns a
//! [`WvStatus`]; on failure a description is available from
//! [`wv_last_error_message`] on the same thread until the next failing call.
//!
//! Phase-space samples are laid out row-major with `x` as the slow index:
//! sample `(i, j)` lives at `i * nv + j`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};

use wigner_vlasov::evolution::{strang_step, write_checkpoint, Model, SimConfig};
use wigner_vlasov::harness::{self, ExperimentSpec, RunContext};
use wigner_vlasov::penrose::{
    margin_search, penrose, PenroseKind, PenroseOptions, PenrosePoint, ProfileFamily, SearchBox,
};
use wigner_vlasov::profiles::{PhaseProfile, VelocityProfile};
use wigner_vlasov::spectral::{density, PhaseField, PhaseGrid};
use wigner_vlasov::{Epsilon, Error, PairPotential};

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WvStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    InvalidGrid = 3,
    GridMismatch = 4,
    BufferSize = 5,
    Numerical = 6,
    Io = 7,
    Config = 8,
    Panic = 9,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WvPotentialKind {
    /// `V_hat = strength`.
    Contact = 0,
    /// `V_hat(xi) = strength / (1 + xi^2)`.
    ScreenedCoulomb = 1,
    /// `V_hat(xi) = strength exp(-width |xi|)`.
    Lorentzian = 2,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WvProfileKind {
    /// Parameters: `sigma`, unused.
    Maxwellian = 0,
    /// Parameters: `u`, `sigma`.
    TwoStream = 1,
    /// Parameters: `center`, `width`.
    Bump = 2,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WvPenroseKind {
    Quant = 0,
    Vb = 1,
    Vp = 2,
}

impl From<WvPenroseKind> for PenroseKind {
    fn from(k: WvPenroseKind) -> Self {
        match k {
            WvPenroseKind::Quant => PenroseKind::Quant,
            WvPenroseKind::Vb => PenroseKind::Vb,
            WvPenroseKind::Vp => PenroseKind::Vp,
        }
    }
}

/// Outcome of [`wv_penrose_margin`].
#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct WvMargin {
    /// Smallest sampled `|1 - P|`.
    pub margin: f64,
    pub gamma: f64,
    pub tau: f64,
    pub eta: f64,
    /// Bound on `|P|` outside the sampled box.
    pub envelope: f64,
    pub lower_bound: f64,
    pub certified: bool,
}

pub struct WvGrid(PhaseGrid);

pub struct WvField(PhaseField);

pub struct WvPotential(PairPotential);

pub struct WvProfile(VelocityProfile);

/// A Strang splitting integrator for one model and time step.
pub struct WvSolver(SimConfig);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(message: String) {
    let c = CString::new(message.replace('\0', " ")).expect("no interior nul");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

struct Failure(WvStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = match e {
            Error::InvalidGrid(_) => WvStatus::InvalidGrid,
            Error::GridMismatch(_) => WvStatus::GridMismatch,
            Error::Parameter { .. } | Error::Representation { .. } => WvStatus::InvalidArgument,
            Error::Io(_) | Error::Checkpoint(_) => WvStatus::Io,
            _ => WvStatus::Numerical,
        };
        Failure(status, e.to_string())
    }
}

fn invalid(message: impl Into<String>) -> Failure {
    Failure(WvStatus::InvalidArgument, message.into())
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> WvStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => WvStatus::Ok,
        Ok(Err(Failure(status, message))) => {
            set_last_error(message);
            status
        }
        Err(_) => {
            set_last_error("internal panic".into());
            WvStatus::Panic
        }
    }
}

unsafe fn borrow<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    p.as_ref()
        .ok_or_else(|| Failure(WvStatus::NullPointer, format!("{what} is null")))
}

unsafe fn borrow_mut<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, Failure> {
    p.as_mut()
        .ok_or_else(|| Failure(WvStatus::NullPointer, format!("{what} is null")))
}

unsafe fn store<T>(out: *mut *mut T, value: T) -> Result<(), Failure> {
    let slot = borrow_mut(out, "out")?;
    *slot = Box::into_raw(Box::new(value));
    Ok(())
}

unsafe fn write_out<T>(out: *mut T, value: T) -> Result<(), Failure> {
    *borrow_mut(out, "out")? = value;
    Ok(())
}

unsafe fn path_arg(p: *const c_char, what: &str) -> Result<PathBuf, Failure> {
    if p.is_null() {
        return Err(Failure(WvStatus::NullPointer, format!("{what} is null")));
    }
    let s = CStr::from_ptr(p)
        .to_str()
        .map_err(|_| invalid(format!("{what} is not UTF-8")))?;
    Ok(PathBuf::from(s))
}

unsafe fn slice_out<'a>(p: *mut f64, len: usize, needed: usize) -> Result<&'a mut [f64], Failure> {
    if p.is_null() {
        return Err(Failure(WvStatus::NullPointer, "buffer is null".into()));
    }
    if len != needed {
        return Err(Failure(WvStatus::BufferSize, format!("buffer holds {len} values, {needed} required")));
    }
    Ok(std::slice::from_raw_parts_mut(p, len))
}

unsafe fn release<T>(p: *mut T) {
    if !p.is_null() {
        drop(Box::from_raw(p));
    }
}

/// Message of the last failing call on this thread, or NULL. The pointer
/// stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn wv_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(std::ptr::null(), |c| c.as_ptr()))
}

#[no_mangle]
pub extern "C" fn wv_clear_last_error() {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
}

/// Static NUL-terminated version string.
#[no_mangle]
pub extern "C" fn wv_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// `nx` points on `[x0, x0 + lx)` times `nv` points on `[-lv/2, lv/2)`.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn wv_grid_new(nx: usize, lx: f64, x0: f64, nv: usize, lv: f64, out: *mut *mut WvGrid) -> WvStatus {
    guard(|| store(out, WvGrid(PhaseGrid::build(nx, lx, x0, nv, lv)?)))
}

/// # Safety
/// `grid` must be NULL or a handle from [`wv_grid_new`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn wv_grid_free(grid: *mut WvGrid) {
    release(grid)
}

/// # Safety
/// All pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn wv_grid_shape(grid: *const WvGrid, nx: *mut usize, nv: *mut usize) -> WvStatus {
    guard(|| {
        let g = &borrow(grid, "grid")?.0;
        write_out(nx, g.nx())?;
        write_out(nv, g.nv())
    })
}

/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn wv_potential_new(
    kind: WvPotentialKind,
    strength: f64,
    width: f64,
    out: *mut *mut WvPotential,
) -> WvStatus {
    guard(|| {
        if !strength.is_finite() {
            return Err(invalid("strength must be finite"));
        }
        let pot = match kind {
            WvPotentialKind::Contact => PairPotential::Contact { strength },
            WvPotentialKind::ScreenedCoulomb => PairPotential::ScreenedCoulomb { strength },
            WvPotentialKind::Lorentzian => {
                if !(width.is_finite() && width > 0.0) {
                    return Err(invalid("width must be positive"));
                }
                PairPotential::Lorentzian { strength, width }
            }
        };
        store(out, WvPotential(pot))
    })
}

/// # Safety
/// `pot` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn wv_potential_free(pot: *mut WvPotential) {
    release(pot)
}

/// Real field from `nx * nv` samples.
///
/// # Safety
/// `samples` must point to `len` readable doubles.
#[no_mangle]
pub unsafe extern "C" fn wv_field_from_samples(
    grid: *const WvGrid,
    samples: *const f64,
    len: usize,
    out: *mut *mut WvField,
) -> WvStatus {
    guard(|| {
        let g = borrow(grid, "grid")?.0;
        if samples.is_null() {
            return Err(Failure(WvStatus::NullPointer, "samples is null".into()));
        }
        if len != g.size() {
            return Err(Failure(WvStatus::BufferSize, format!("{len} samples, {} required", g.size())));
        }
        let data = std::slice::from_raw_parts(samples, len);
        store(out, WvField(PhaseField::from_real_samples(g, data)?))
    })
}

/// `(1 + alpha cos(k x)) M(v)` with the unit Maxwellian `M`.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn wv_field_modulated_maxwellian(
    grid: *const WvGrid,
    alpha: f64,
    k: f64,
    out: *mut *mut WvField,
) -> WvStatus {
    guard(|| {
        let g = borrow(grid, "grid")?.0;
        store(out, WvField(PhaseProfile::modulated_maxwellian(alpha, k)?.sample(&g)?))
    })
}

/// # Safety
/// `field` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn wv_field_free(field: *mut WvField) {
    release(field)
}

/// Real parts of the physical samples into `out[0..nx*nv]`.
///
/// # Safety
/// `out` must point to `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn wv_field_samples(field: *const WvField, out: *mut f64, len: usize) -> WvStatus {
    guard(|| {
        let f = borrow(field, "field")?.0.to_physical();
        slice_out(out, len, f.grid().size())?.copy_from_slice(&f.real_parts());
        Ok(())
    })
}

/// Density `rho(x) = int f dv` into `out[0..nx]`.
///
/// # Safety
/// `out` must point to `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn wv_field_density(field: *const WvField, out: *mut f64, len: usize) -> WvStatus {
    guard(|| {
        let rho = density(&borrow(field, "field")?.0)?;
        slice_out(out, len, rho.data().len())?.copy_from_slice(rho.data());
        Ok(())
    })
}

/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn wv_field_mass(field: *const WvField, out: *mut f64) -> WvStatus {
    guard(|| write_out(out, borrow(field, "field")?.0.mass()))
}

/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn wv_field_l2_norm(field: *const WvField, out: *mut f64) -> WvStatus {
    guard(|| write_out(out, borrow(field, "field")?.0.l2_norm()))
}

/// Binary checkpoint; `eps <= 0` records a classical field.
///
/// # Safety
/// `path` must be a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn wv_field_write_checkpoint(
    field: *const WvField,
    path: *const c_char,
    eps: f64,
    t: f64,
) -> WvStatus {
    guard(|| {
        let f = &borrow(field, "field")?.0;
        let p = path_arg(path, "path")?;
        write_checkpoint(&p, f, (eps > 0.0).then_some(eps), t)?;
        Ok(())
    })
}

/// Wigner integrator for `eps` in `(0, 1]`, Vlasov-Benney for `eps == 0`.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn wv_solver_new(
    pot: *const WvPotential,
    eps: f64,
    dt: f64,
    out: *mut *mut WvSolver,
) -> WvStatus {
    guard(|| {
        let pot = borrow(pot, "potential")?.0.clone();
        let model = if eps == 0.0 {
            Model::Vlasov
        } else {
            Model::Wigner(Epsilon::new(eps)?)
        };
        store(out, WvSolver(SimConfig::new(model, dt, dt, pot)?))
    })
}

/// # Safety
/// `solver` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn wv_solver_free(solver: *mut WvSolver) {
    release(solver)
}

/// Advances `field` in place by `steps` Strang steps; `max_phase` (may be
/// NULL) receives the largest kick phase seen.
///
/// # Safety
/// `solver` and `field` must be live handles.
#[no_mangle]
pub unsafe extern "C" fn wv_solver_step(
    solver: *const WvSolver,
    field: *mut WvField,
    steps: usize,
    max_phase: *mut f64,
) -> WvStatus {
    guard(|| {
        let cfg = &borrow(solver, "solver")?.0;
        let f = borrow_mut(field, "field")?;
        let mut g = f.0.clone();
        let mut phase = 0.0f64;
        for _ in 0..steps {
            let (next, report) = strang_step(&g, cfg.dt, cfg)?;
            phase = phase.max(report.max_phase);
            g = next;
        }
        f.0 = g.to_physical();
        if !max_phase.is_null() {
            *max_phase = phase;
        }
        Ok(())
    })
}

/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn wv_profile_new(kind: WvProfileKind, a: f64, b: f64, out: *mut *mut WvProfile) -> WvStatus {
    guard(|| {
        let prof = match kind {
            WvProfileKind::Maxwellian => VelocityProfile::maxwellian(a)?,
            WvProfileKind::TwoStream => VelocityProfile::two_stream(a, b)?,
            WvProfileKind::Bump => VelocityProfile::bump(a, b)?,
        };
        store(out, WvProfile(prof))
    })
}

/// # Safety
/// `prof` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn wv_profile_free(prof: *mut WvProfile) {
    release(prof)
}

/// Penrose function at `(gamma, tau, eta)`; `gamma == 0` takes the limit
/// `gamma -> 0+`.
///
/// # Safety
/// Handles must be live, `re` and `im` valid.
#[no_mangle]
pub unsafe extern "C" fn wv_penrose(
    kind: WvPenroseKind,
    gamma: f64,
    tau: f64,
    eta: f64,
    prof: *const WvProfile,
    pot: *const WvPotential,
    re: *mut f64,
    im: *mut f64,
) -> WvStatus {
    guard(|| {
        let p = if gamma == 0.0 {
            PenrosePoint::limit(tau, eta)?
        } else {
            PenrosePoint::new(gamma, tau, eta)?
        };
        let value = penrose(
            kind.into(),
            &p,
            &borrow(prof, "profile")?.0,
            &borrow(pot, "potential")?.0,
            &PenroseOptions::default(),
        )?;
        write_out(re, value.re)?;
        write_out(im, value.im)
    })
}

/// Margin search over the default box with `refine_levels` refinements.
///
/// # Safety
/// Handles must be live, `out` valid.
#[no_mangle]
pub unsafe extern "C" fn wv_penrose_margin(
    kind: WvPenroseKind,
    prof: *const WvProfile,
    pot: *const WvPotential,
    refine_levels: usize,
    out: *mut WvMargin,
) -> WvStatus {
    guard(|| {
        let family = ProfileFamily::Single(borrow(prof, "profile")?.0.clone());
        let scan = margin_search(
            &family,
            kind.into(),
            &borrow(pot, "potential")?.0,
            &SearchBox::default(),
            refine_levels,
            &PenroseOptions::default(),
        )?;
        let r = scan.report;
        write_out(
            out,
            WvMargin {
                margin: r.margin,
                gamma: r.argmin.gamma,
                tau: r.argmin.tau,
                eta: r.argmin.eta,
                envelope: r.envelope.total,
                lower_bound: r.lower_bound,
                certified: r.certified,
            },
        )
    })
}

fn run_experiment(config: &Path, out: PathBuf, workers: usize) -> Result<(), Failure> {
    let spec = ExperimentSpec::load(config).map_err(|e| Failure(WvStatus::Config, format!("{e:#}")))?;
    spec.validate().map_err(|e| Failure(WvStatus::Config, e.to_string()))?;
    match harness::run(&spec, &RunContext { out, workers }) {
        Ok(_) => Ok(()),
        Err(e) => {
            let message = format!("{e:#}");
            let status = match e.downcast::<Error>() {
                Ok(err) => Failure::from(err).0,
                Err(_) => WvStatus::Io,
            };
            Err(Failure(status, message))
        }
    }
}

/// Runs the experiment described by a TOML file, writing into `out_dir`;
/// `workers == 0` uses every core.
///
/// # Safety
/// Both paths must be NUL-terminated strings.
#[no_mangle]
pub unsafe extern "C" fn wv_run_experiment(config: *const c_char, out_dir: *const c_char, workers: usize) -> WvStatus {
    guard(|| {
        let config = path_arg(config, "config")?;
        let out = path_arg(out_dir, "out_dir")?;
        run_experiment(&config, out, workers)
    })
}
