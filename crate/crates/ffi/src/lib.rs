//! C ABI over the cavitraj engine.
//!
//! Objects are opaque handles created by the `cavitraj_model_from_*`,
//! `*_solve` and `*_run` calls and released with the matching `*_free`. Every fallible call returns a
//! [`CavitrajStatus`]; on failure `cavitraj_last_error` describes the
//! problem. Array getters copy into caller-owned buffers of at least the
//! length reported by the matching `*_len` function and fail with
//! `BufferTooSmall` otherwise.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;
use std::sync::Arc;

use cavitraj::bdg::{solve_bdg_in, BdgModeSet};
use cavitraj::config::{parse_config, RunConfig};
use cavitraj::model::eval_trap_potential;
use cavitraj::pipeline::{prepare, Prepared};
use cavitraj::presets::preset;
use cavitraj::sde::{run_trajectory, Observers, RecorderConfig, TrajectoryOutput};
use cavitraj::Error;

/// Result of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CavitrajStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Config = 3,
    Numerical = 4,
    BufferTooSmall = 5,
    Panic = 6,
}

/// Run configuration.
pub struct CavitrajModel {
    config: RunConfig,
}

/// Ground state with the model fields built for its grid.
pub struct CavitrajGroundState {
    prepared: Prepared,
    config: RunConfig,
}

/// Bogoliubov modes of a ground state.
pub struct CavitrajModeSet {
    modes: Arc<BdgModeSet>,
}

/// Recorded single trajectory.
pub struct CavitrajTrajectory {
    output: TrajectoryOutput,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> CavitrajStatus {
    match e.exit_code() {
        1 => CavitrajStatus::Config,
        _ => CavitrajStatus::Numerical,
    }
}

fn guard<F>(f: F) -> CavitrajStatus
where
    F: FnOnce() -> Result<(), (CavitrajStatus, String)>,
{
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => CavitrajStatus::Ok,
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic".into());
            CavitrajStatus::Panic
        }
    }
}

fn lib_err(e: Error) -> (CavitrajStatus, String) {
    (status_of(&e), e.to_string())
}

fn null(what: &str) -> (CavitrajStatus, String) {
    (CavitrajStatus::NullPointer, format!("{what} is null"))
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, (CavitrajStatus, String)> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p).to_str().map_err(|_| {
        (
            CavitrajStatus::InvalidArgument,
            format!("{what} is not UTF-8"),
        )
    })
}

unsafe fn copy_out(src: &[f64], out: *mut f64, len: usize) -> Result<(), (CavitrajStatus, String)> {
    if out.is_null() {
        return Err(null("output buffer"));
    }
    if len < src.len() {
        return Err((
            CavitrajStatus::BufferTooSmall,
            format!("buffer holds {len} values, {} needed", src.len()),
        ));
    }
    ptr::copy_nonoverlapping(src.as_ptr(), out, src.len());
    Ok(())
}

unsafe fn put<T>(out: *mut *mut T, value: T) -> Result<(), (CavitrajStatus, String)> {
    if out.is_null() {
        return Err(null("out"));
    }
    *out = Box::into_raw(Box::new(value));
    Ok(())
}

/// Message of the last failed call on this thread, or null. Valid until the
/// next failing call on the same thread.
#[no_mangle]
pub extern "C" fn cavitraj_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn cavitraj_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// # Safety
/// `name` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn cavitraj_model_from_preset(
    name: *const c_char,
    out: *mut *mut CavitrajModel,
) -> CavitrajStatus {
    guard(|| {
        let name = str_arg(name, "name")?;
        let config = preset(name).map_err(lib_err)?;
        put(out, CavitrajModel { config })
    })
}

/// Parses TOML configuration text.
///
/// # Safety
/// `text` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn cavitraj_model_from_toml(
    text: *const c_char,
    out: *mut *mut CavitrajModel,
) -> CavitrajStatus {
    guard(|| {
        let text = str_arg(text, "text")?;
        let config = parse_config(text).map_err(lib_err)?;
        put(out, CavitrajModel { config })
    })
}

/// Replaces the grid.
///
/// # Safety
/// `model` must come from a `cavitraj_model_*` constructor.
#[no_mangle]
pub unsafe extern "C" fn cavitraj_model_set_grid(
    model: *mut CavitrajModel,
    n_points: usize,
    extent: f64,
) -> CavitrajStatus {
    guard(|| {
        let m = model.as_mut().ok_or_else(|| null("model"))?;
        let mut c = m.config.clone();
        c.grid.n_points = n_points;
        c.grid.extent = extent;
        c.validate().map_err(lib_err)?;
        m.config = c;
        Ok(())
    })
}

/// # Safety
/// `model` must be null or come from a `cavitraj_model_*` constructor, and
/// must not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn cavitraj_model_free(model: *mut CavitrajModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Ground state of the model's trap with the pump off.
///
/// # Safety
/// `model` must be a live model handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn cavitraj_ground_state_solve(
    model: *const CavitrajModel,
    out: *mut *mut CavitrajGroundState,
) -> CavitrajStatus {
    guard(|| {
        let m = model.as_ref().ok_or_else(|| null("model"))?;
        let prepared = prepare(&m.config, false).map_err(lib_err)?;
        put(
            out,
            CavitrajGroundState {
                prepared,
                config: m.config.clone(),
            },
        )
    })
}

/// # Safety
/// `gs` must be a live ground-state handle and `mu` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn cavitraj_ground_state_mu(
    gs: *const CavitrajGroundState,
    mu: *mut f64,
) -> CavitrajStatus {
    guard(|| {
        let g = gs.as_ref().ok_or_else(|| null("ground state"))?;
        let mu = mu.as_mut().ok_or_else(|| null("mu"))?;
        *mu = g.prepared.ground.mu;
        Ok(())
    })
}

/// Number of grid points, or 0 for a null handle.
///
/// # Safety
/// `gs` must be null or a live ground-state handle.
#[no_mangle]
pub unsafe extern "C" fn cavitraj_ground_state_len(gs: *const CavitrajGroundState) -> usize {
    gs.as_ref().map_or(0, |g| g.prepared.grid.n_points())
}

/// Copies the real unit-norm profile ψ0.
///
/// # Safety
/// `gs` must be a live handle and `out` point to `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn cavitraj_ground_state_profile(
    gs: *const CavitrajGroundState,
    out: *mut f64,
    len: usize,
) -> CavitrajStatus {
    guard(|| {
        let g = gs.as_ref().ok_or_else(|| null("ground state"))?;
        let re: Vec<f64> = g
            .prepared
            .ground
            .psi0
            .values()
            .iter()
            .map(|v| v.re)
            .collect();
        copy_out(&re, out, len)
    })
}

/// Copies the grid positions.
///
/// # Safety
/// `gs` must be a live handle and `out` point to `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn cavitraj_ground_state_positions(
    gs: *const CavitrajGroundState,
    out: *mut f64,
    len: usize,
) -> CavitrajStatus {
    guard(|| {
        let g = gs.as_ref().ok_or_else(|| null("ground state"))?;
        copy_out(g.prepared.grid.positions(), out, len)
    })
}

/// # Safety
/// `gs` must be null or a live handle, not used afterwards.
#[no_mangle]
pub unsafe extern "C" fn cavitraj_ground_state_free(gs: *mut CavitrajGroundState) {
    if !gs.is_null() {
        drop(Box::from_raw(gs));
    }
}

/// Lowest `n_modes` Bogoliubov modes of `gs`.
///
/// # Safety
/// `gs` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn cavitraj_modes_solve(
    gs: *const CavitrajGroundState,
    n_modes: usize,
    out: *mut *mut CavitrajModeSet,
) -> CavitrajStatus {
    guard(|| {
        let g = gs.as_ref().ok_or_else(|| null("ground state"))?;
        let p = &g.config.params;
        let potential = eval_trap_potential(&p.trap, &g.prepared.grid);
        let modes = solve_bdg_in(&g.prepared.ground, &potential, p.nu, n_modes).map_err(lib_err)?;
        put(
            out,
            CavitrajModeSet {
                modes: Arc::new(modes),
            },
        )
    })
}

/// Number of modes, or 0 for a null handle.
///
/// # Safety
/// `modes` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn cavitraj_modes_len(modes: *const CavitrajModeSet) -> usize {
    modes.as_ref().map_or(0, |m| m.modes.len())
}

/// Copies the mode energies (ascending, in ħω).
///
/// # Safety
/// `modes` must be a live handle and `out` point to `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn cavitraj_modes_energies(
    modes: *const CavitrajModeSet,
    out: *mut f64,
    len: usize,
) -> CavitrajStatus {
    guard(|| {
        let m = modes.as_ref().ok_or_else(|| null("mode set"))?;
        copy_out(&m.modes.energies(), out, len)
    })
}

/// # Safety
/// `modes` must be null or a live handle, not used afterwards.
#[no_mangle]
pub unsafe extern "C" fn cavitraj_modes_free(modes: *mut CavitrajModeSet) {
    if !modes.is_null() {
        drop(Box::from_raw(modes));
    }
}

/// Runs one trajectory from √N ψ0 to `t_final`, recording every `stride`
/// steps. `modes` may be null; when given, mode populations are recorded.
///
/// # Safety
/// `gs` must be a live handle, `modes` null or live, `out` valid.
#[no_mangle]
pub unsafe extern "C" fn cavitraj_trajectory_run(
    gs: *const CavitrajGroundState,
    modes: *const CavitrajModeSet,
    seed: u64,
    t_final: f64,
    stride: usize,
    out: *mut *mut CavitrajTrajectory,
) -> CavitrajStatus {
    guard(|| {
        let g = gs.as_ref().ok_or_else(|| null("ground state"))?;
        let initial = g.prepared.initial_state(&g.config).map_err(lib_err)?;
        let recorder = RecorderConfig {
            stride,
            ..RecorderConfig::default()
        };
        let observers = Observers {
            sites: g.prepared.layout.clone(),
            modes: modes.as_ref().map(|m| m.modes.clone()),
            wigner_sampled: false,
        };
        let output = run_trajectory(
            &g.prepared.fields,
            &g.config.scheme,
            &initial,
            t_final,
            &recorder,
            &observers,
            seed,
        )
        .map_err(lib_err)?;
        if let Some((t, why)) = &output.failure {
            return Err((
                CavitrajStatus::Numerical,
                format!("trajectory failed at t = {t}: {why}"),
            ));
        }
        put(out, CavitrajTrajectory { output })
    })
}

/// Number of records, or 0 for a null handle.
///
/// # Safety
/// `traj` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn cavitraj_trajectory_len(traj: *const CavitrajTrajectory) -> usize {
    traj.as_ref().map_or(0, |t| t.output.records.len())
}

/// Recorded series selected by `which`.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CavitrajSeries {
    Time = 0,
    MeasurementRate = 1,
    Norm = 2,
    Q1 = 3,
    DeltaQ = 4,
    /// Odd/even imbalance; NaN outside a lattice.
    Imbalance = 5,
}

/// Copies one recorded series.
///
/// # Safety
/// `traj` must be a live handle and `out` point to `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn cavitraj_trajectory_series(
    traj: *const CavitrajTrajectory,
    which: CavitrajSeries,
    out: *mut f64,
    len: usize,
) -> CavitrajStatus {
    guard(|| {
        let t = traj.as_ref().ok_or_else(|| null("trajectory"))?;
        let v: Vec<f64> = t
            .output
            .records
            .iter()
            .map(|r| match which {
                CavitrajSeries::Time => r.t,
                CavitrajSeries::MeasurementRate => r.rate,
                CavitrajSeries::Norm => r.norm,
                CavitrajSeries::Q1 => r.moments.q1,
                CavitrajSeries::DeltaQ => r.moments.delta_q,
                CavitrajSeries::Imbalance => r.imbalance.unwrap_or(f64::NAN),
            })
            .collect();
        copy_out(&v, out, len)
    })
}

/// Copies |ψ|² at the final time.
///
/// # Safety
/// `traj` must be a live handle and `out` point to `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn cavitraj_trajectory_final_density(
    traj: *const CavitrajTrajectory,
    out: *mut f64,
    len: usize,
) -> CavitrajStatus {
    guard(|| {
        let t = traj.as_ref().ok_or_else(|| null("trajectory"))?;
        copy_out(&t.output.final_state.psi.density(), out, len)
    })
}

/// # Safety
/// `traj` must be null or a live handle, not used afterwards.
#[no_mangle]
pub unsafe extern "C" fn cavitraj_trajectory_free(traj: *mut CavitrajTrajectory) {
    if !traj.is_null() {
        drop(Box::from_raw(traj));
    }
}
