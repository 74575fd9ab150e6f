//! C interface to `soesn`.
//!
//! Objects cross the boundary as opaque handles owned by the caller and
//! released with the matching `*_free` function. Every fallible call returns
//! a [`SoesnStatus`]; on failure, [`soesn_last_error`] describes the most
//! recent error on the calling thread. Strings returned through out-params
//! are NUL-terminated UTF-8 JSON and must be released with
//! [`soesn_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use soesn::numerics::{spectral_radius, RealMatrix};
use soesn::oscillation::{classify_trajectory, OscillationReport};
use soesn::readout::{predict, train_ridge, ReadoutModel};
use soesn::reservoir::{init_state, Reservoir, StateTrajectory};
use soesn::topology::TopologySpec;
use soesn::Error;

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SoesnStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidInput = 2,
    Dimension = 3,
    Numeric = 4,
    UndefinedMetric = 5,
    Io = 6,
    Panic = 7,
}

/// A reservoir with its weights, leak rates and current state.
pub struct SoesnReservoir(Reservoir);

/// Recorded states, `steps x n`, row-major.
pub struct SoesnTrajectory(StateTrajectory);

/// A trained linear readout.
pub struct SoesnReadout(ReadoutModel);

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

struct Failure(SoesnStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = match &e {
            Error::Input(_) | Error::Config(_) | Error::Json(_) => SoesnStatus::InvalidInput,
            Error::Dimension(_) => SoesnStatus::Dimension,
            Error::UndefinedMetric(_) => SoesnStatus::UndefinedMetric,
            Error::Io(_) => SoesnStatus::Io,
            _ if e.is_numeric() => SoesnStatus::Numeric,
            _ => SoesnStatus::InvalidInput,
        };
        Failure(status, e.to_string())
    }
}

impl From<serde_json::Error> for Failure {
    fn from(e: serde_json::Error) -> Self {
        Failure(SoesnStatus::InvalidInput, e.to_string())
    }
}

fn set_last_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|slot| *slot.borrow_mut() = c);
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> SoesnStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_last_error("");
            SoesnStatus::Ok
        }
        Ok(Err(Failure(status, msg))) => {
            set_last_error(&msg);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_last_error(&format!("panic: {msg}"));
            SoesnStatus::Panic
        }
    }
}

fn null(what: &str) -> Failure {
    Failure(SoesnStatus::NullPointer, format!("{what} is null"))
}

unsafe fn borrow<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn borrow_mut<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, Failure> {
    p.as_mut().ok_or_else(|| null(what))
}

unsafe fn slice<'a>(p: *const f64, len: usize, what: &str) -> Result<&'a [f64], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn copy_out(src: &[f64], dst: *mut f64, capacity: usize, what: &str) -> Result<(), Failure> {
    if capacity < src.len() {
        return Err(Failure(
            SoesnStatus::Dimension,
            format!("{what} needs room for {} values, got {capacity}", src.len()),
        ));
    }
    if !src.is_empty() {
        if dst.is_null() {
            return Err(null(what));
        }
        ptr::copy_nonoverlapping(src.as_ptr(), dst, src.len());
    }
    Ok(())
}

unsafe fn put<T>(out: *mut *mut T, value: T) -> Result<(), Failure> {
    if out.is_null() {
        return Err(null("output handle"));
    }
    *out = Box::into_raw(Box::new(value));
    Ok(())
}

unsafe fn put_json(out: *mut *mut c_char, json: String) -> Result<(), Failure> {
    if out.is_null() {
        return Err(null("output string"));
    }
    *out = CString::new(json).map_err(|e| Failure(SoesnStatus::InvalidInput, e.to_string()))?.into_raw();
    Ok(())
}

/// Message for the last failed call on this thread; empty after a success.
/// Valid until the next call on the same thread.
#[no_mangle]
pub extern "C" fn soesn_last_error() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ptr())
}

/// Library version, a static string.
#[no_mangle]
pub extern "C" fn soesn_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// # Safety
/// `s` must be null or a string returned by this library.
#[no_mangle]
pub unsafe extern "C" fn soesn_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Largest eigenvalue modulus of the row-major `n x n` matrix `weights`.
///
/// # Safety
/// `weights` must point to `n * n` doubles and `out` to one.
#[no_mangle]
pub unsafe extern "C" fn soesn_spectral_radius(n: usize, weights: *const f64, out: *mut f64) -> SoesnStatus {
    guard(|| {
        let w = RealMatrix::new(n, n, slice(weights, n * n, "weights")?.to_vec())?;
        *borrow_mut(out, "out")? = spectral_radius(&w)?;
        Ok(())
    })
}

/// Reservoir from caller-supplied row-major weights, per-unit leak rates and
/// initial state.
///
/// # Safety
/// `weights` must point to `n * n` doubles, `leak` and `state` to `n` each.
#[no_mangle]
pub unsafe extern "C" fn soesn_reservoir_from_weights(
    n: usize,
    weights: *const f64,
    leak: *const f64,
    state: *const f64,
    out: *mut *mut SoesnReservoir,
) -> SoesnStatus {
    guard(|| {
        let w = RealMatrix::new(n, n, slice(weights, n * n, "weights")?.to_vec())?;
        let r = Reservoir::new(w, slice(leak, n, "leak")?.to_vec(), slice(state, n, "state")?.to_vec())?;
        put(out, SoesnReservoir(r))
    })
}

/// Reservoir built from a JSON topology description (fields `kind`, `n`,
/// `sub_count`, `seed`, ...), scaled to `rho`, with scalar `leak` and a
/// random initial state drawn from `state_seed`.
///
/// # Safety
/// `topology_json` must be a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn soesn_reservoir_from_topology(
    topology_json: *const c_char,
    rho: f64,
    leak: f64,
    state_seed: u64,
    out: *mut *mut SoesnReservoir,
) -> SoesnStatus {
    guard(|| {
        if topology_json.is_null() {
            return Err(null("topology_json"));
        }
        let text =
            CStr::from_ptr(topology_json).to_str().map_err(|e| Failure(SoesnStatus::InvalidInput, e.to_string()))?;
        let spec: TopologySpec = serde_json::from_str(text)?;
        spec.validate()?;
        let w = spec.build(rho)?;
        let r = Reservoir::with_scalar_leak(w, leak, init_state(spec.n, state_seed)?)?;
        put(out, SoesnReservoir(r))
    })
}

/// # Safety
/// `r` must be a live reservoir handle.
#[no_mangle]
pub unsafe extern "C" fn soesn_reservoir_size(r: *const SoesnReservoir) -> usize {
    r.as_ref().map_or(0, |r| r.0.n())
}

/// Copies the current state into `out`, which has room for `capacity` values.
///
/// # Safety
/// `r` must be a live handle and `out` must point to `capacity` doubles.
#[no_mangle]
pub unsafe extern "C" fn soesn_reservoir_state(
    r: *const SoesnReservoir,
    out: *mut f64,
    capacity: usize,
) -> SoesnStatus {
    guard(|| copy_out(borrow(r, "reservoir")?.0.state(), out, capacity, "state buffer"))
}

/// Advances the reservoir `tau` steps, recording `tau + 1` states.
///
/// # Safety
/// `r` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn soesn_reservoir_run(
    r: *mut SoesnReservoir,
    tau: usize,
    out: *mut *mut SoesnTrajectory,
) -> SoesnStatus {
    guard(|| {
        let t = borrow_mut(r, "reservoir")?.0.run(tau)?;
        put(out, SoesnTrajectory(t))
    })
}

/// # Safety
/// `r` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn soesn_reservoir_free(r: *mut SoesnReservoir) {
    if !r.is_null() {
        drop(Box::from_raw(r));
    }
}

/// # Safety
/// `t` must be a live trajectory handle.
#[no_mangle]
pub unsafe extern "C" fn soesn_trajectory_steps(t: *const SoesnTrajectory) -> usize {
    t.as_ref().map_or(0, |t| t.0.steps())
}

/// # Safety
/// `t` must be a live trajectory handle.
#[no_mangle]
pub unsafe extern "C" fn soesn_trajectory_units(t: *const SoesnTrajectory) -> usize {
    t.as_ref().map_or(0, |t| t.0.n())
}

/// Copies all states, row-major, into `out`.
///
/// # Safety
/// `t` must be a live handle and `out` must point to `capacity` doubles.
#[no_mangle]
pub unsafe extern "C" fn soesn_trajectory_copy(
    t: *const SoesnTrajectory,
    out: *mut f64,
    capacity: usize,
) -> SoesnStatus {
    guard(|| copy_out(borrow(t, "trajectory")?.0.as_slice(), out, capacity, "trajectory buffer"))
}

/// Oscillation report over the trailing `window` steps, as JSON.
///
/// # Safety
/// `t` must be a live handle; `*out_json` receives a string to release with
/// [`soesn_string_free`].
#[no_mangle]
pub unsafe extern "C" fn soesn_trajectory_classify(
    t: *const SoesnTrajectory,
    window: usize,
    out_json: *mut *mut c_char,
) -> SoesnStatus {
    guard(|| {
        let report: OscillationReport = classify_trajectory(&borrow(t, "trajectory")?.0, window)?;
        put_json(out_json, serde_json::to_string(&report)?)
    })
}

/// # Safety
/// `t` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn soesn_trajectory_free(t: *mut SoesnTrajectory) {
    if !t.is_null() {
        drop(Box::from_raw(t));
    }
}

/// Ridge readout from the trajectory's states to `target`, a row-major
/// `steps x dims` matrix aligned with the trajectory rows. The first
/// `washout` rows are skipped.
///
/// # Safety
/// `t` must be a live handle and `target` must point to `steps * dims` doubles.
#[no_mangle]
pub unsafe extern "C" fn soesn_readout_train(
    t: *const SoesnTrajectory,
    target: *const f64,
    steps: usize,
    dims: usize,
    lambda: f64,
    washout: usize,
    out: *mut *mut SoesnReadout,
) -> SoesnStatus {
    guard(|| {
        let x = borrow(t, "trajectory")?.0.to_matrix();
        let y = RealMatrix::new(steps, dims, slice(target, steps * dims, "target")?.to_vec())?;
        put(out, SoesnReadout(train_ridge(&x, &y, lambda, washout)?))
    })
}

/// # Safety
/// `m` must be a live readout handle.
#[no_mangle]
pub unsafe extern "C" fn soesn_readout_output_dim(m: *const SoesnReadout) -> usize {
    m.as_ref().map_or(0, |m| m.0.output_dim())
}

/// Readout applied to every row of `t`, written row-major to `out`.
///
/// # Safety
/// Both handles must be live and `out` must point to `capacity` doubles.
#[no_mangle]
pub unsafe extern "C" fn soesn_readout_predict(
    m: *const SoesnReadout,
    t: *const SoesnTrajectory,
    out: *mut f64,
    capacity: usize,
) -> SoesnStatus {
    guard(|| {
        let y = predict(&borrow(m, "readout")?.0, &borrow(t, "trajectory")?.0.to_matrix())?;
        copy_out(y.as_slice(), out, capacity, "prediction buffer")
    })
}

/// The trained model (`W_out`, `lambda`, `train_nrmse`) as JSON.
///
/// # Safety
/// `m` must be a live handle; `*out_json` receives a string to release with
/// [`soesn_string_free`].
#[no_mangle]
pub unsafe extern "C" fn soesn_readout_to_json(m: *const SoesnReadout, out_json: *mut *mut c_char) -> SoesnStatus {
    guard(|| put_json(out_json, serde_json::to_string(&borrow(m, "readout")?.0)?))
}

/// # Safety
/// `m` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn soesn_readout_free(m: *mut SoesnReadout) {
    if !m.is_null() {
        drop(Box::from_raw(m));
    }
}
