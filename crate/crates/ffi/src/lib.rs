//! C ABI over the sdlab core: an opaque simulator handle driven by the
//! split-step integrator, plus the pure classifier and counting entry
//! points. Every fallible call returns an [`SdlabStatus`]; the detailed
//! message of the most recent failure on the calling thread is available
//! through [`sdlab_last_error`].

use std::cell::RefCell;
use std::ffi::CString;
use std::ptr;
use std::slice;

use libc::{c_char, size_t};
use num_complex::Complex64;

use sdlab::diagnostics::{classify_wellposedness, WpKind};
use sdlab::propagators::{evolve, ModelParams, Sign, SimState};
use sdlab::strichartz::eisenstein_solution_count;
use sdlab::torus::{lebesgue_norm, sobolev_norm, Field, TorusGrid};

/// Status codes returned by every fallible call.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SdlabStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    NumericalError = 3,
    BufferTooSmall = 4,
    InternalError = 5,
}

/// Classifier outcome codes for [`sdlab_classify`].
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SdlabVerdict {
    LocalWellPosed = 0,
    GlobalWellPosed = 1,
    NotCovered = 2,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::new("").unwrap());
}

fn set_error(message: &str) {
    let sanitized = message.replace('\0', " ");
    LAST_ERROR.with(|slot| {
        *slot.borrow_mut() = CString::new(sanitized).unwrap_or_default();
    });
}

fn fail(status: SdlabStatus, message: &str) -> SdlabStatus {
    set_error(message);
    status
}

fn fail_with(err: sdlab::SdError) -> SdlabStatus {
    let status = match &err {
        sdlab::SdError::BlowUp { .. } => SdlabStatus::NumericalError,
        sdlab::SdError::NoContraction { .. } | sdlab::SdError::NotConverged { .. } => {
            SdlabStatus::NumericalError
        }
        _ => SdlabStatus::InvalidArgument,
    };
    fail(status, &err.to_string())
}

/// Opaque simulator handle: one coupled state advanced by the split-step
/// integrator. Create with [`sdlab_sim_new`], release with
/// [`sdlab_sim_free`].
pub struct SdlabSim {
    state: SimState,
}

/// ABI version of this header; bump on incompatible changes.
#[no_mangle]
pub extern "C" fn sdlab_abi_version() -> u32 {
    1
}

/// Create a simulator on `T^dim` with `modes_per_axis` points per axis and
/// zero initial data. `coupling_sign` is +1 or -1.
///
/// # Safety
/// `out_sim` must be a valid pointer to a writable handle slot.
#[no_mangle]
pub unsafe extern "C" fn sdlab_sim_new(
    dim: u32,
    modes_per_axis: u32,
    relaxation_k: f64,
    coupling_sign: i32,
    alpha: f64,
    out_sim: *mut *mut SdlabSim,
) -> SdlabStatus {
    if out_sim.is_null() {
        return fail(SdlabStatus::NullPointer, "out_sim is null");
    }
    let grid = match TorusGrid::new(dim, modes_per_axis) {
        Ok(grid) => grid,
        Err(e) => return fail_with(e),
    };
    let sign = match Sign::from_i64(coupling_sign as i64) {
        Ok(sign) => sign,
        Err(e) => return fail_with(e),
    };
    let params = match ModelParams::new(relaxation_k, sign, alpha, dim) {
        Ok(params) => params,
        Err(e) => return fail_with(e),
    };
    let state = SimState {
        t: 0.0,
        u: Field::zeros(grid),
        v: Field::zeros(grid),
        params,
    };
    unsafe {
        *out_sim = Box::into_raw(Box::new(SdlabSim { state }));
    }
    SdlabStatus::Ok
}

/// Release a simulator handle; a null pointer is ignored.
///
/// # Safety
/// `sim` must have come from [`sdlab_sim_new`] and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn sdlab_sim_free(sim: *mut SdlabSim) {
    if !sim.is_null() {
        drop(unsafe { Box::from_raw(sim) });
    }
}

/// Number of grid samples per field (the length every buffer below must
/// have).
///
/// # Safety
/// `sim` and `out_len` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn sdlab_sim_point_count(
    sim: *const SdlabSim,
    out_len: *mut size_t,
) -> SdlabStatus {
    if sim.is_null() || out_len.is_null() {
        return fail(SdlabStatus::NullPointer, "sim or out_len is null");
    }
    unsafe {
        *out_len = (*sim).state.u.grid().point_count();
    }
    SdlabStatus::Ok
}

/// Load the coupled state (u complex as split re/im arrays, v real), all of
/// length `len = point_count`, in row-major grid order. Resets t to 0.
///
/// # Safety
/// The three arrays must be readable for `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn sdlab_sim_set_state(
    sim: *mut SdlabSim,
    u_re: *const f64,
    u_im: *const f64,
    v: *const f64,
    len: size_t,
) -> SdlabStatus {
    if sim.is_null() || u_re.is_null() || u_im.is_null() || v.is_null() {
        return fail(SdlabStatus::NullPointer, "null pointer argument");
    }
    let handle = unsafe { &mut *sim };
    let points = handle.state.u.grid().point_count();
    if len != points {
        return fail(
            SdlabStatus::InvalidArgument,
            &format!("buffer length {len} does not match point count {points}"),
        );
    }
    let (re, im, vv) = unsafe {
        (
            slice::from_raw_parts(u_re, len),
            slice::from_raw_parts(u_im, len),
            slice::from_raw_parts(v, len),
        )
    };
    let grid = handle.state.u.grid();
    let u_values: Vec<Complex64> = re
        .iter()
        .zip(im)
        .map(|(&a, &b)| Complex64::new(a, b))
        .collect();
    let u = match Field::new(grid, u_values) {
        Ok(f) => f,
        Err(e) => return fail_with(e),
    };
    let v_field = match Field::from_real(grid, vv) {
        Ok(f) => f,
        Err(e) => return fail_with(e),
    };
    match SimState::new(0.0, u, v_field, handle.state.params) {
        Ok(state) => {
            handle.state = state;
            SdlabStatus::Ok
        }
        Err(e) => fail_with(e),
    }
}

/// Advance the state by `steps` Strang steps of size `dt`. On a blow-up
/// abort the state keeps its last finite value and `NumericalError` is
/// returned.
///
/// # Safety
/// `sim` must be a valid handle.
#[no_mangle]
pub unsafe extern "C" fn sdlab_sim_step(
    sim: *mut SdlabSim,
    dt: f64,
    steps: u64,
) -> SdlabStatus {
    if sim.is_null() {
        return fail(SdlabStatus::NullPointer, "sim is null");
    }
    if steps == 0 {
        return SdlabStatus::Ok;
    }
    let handle = unsafe { &mut *sim };
    let horizon = dt * steps as f64;
    match evolve(&handle.state, horizon, dt, steps as usize) {
        Ok(trajectory) => {
            handle.state = trajectory.states.last().expect("final state").clone();
            SdlabStatus::Ok
        }
        Err(e) => fail_with(e),
    }
}

/// Current simulation time.
///
/// # Safety
/// `sim` and `out_time` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn sdlab_sim_time(
    sim: *const SdlabSim,
    out_time: *mut f64,
) -> SdlabStatus {
    if sim.is_null() || out_time.is_null() {
        return fail(SdlabStatus::NullPointer, "sim or out_time is null");
    }
    unsafe {
        *out_time = (*sim).state.t;
    }
    SdlabStatus::Ok
}

/// Copy u out as split re/im arrays of length `len = point_count`.
///
/// # Safety
/// The arrays must be writable for `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn sdlab_sim_get_u(
    sim: *const SdlabSim,
    u_re: *mut f64,
    u_im: *mut f64,
    len: size_t,
) -> SdlabStatus {
    if sim.is_null() || u_re.is_null() || u_im.is_null() {
        return fail(SdlabStatus::NullPointer, "null pointer argument");
    }
    let state = unsafe { &(*sim).state };
    if len != state.u.values().len() {
        return fail(
            SdlabStatus::InvalidArgument,
            &format!("buffer length {len} does not match point count"),
        );
    }
    let (re, im) = unsafe {
        (
            slice::from_raw_parts_mut(u_re, len),
            slice::from_raw_parts_mut(u_im, len),
        )
    };
    for (slot, z) in re.iter_mut().zip(state.u.values()) {
        *slot = z.re;
    }
    for (slot, z) in im.iter_mut().zip(state.u.values()) {
        *slot = z.im;
    }
    SdlabStatus::Ok
}

/// Copy v out as a real array of length `len = point_count`.
///
/// # Safety
/// The array must be writable for `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn sdlab_sim_get_v(
    sim: *const SdlabSim,
    v: *mut f64,
    len: size_t,
) -> SdlabStatus {
    if sim.is_null() || v.is_null() {
        return fail(SdlabStatus::NullPointer, "null pointer argument");
    }
    let state = unsafe { &(*sim).state };
    if len != state.v.values().len() {
        return fail(
            SdlabStatus::InvalidArgument,
            &format!("buffer length {len} does not match point count"),
        );
    }
    let out = unsafe { slice::from_raw_parts_mut(v, len) };
    for (slot, z) in out.iter_mut().zip(state.v.values()) {
        *slot = z.re;
    }
    SdlabStatus::Ok
}

/// Norms of the current state: `||u||_2`, `||u||_{H^1}`, `||v||_2`.
/// Null output pointers are skipped.
///
/// # Safety
/// Non-null output pointers must be writable.
#[no_mangle]
pub unsafe extern "C" fn sdlab_sim_norms(
    sim: *const SdlabSim,
    l2_u: *mut f64,
    h1_u: *mut f64,
    l2_v: *mut f64,
) -> SdlabStatus {
    if sim.is_null() {
        return fail(SdlabStatus::NullPointer, "sim is null");
    }
    let state = unsafe { &(*sim).state };
    unsafe {
        if !l2_u.is_null() {
            match lebesgue_norm(2.0, &state.u) {
                Ok(value) => *l2_u = value,
                Err(e) => return fail_with(e),
            }
        }
        if !h1_u.is_null() {
            match sobolev_norm(1.0, &state.u.to_spectrum()) {
                Ok(value) => *h1_u = value,
                Err(e) => return fail_with(e),
            }
        }
        if !l2_v.is_null() {
            match lebesgue_norm(2.0, &state.v) {
                Ok(value) => *l2_v = value,
                Err(e) => return fail_with(e),
            }
        }
    }
    SdlabStatus::Ok
}

fn copy_str(text: &str, buf: *mut c_char, len: size_t) -> SdlabStatus {
    let bytes = text.as_bytes();
    if len < bytes.len() + 1 {
        return fail(
            SdlabStatus::BufferTooSmall,
            &format!("need {} bytes, buffer holds {len}", bytes.len() + 1),
        );
    }
    unsafe {
        ptr::copy_nonoverlapping(bytes.as_ptr() as *const c_char, buf, bytes.len());
        *buf.add(bytes.len()) = 0;
    }
    SdlabStatus::Ok
}

/// Well-posedness verdict for data in `H^s x H^s` on `T^dim` with
/// nonlinearity exponent `alpha`. `tag_buf` (optional, `tag_len` bytes)
/// receives the statement tag such as "A+E", or "-" when nothing applies.
///
/// # Safety
/// `out_verdict` must be writable; `tag_buf` either null or writable for
/// `tag_len` bytes.
#[no_mangle]
pub unsafe extern "C" fn sdlab_classify(
    dim: u32,
    alpha: f64,
    s: f64,
    out_verdict: *mut SdlabVerdict,
    tag_buf: *mut c_char,
    tag_len: size_t,
) -> SdlabStatus {
    if out_verdict.is_null() {
        return fail(SdlabStatus::NullPointer, "out_verdict is null");
    }
    let verdict = match classify_wellposedness(dim, alpha, s) {
        Ok(verdict) => verdict,
        Err(e) => return fail_with(e),
    };
    unsafe {
        *out_verdict = match verdict.kind {
            WpKind::LocalWP => SdlabVerdict::LocalWellPosed,
            WpKind::GlobalWP => SdlabVerdict::GlobalWellPosed,
            WpKind::NotCovered => SdlabVerdict::NotCovered,
        };
    }
    if !tag_buf.is_null() {
        return copy_str(&verdict.theorem_tag(), tag_buf, tag_len);
    }
    SdlabStatus::Ok
}

/// Exact count of integer solutions of `X^2 + 3Y^2 = A`.
///
/// # Safety
/// `out_count` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sdlab_eisenstein_count(
    a: u64,
    out_count: *mut u64,
) -> SdlabStatus {
    if out_count.is_null() {
        return fail(SdlabStatus::NullPointer, "out_count is null");
    }
    match eisenstein_solution_count(a) {
        Ok(count) => {
            unsafe {
                *out_count = count;
            }
            SdlabStatus::Ok
        }
        Err(e) => fail_with(e),
    }
}

/// Copy the most recent error message on this thread into `buf`
/// (NUL-terminated, truncation reported as BufferTooSmall).
///
/// # Safety
/// `buf` must be writable for `len` bytes.
#[no_mangle]
pub unsafe extern "C" fn sdlab_last_error(buf: *mut c_char, len: size_t) -> SdlabStatus {
    if buf.is_null() {
        return SdlabStatus::NullPointer;
    }
    LAST_ERROR.with(|slot| {
        let message = slot.borrow();
        let bytes = message.as_bytes_with_nul();
        if len < bytes.len() {
            return SdlabStatus::BufferTooSmall;
        }
        unsafe {
            ptr::copy_nonoverlapping(bytes.as_ptr() as *const c_char, buf, bytes.len());
        }
        SdlabStatus::Ok
    })
}
