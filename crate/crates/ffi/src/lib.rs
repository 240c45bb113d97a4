//! C ABI for the graphon consensus laboratory.
//!
//! Objects cross the boundary as opaque handles created and destroyed by
//! this library; every fallible call returns a [`GlStatus`] and writes its
//! result through out-pointers. The most recent error message is kept in
//! thread-local storage and exposed through [`gl_last_error_message`].
//!
//! The C header is generated into `include/graphon_lab.h` by `cbindgen`
//! at build time.

use graphon_lab::diagnostics::{consensus_estimate, ConsensusStrategy};
use graphon_lab::discretize::{sample_adjacency, AdjacencyMatrix, State};
use graphon_lab::dynamics::{integrate, SolverConfig, Trajectory};
use graphon_lab::kernel::{
    builtin_kernel, cucker_smale_phi, gamma_r, KernelParams, NonlinKernel, TimeKernel,
};
use graphon_lab::spectral::{graph_laplacian, lambda2, scrambling, spectral_report};
use graphon_lab::Error;
use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::path::Path;

/// Status codes returned by every fallible call.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GlStatus {
    Ok = 0,
    /// A required pointer argument was null.
    NullArgument = 1,
    /// A string argument was not valid UTF-8.
    InvalidUtf8 = 2,
    /// A parameter violated its precondition.
    InvalidArgument = 3,
    /// The computation failed numerically (blow-up, no convergence).
    NumericalFailure = 4,
    /// File input could not be read or parsed.
    IoFailure = 5,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::new("").unwrap());
}

fn set_error(message: &str) {
    let sanitized = message.replace('\0', " ");
    LAST_ERROR.with(|slot| {
        *slot.borrow_mut() = CString::new(sanitized).unwrap();
    });
}

fn status_of(err: &Error) -> GlStatus {
    match err {
        Error::Io { .. } | Error::Parse { .. } | Error::Config { .. } => GlStatus::IoFailure,
        Error::NonFiniteState { .. }
        | Error::JacobiNoConvergence { .. }
        | Error::NonPositivePerron { .. }
        | Error::ZeroInDegree { .. } => GlStatus::NumericalFailure,
        _ => GlStatus::InvalidArgument,
    }
}

fn fail(err: Error) -> GlStatus {
    let status = status_of(&err);
    set_error(&err.to_string());
    status
}

/// Pointer to the message of the most recent error on this thread; owned by
/// the library, valid until the next failing call.
#[no_mangle]
pub extern "C" fn gl_last_error_message() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ptr())
}

/// Static version string of the library.
#[no_mangle]
pub extern "C" fn gl_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

/// Opaque time-dependent interaction kernel a(t,i,j).
pub struct GlKernel(TimeKernel);
/// Opaque nonlinear communication kernel φ(r).
pub struct GlPhi(NonlinKernel);
/// Opaque N×N sampled adjacency matrix.
pub struct GlMatrix(AdjacencyMatrix);
/// Opaque integrated trajectory.
pub struct GlTrajectory(Trajectory);

unsafe fn read_str<'a>(ptr: *const c_char) -> Result<&'a str, GlStatus> {
    if ptr.is_null() {
        set_error("null string argument");
        return Err(GlStatus::NullArgument);
    }
    CStr::from_ptr(ptr).to_str().map_err(|_| {
        set_error("string argument is not valid UTF-8");
        GlStatus::InvalidUtf8
    })
}

macro_rules! require_out {
    ($ptr:expr) => {
        if $ptr.is_null() {
            set_error("null output pointer");
            return GlStatus::NullArgument;
        }
    };
}

macro_rules! require_handle {
    ($ptr:expr) => {
        match $ptr.as_ref() {
            Some(h) => h,
            None => {
                set_error("null handle");
                return GlStatus::NullArgument;
            }
        }
    };
}

/// Builds one of the builtin kernels (`leader`, `balanced_cycle`,
/// `symmetric_switch`, `half_connected`, `complete`, `two_block`).
/// `period` and `bands` parameterize the switching kernels and are ignored
/// by the stationary ones.
///
/// # Safety
/// `name` must point to a NUL-terminated string and `out` must be a valid
/// pointer; the returned handle must be released with [`gl_kernel_free`].
#[no_mangle]
pub unsafe extern "C" fn gl_kernel_builtin(
    name: *const c_char,
    period: f64,
    bands: u32,
    out: *mut *mut GlKernel,
) -> GlStatus {
    require_out!(out);
    let name = match read_str(name) {
        Ok(s) => s,
        Err(status) => return status,
    };
    match builtin_kernel(name, KernelParams { period, bands }) {
        Ok(kernel) => {
            *out = Box::into_raw(Box::new(GlKernel(kernel)));
            GlStatus::Ok
        }
        Err(e) => fail(e),
    }
}

/// Loads a piecewise-constant kernel from a plain-text grid file
/// (`N <int> T_SAMPLES <int>` header, then T_SAMPLES blocks of N×N weights).
///
/// # Safety
/// `path` must point to a NUL-terminated string and `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn gl_kernel_from_grid_file(
    path: *const c_char,
    out: *mut *mut GlKernel,
) -> GlStatus {
    require_out!(out);
    let path = match read_str(path) {
        Ok(s) => s,
        Err(status) => return status,
    };
    match TimeKernel::from_grid_file(Path::new(path)) {
        Ok(kernel) => {
            *out = Box::into_raw(Box::new(GlKernel(kernel)));
            GlStatus::Ok
        }
        Err(e) => fail(e),
    }
}

/// Evaluates a(t,i,j).
///
/// # Safety
/// `kernel` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn gl_kernel_eval(
    kernel: *const GlKernel,
    t: f64,
    i: f64,
    j: f64,
    out: *mut f64,
) -> GlStatus {
    require_out!(out);
    let kernel = require_handle!(kernel);
    *out = kernel.0.eval(t, i, j);
    GlStatus::Ok
}

/// # Safety
/// `kernel` must come from this library and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn gl_kernel_free(kernel: *mut GlKernel) {
    if !kernel.is_null() {
        drop(Box::from_raw(kernel));
    }
}

/// The linear kernel φ ≡ 1.
///
/// # Safety
/// `out` must be a valid pointer; release with [`gl_phi_free`].
#[no_mangle]
pub unsafe extern "C" fn gl_phi_one(out: *mut *mut GlPhi) -> GlStatus {
    require_out!(out);
    *out = Box::into_raw(Box::new(GlPhi(NonlinKernel::constant_one())));
    GlStatus::Ok
}

/// The Cucker-Smale kernel φ(r) = 1/(1+r)².
///
/// # Safety
/// `out` must be a valid pointer; release with [`gl_phi_free`].
#[no_mangle]
pub unsafe extern "C" fn gl_phi_cucker_smale(out: *mut *mut GlPhi) -> GlStatus {
    require_out!(out);
    *out = Box::into_raw(Box::new(GlPhi(cucker_smale_phi())));
    GlStatus::Ok
}

/// γ_R = min of φ over [0, 2R].
///
/// # Safety
/// `phi` must be a live handle and `out` valid.
#[no_mangle]
pub unsafe extern "C" fn gl_gamma_r(phi: *const GlPhi, radius: f64, out: *mut f64) -> GlStatus {
    require_out!(out);
    let phi = require_handle!(phi);
    match gamma_r(&phi.0, radius) {
        Ok(v) => {
            *out = v;
            GlStatus::Ok
        }
        Err(e) => fail(e),
    }
}

/// # Safety
/// `phi` must come from this library and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn gl_phi_free(phi: *mut GlPhi) {
    if !phi.is_null() {
        drop(Box::from_raw(phi));
    }
}

/// Samples the kernel at time `t` into an n×n matrix of cell averages with
/// an `order`×`order` midpoint rule per cell.
///
/// # Safety
/// `kernel` must be a live handle and `out` valid; release the result with
/// [`gl_matrix_free`].
#[no_mangle]
pub unsafe extern "C" fn gl_sample_adjacency(
    kernel: *const GlKernel,
    t: f64,
    n: usize,
    order: usize,
    out: *mut *mut GlMatrix,
) -> GlStatus {
    require_out!(out);
    let kernel = require_handle!(kernel);
    if n == 0 {
        set_error("matrix dimension must be positive");
        return GlStatus::InvalidArgument;
    }
    let matrix = sample_adjacency(&kernel.0, t, n, order.max(1));
    *out = Box::into_raw(Box::new(GlMatrix(matrix)));
    GlStatus::Ok
}

/// Dimension of a sampled matrix.
///
/// # Safety
/// `matrix` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn gl_matrix_n(matrix: *const GlMatrix) -> usize {
    matrix.as_ref().map_or(0, |m| m.0.n())
}

/// Reads entry (i, j).
///
/// # Safety
/// `matrix` must be a live handle and `out` valid.
#[no_mangle]
pub unsafe extern "C" fn gl_matrix_get(
    matrix: *const GlMatrix,
    i: usize,
    j: usize,
    out: *mut f64,
) -> GlStatus {
    require_out!(out);
    let matrix = require_handle!(matrix);
    if i >= matrix.0.n() || j >= matrix.0.n() {
        set_error("matrix index out of range");
        return GlStatus::InvalidArgument;
    }
    *out = matrix.0.get(i, j);
    GlStatus::Ok
}

/// Scrambling coefficient η of a sampled matrix.
///
/// # Safety
/// `matrix` must be a live handle and `out` valid.
#[no_mangle]
pub unsafe extern "C" fn gl_matrix_scrambling(matrix: *const GlMatrix, out: *mut f64) -> GlStatus {
    require_out!(out);
    let matrix = require_handle!(matrix);
    *out = scrambling(&matrix.0);
    GlStatus::Ok
}

/// Algebraic connectivity λ₂ of the sampled matrix's graph-Laplacian.
///
/// # Safety
/// `matrix` must be a live handle and `out` valid.
#[no_mangle]
pub unsafe extern "C" fn gl_matrix_lambda2(matrix: *const GlMatrix, out: *mut f64) -> GlStatus {
    require_out!(out);
    let matrix = require_handle!(matrix);
    match lambda2(&graph_laplacian(&matrix.0)) {
        Ok(v) => {
            *out = v;
            GlStatus::Ok
        }
        Err(e) => fail(e),
    }
}

/// Connectivity report of a sampled matrix as a JSON document
/// {eta, lambda2, lambda2_weighted, delta, n_components, perron, residual,
/// persistence}; release the string with [`gl_string_free`].
///
/// # Safety
/// `matrix` must be a live handle and `out` valid.
#[no_mangle]
pub unsafe extern "C" fn gl_matrix_report_json(
    matrix: *const GlMatrix,
    out: *mut *mut c_char,
) -> GlStatus {
    require_out!(out);
    let matrix = require_handle!(matrix);
    match spectral_report(&matrix.0, None) {
        Ok(report) => {
            let json = CString::new(report.to_json()).unwrap();
            *out = json.into_raw();
            GlStatus::Ok
        }
        Err(e) => fail(e),
    }
}

/// # Safety
/// `matrix` must come from this library and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn gl_matrix_free(matrix: *mut GlMatrix) {
    if !matrix.is_null() {
        drop(Box::from_raw(matrix));
    }
}

/// Integrates the dynamics ẋ = −L(t,x)x from the row-major initial state
/// `x0` (n agents × d coordinates) over [0, t_end] with fixed step `dt`,
/// recording every `record_stride` steps.
///
/// # Safety
/// `kernel` and `phi` must be live handles, `x0` must point to n·d doubles,
/// and `out` must be valid; release the result with [`gl_trajectory_free`].
#[no_mangle]
pub unsafe extern "C" fn gl_integrate(
    kernel: *const GlKernel,
    phi: *const GlPhi,
    x0: *const f64,
    n: usize,
    d: usize,
    dt: f64,
    t_end: f64,
    record_stride: usize,
    out: *mut *mut GlTrajectory,
) -> GlStatus {
    require_out!(out);
    let kernel = require_handle!(kernel);
    let phi = require_handle!(phi);
    if x0.is_null() {
        set_error("null initial state");
        return GlStatus::NullArgument;
    }
    if n == 0 || d == 0 {
        set_error("state dimensions must be positive");
        return GlStatus::InvalidArgument;
    }
    let positions = std::slice::from_raw_parts(x0, n * d).to_vec();
    let state = match State::new(n, d, positions) {
        Ok(s) => s,
        Err(e) => return fail(e),
    };
    let cfg = match SolverConfig::new(dt, t_end) {
        Ok(c) => c.with_record_stride(record_stride.max(1)),
        Err(e) => return fail(e),
    };
    match integrate(&kernel.0, &phi.0, &state, &cfg) {
        Ok(traj) => {
            *out = Box::into_raw(Box::new(GlTrajectory(traj)));
            GlStatus::Ok
        }
        Err(e) => fail(e),
    }
}

/// Number of recorded times.
///
/// # Safety
/// `traj` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn gl_trajectory_len(traj: *const GlTrajectory) -> usize {
    traj.as_ref().map_or(0, |t| t.0.len())
}

/// Recorded time at index `k`.
///
/// # Safety
/// `traj` must be a live handle and `out` valid.
#[no_mangle]
pub unsafe extern "C" fn gl_trajectory_time(
    traj: *const GlTrajectory,
    k: usize,
    out: *mut f64,
) -> GlStatus {
    require_out!(out);
    let traj = require_handle!(traj);
    match traj.0.times.get(k) {
        Some(&t) => {
            *out = t;
            GlStatus::Ok
        }
        None => {
            set_error("record index out of range");
            GlStatus::InvalidArgument
        }
    }
}

/// Copies the recorded state at index `k` into `buffer` (n·d doubles,
/// row-major by agent).
///
/// # Safety
/// `traj` must be a live handle and `buffer` must point to at least
/// n·d doubles.
#[no_mangle]
pub unsafe extern "C" fn gl_trajectory_state(
    traj: *const GlTrajectory,
    k: usize,
    buffer: *mut f64,
) -> GlStatus {
    let traj = require_handle!(traj);
    if buffer.is_null() {
        set_error("null buffer");
        return GlStatus::NullArgument;
    }
    match traj.0.states.get(k) {
        Some(state) => {
            let src = state.positions();
            std::ptr::copy_nonoverlapping(src.as_ptr(), buffer, src.len());
            GlStatus::Ok
        }
        None => {
            set_error("record index out of range");
            GlStatus::InvalidArgument
        }
    }
}

/// Diameter diagnostic at record `k`.
///
/// # Safety
/// `traj` must be a live handle and `out` valid.
#[no_mangle]
pub unsafe extern "C" fn gl_trajectory_diameter(
    traj: *const GlTrajectory,
    k: usize,
    out: *mut f64,
) -> GlStatus {
    require_out!(out);
    let traj = require_handle!(traj);
    match traj.0.diagnostics.get(k) {
        Some(row) => {
            *out = row.diameter;
            GlStatus::Ok
        }
        None => {
            set_error("record index out of range");
            GlStatus::InvalidArgument
        }
    }
}

/// Standard deviation diagnostic at record `k`.
///
/// # Safety
/// `traj` must be a live handle and `out` valid.
#[no_mangle]
pub unsafe extern "C" fn gl_trajectory_std_dev(
    traj: *const GlTrajectory,
    k: usize,
    out: *mut f64,
) -> GlStatus {
    require_out!(out);
    let traj = require_handle!(traj);
    match traj.0.diagnostics.get(k) {
        Some(row) => {
            *out = row.std_dev;
            GlStatus::Ok
        }
        None => {
            set_error("record index out of range");
            GlStatus::InvalidArgument
        }
    }
}

/// Estimated consensus point (tail extrapolation of the barycenter
/// sequence), copied into `buffer` (d doubles).
///
/// # Safety
/// `traj` must be a live handle and `buffer` must point to at least d
/// doubles.
#[no_mangle]
pub unsafe extern "C" fn gl_trajectory_consensus_estimate(
    traj: *const GlTrajectory,
    buffer: *mut f64,
) -> GlStatus {
    let traj = require_handle!(traj);
    if buffer.is_null() {
        set_error("null buffer");
        return GlStatus::NullArgument;
    }
    let estimate = consensus_estimate(&traj.0, &ConsensusStrategy::TailExtrapolation)
        .or_else(|_| consensus_estimate(&traj.0, &ConsensusStrategy::FinalStateMean));
    match estimate {
        Ok(point) => {
            std::ptr::copy_nonoverlapping(point.as_ptr(), buffer, point.len());
            GlStatus::Ok
        }
        Err(e) => fail(e),
    }
}

/// # Safety
/// `traj` must come from this library and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn gl_trajectory_free(traj: *mut GlTrajectory) {
    if !traj.is_null() {
        drop(Box::from_raw(traj));
    }
}

/// # Safety
/// `s` must be a string returned by this library and not freed twice.
#[no_mangle]
pub unsafe extern "C" fn gl_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}
