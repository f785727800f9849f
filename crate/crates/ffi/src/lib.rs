//! C ABI over `pcman`.
//!
//! Every fallible function returns a [`PcmStatus`]. On failure a message is
//! kept per thread and can be read with [`pcm_last_error`]. Handles are
//! opaque; each `*_new`/producing call has a matching `*_free`.
//! Alternative indices are 0-based throughout.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use pcman::io::{parse_matrix, MatrixFormat};
use pcman::{
    consistency_index, derive, detect_row_manipulation, find_m, Algorithm, DetectionReport, Error,
    ManipulationRequest, ManipulationResult, Method, PcMatrix, RandomIndexTable, ScaleMode, Selection,
};

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PcmStatus {
    Ok = 0,
    NullPointer = 1,
    /// Not square, too small, non-positive or non-reciprocal entries.
    InvalidMatrix = 2,
    /// Bad indices, alpha, threshold, enum value or buffer length.
    InvalidArgument = 3,
    NoConvergence = 4,
    RandomIndexUnavailable = 5,
    Parse = 6,
    OutOfRange = 7,
    Panic = 8,
    Other = 9,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PcmMethod {
    Evm = 0,
    Gmm = 1,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PcmAlgorithm {
    Row = 0,
    Matrix = 1,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PcmSelection {
    Feasible = 0,
    Fewest = 1,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PcmFormat {
    Csv = 0,
    Json = 1,
}

/// Opaque pairwise-comparison matrix.
pub struct PcmMatrix(PcMatrix);

/// Opaque outcome of [`pcm_manipulate`].
pub struct PcmResult(ManipulationResult);

/// Opaque outcome of [`pcm_detect`].
pub struct PcmDetection(DetectionReport);

/// Options for [`pcm_manipulate`]. Start from
/// [`pcm_manipulation_options_default`].
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct PcmManipulationOptions {
    pub algorithm: PcmAlgorithm,
    pub method: PcmMethod,
    pub alpha_start: f64,
    pub alpha_step: f64,
    pub ci_threshold: f64,
    /// Saturate new entries at the 1/9..9 scale.
    pub clamp: bool,
    /// Additionally require alpha above the current `c_pq`.
    pub strict_alpha: bool,
    pub selection: PcmSelection,
}

/// One pair overwrite recorded by a heuristic.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct PcmStep {
    pub i: usize,
    pub j: usize,
    pub value: f64,
    pub ci: f64,
    /// 1-based rank positions of p and q after the step.
    pub rank_p: usize,
    pub rank_q: usize,
    pub clamped: bool,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct PcmSuspect {
    pub promoted: usize,
    pub reference: usize,
    pub witness_count: usize,
    pub common_ratio: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let msg = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(msg));
}

fn fail(status: PcmStatus, msg: impl Into<String>) -> PcmStatus {
    set_error(msg.into());
    status
}

fn status_of(err: &Error) -> PcmStatus {
    match err {
        Error::NotSquare { .. }
        | Error::TooSmall(_)
        | Error::NonPositiveEntry { .. }
        | Error::NotReciprocal { .. }
        | Error::NonPositiveWeight { .. } => PcmStatus::InvalidMatrix,
        Error::DimensionMismatch { .. }
        | Error::InvalidIndices { .. }
        | Error::AlphaOutOfRange { .. }
        | Error::InvalidRequest(_)
        | Error::Range { .. } => PcmStatus::InvalidArgument,
        Error::NoConvergence(_) => PcmStatus::NoConvergence,
        Error::RandomIndexUnavailable(_) => PcmStatus::RandomIndexUnavailable,
        Error::Parse { .. } | Error::UnknownKey(_) | Error::MissingRequired(_) => PcmStatus::Parse,
        _ => PcmStatus::Other,
    }
}

fn from_err(err: Error) -> PcmStatus {
    fail(status_of(&err), err.to_string())
}

/// Runs `f`, turning a panic into [`PcmStatus::Panic`] and clearing the
/// error message on success.
fn guard(f: impl FnOnce() -> PcmStatus) -> PcmStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(PcmStatus::Ok) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            PcmStatus::Ok
        }
        Ok(s) => s,
        Err(_) => fail(PcmStatus::Panic, "internal panic"),
    }
}

macro_rules! deref {
    ($p:expr) => {
        match unsafe { $p.as_ref() } {
            Some(v) => v,
            None => return fail(PcmStatus::NullPointer, concat!("`", stringify!($p), "` is null")),
        }
    };
}

macro_rules! out {
    ($p:expr) => {
        match unsafe { $p.as_mut() } {
            Some(v) => v,
            None => return fail(PcmStatus::NullPointer, concat!("`", stringify!($p), "` is null")),
        }
    };
}

macro_rules! try_pcm {
    ($e:expr) => {
        match $e {
            Ok(v) => v,
            Err(err) => return from_err(err),
        }
    };
}

fn method(m: PcmMethod) -> Method {
    match m {
        PcmMethod::Evm => Method::Evm,
        PcmMethod::Gmm => Method::Gmm,
    }
}

fn boxed<T>(v: T) -> *mut T {
    Box::into_raw(Box::new(v))
}

/// # Safety
/// `buf` must hold `len` writable doubles, or be null when `len` is 0.
unsafe fn out_slice<'a>(buf: *mut f64, len: usize) -> Option<&'a mut [f64]> {
    if buf.is_null() {
        return None;
    }
    Some(std::slice::from_raw_parts_mut(buf, len))
}

fn check_len(len: usize, need: usize) -> Result<(), PcmStatus> {
    if len < need {
        return Err(fail(
            PcmStatus::InvalidArgument,
            format!("buffer holds {len} values, {need} needed"),
        ));
    }
    Ok(())
}

/// Message for the last failed call on this thread, or null. The pointer
/// stays valid until the next call into this library on the same thread.
#[no_mangle]
pub extern "C" fn pcm_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn pcm_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Builds an `n x n` matrix from `n * n` row-major entries.
///
/// # Safety
/// `data` must point to `n * n` readable doubles.
#[no_mangle]
pub unsafe extern "C" fn pcm_matrix_new(n: usize, data: *const f64, out: *mut *mut PcmMatrix) -> PcmStatus {
    guard(|| {
        let out = out!(out);
        if data.is_null() {
            return fail(PcmStatus::NullPointer, "`data` is null");
        }
        let Some(len) = n.checked_mul(n) else {
            return fail(PcmStatus::InvalidArgument, "n is too large");
        };
        let values = std::slice::from_raw_parts(data, len).to_vec();
        let m = try_pcm!(PcMatrix::from_row_major(n, values));
        *out = boxed(PcmMatrix(m));
        PcmStatus::Ok
    })
}

/// Consistent matrix `c_ij = w_i / w_j`.
///
/// # Safety
/// `weights` must point to `n` readable doubles.
#[no_mangle]
pub unsafe extern "C" fn pcm_matrix_from_weights(
    weights: *const f64,
    n: usize,
    out: *mut *mut PcmMatrix,
) -> PcmStatus {
    guard(|| {
        let out = out!(out);
        if weights.is_null() {
            return fail(PcmStatus::NullPointer, "`weights` is null");
        }
        let w = std::slice::from_raw_parts(weights, n);
        let m = try_pcm!(PcMatrix::consistent_from_weights(w));
        *out = boxed(PcmMatrix(m));
        PcmStatus::Ok
    })
}

/// Parses CSV or JSON text.
///
/// # Safety
/// `text` must be a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn pcm_matrix_parse(text: *const c_char, format: PcmFormat, out: *mut *mut PcmMatrix) -> PcmStatus {
    guard(|| {
        let out = out!(out);
        if text.is_null() {
            return fail(PcmStatus::NullPointer, "`text` is null");
        }
        let Ok(text) = CStr::from_ptr(text).to_str() else {
            return fail(PcmStatus::Parse, "text is not valid UTF-8");
        };
        let format = match format {
            PcmFormat::Csv => MatrixFormat::Csv,
            PcmFormat::Json => MatrixFormat::Json,
        };
        let m = try_pcm!(parse_matrix(text, format));
        *out = boxed(PcmMatrix(m));
        PcmStatus::Ok
    })
}

/// # Safety
/// `m` must come from this library and not be freed twice. Null is ignored.
#[no_mangle]
pub unsafe extern "C" fn pcm_matrix_free(m: *mut PcmMatrix) {
    if !m.is_null() {
        drop(Box::from_raw(m));
    }
}

/// Number of alternatives, 0 for a null handle.
///
/// # Safety
/// `m` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn pcm_matrix_size(m: *const PcmMatrix) -> usize {
    m.as_ref().map_or(0, |m| m.0.n())
}

/// # Safety
/// `m` must be a live handle; `value` must be writable.
#[no_mangle]
pub unsafe extern "C" fn pcm_matrix_get(m: *const PcmMatrix, i: usize, j: usize, value: *mut f64) -> PcmStatus {
    guard(|| {
        let m = deref!(m);
        let value = out!(value);
        let n = m.0.n();
        if i >= n || j >= n {
            return fail(PcmStatus::OutOfRange, format!("({i}, {j}) outside a {n} x {n} matrix"));
        }
        *value = m.0.get(i, j);
        PcmStatus::Ok
    })
}

/// Copies the `n * n` entries row-major into `buf`.
///
/// # Safety
/// `buf` must hold `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn pcm_matrix_entries(m: *const PcmMatrix, buf: *mut f64, len: usize) -> PcmStatus {
    guard(|| {
        let m = deref!(m);
        let src = m.0.as_slice();
        if let Err(s) = check_len(len, src.len()) {
            return s;
        }
        let Some(dst) = out_slice(buf, len) else {
            return fail(PcmStatus::NullPointer, "`buf` is null");
        };
        dst[..src.len()].copy_from_slice(src);
        PcmStatus::Ok
    })
}

/// Writes the `n` normalized weights into `weights`. `lambda_max` may be
/// null; for GMM it receives NaN.
///
/// # Safety
/// `weights` must hold `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn pcm_priorities(
    m: *const PcmMatrix,
    method_: PcmMethod,
    weights: *mut f64,
    len: usize,
    lambda_max: *mut f64,
) -> PcmStatus {
    guard(|| {
        let m = deref!(m);
        if let Err(s) = check_len(len, m.0.n()) {
            return s;
        }
        let Some(dst) = out_slice(weights, len) else {
            return fail(PcmStatus::NullPointer, "`weights` is null");
        };
        let pv = try_pcm!(derive(&m.0, method(method_)));
        dst[..pv.len()].copy_from_slice(&pv.weights);
        if let Some(l) = lambda_max.as_mut() {
            *l = pv.lambda_max.unwrap_or(f64::NAN);
        }
        PcmStatus::Ok
    })
}

/// Writes the 1-based rank position of every alternative; position 1 is
/// the smallest weight.
///
/// # Safety
/// `positions` must hold `len` writable values.
#[no_mangle]
pub unsafe extern "C" fn pcm_ranking(
    m: *const PcmMatrix,
    method_: PcmMethod,
    positions: *mut usize,
    len: usize,
) -> PcmStatus {
    guard(|| {
        let m = deref!(m);
        let n = m.0.n();
        if let Err(s) = check_len(len, n) {
            return s;
        }
        if positions.is_null() {
            return fail(PcmStatus::NullPointer, "`positions` is null");
        }
        let dst = std::slice::from_raw_parts_mut(positions, len);
        let r = try_pcm!(derive(&m.0, method(method_))).ranking();
        for (k, slot) in dst.iter_mut().take(n).enumerate() {
            *slot = r.position(k);
        }
        PcmStatus::Ok
    })
}

/// Saaty's consistency index `(lambda_max - n) / (n - 1)`.
///
/// # Safety
/// `m` must be a live handle; `ci` must be writable.
#[no_mangle]
pub unsafe extern "C" fn pcm_consistency_index(m: *const PcmMatrix, ci: *mut f64) -> PcmStatus {
    guard(|| {
        let m = deref!(m);
        let ci = out!(ci);
        *ci = try_pcm!(consistency_index(&m.0));
        PcmStatus::Ok
    })
}

/// CI divided by Saaty's random index for this `n`.
///
/// # Safety
/// `m` must be a live handle; `cr` must be writable.
#[no_mangle]
pub unsafe extern "C" fn pcm_consistency_ratio(m: *const PcmMatrix, cr: *mut f64) -> PcmStatus {
    guard(|| {
        let m = deref!(m);
        let cr = out!(cr);
        match try_pcm!(pcman::consistency::consistency_ratio(&m.0, &RandomIndexTable::saaty())) {
            Some(v) => *cr = v,
            None => return from_err(Error::RandomIndexUnavailable(m.0.n())),
        }
        PcmStatus::Ok
    })
}

#[no_mangle]
pub extern "C" fn pcm_manipulation_options_default() -> PcmManipulationOptions {
    let r = ManipulationRequest::new(0, 1, Algorithm::Row, Method::Evm);
    PcmManipulationOptions {
        algorithm: PcmAlgorithm::Row,
        method: PcmMethod::Evm,
        alpha_start: r.alpha_start,
        alpha_step: r.alpha_step,
        ci_threshold: r.ci_threshold,
        clamp: false,
        strict_alpha: false,
        selection: PcmSelection::Feasible,
    }
}

/// Promotes alternative `p` over `q` with the fewest overwritten
/// comparisons found by sweeping alpha. `options` may be null for the
/// defaults. A result is produced even when the goal is missed; check
/// [`pcm_result_success`].
///
/// # Safety
/// `m` must be a live handle; `options` null or readable; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn pcm_manipulate(
    m: *const PcmMatrix,
    p: usize,
    q: usize,
    options: *const PcmManipulationOptions,
    out: *mut *mut PcmResult,
) -> PcmStatus {
    guard(|| {
        let m = deref!(m);
        let out = out!(out);
        let o = options.as_ref().copied().unwrap_or_else(|| pcm_manipulation_options_default());
        let algorithm = match o.algorithm {
            PcmAlgorithm::Row => Algorithm::Row,
            PcmAlgorithm::Matrix => Algorithm::Matrix,
        };
        let mut req = ManipulationRequest::new(p, q, algorithm, method(o.method)).with_alpha(o.alpha_start, o.alpha_step);
        req.ci_threshold = o.ci_threshold;
        req.scale = if o.clamp { ScaleMode::Clamp } else { ScaleMode::Free };
        req.strict_alpha = o.strict_alpha;
        req.selection = match o.selection {
            PcmSelection::Feasible => Selection::Feasible,
            PcmSelection::Fewest => Selection::Fewest,
        };
        let res = try_pcm!(find_m(&m.0, &req));
        *out = boxed(PcmResult(res));
        PcmStatus::Ok
    })
}

/// # Safety
/// `r` must come from [`pcm_manipulate`] and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn pcm_result_free(r: *mut PcmResult) {
    if !r.is_null() {
        drop(Box::from_raw(r));
    }
}

/// Modified entries, both members of each pair counted.
///
/// # Safety
/// `r` must be a live handle or null (returns 0).
#[no_mangle]
pub unsafe extern "C" fn pcm_result_m_res(r: *const PcmResult) -> usize {
    r.as_ref().map_or(0, |r| r.0.m_res)
}

/// Swap achieved within the CI threshold.
///
/// # Safety
/// `r` must be a live handle or null (returns false).
#[no_mangle]
pub unsafe extern "C" fn pcm_result_success(r: *const PcmResult) -> bool {
    r.as_ref().is_some_and(|r| r.0.success)
}

/// # Safety
/// `r` must be a live handle or null (returns false).
#[no_mangle]
pub unsafe extern "C" fn pcm_result_swapped(r: *const PcmResult) -> bool {
    r.as_ref().is_some_and(|r| r.0.swapped)
}

/// # Safety
/// `r` must be a live handle or null (returns NaN).
#[no_mangle]
pub unsafe extern "C" fn pcm_result_final_ci(r: *const PcmResult) -> f64 {
    r.as_ref().map_or(f64::NAN, |r| r.0.final_ci)
}

/// Alpha of the chosen run; NaN when the input already met the goal.
///
/// # Safety
/// `r` must be a live handle or null (returns NaN).
#[no_mangle]
pub unsafe extern "C" fn pcm_result_alpha(r: *const PcmResult) -> f64 {
    r.as_ref().and_then(|r| r.0.alpha_used).unwrap_or(f64::NAN)
}

/// New handle holding a copy of the manipulated matrix.
///
/// # Safety
/// `r` must be a live handle; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn pcm_result_matrix(r: *const PcmResult, out: *mut *mut PcmMatrix) -> PcmStatus {
    guard(|| {
        let r = deref!(r);
        let out = out!(out);
        *out = boxed(PcmMatrix(r.0.matrix.clone()));
        PcmStatus::Ok
    })
}

/// # Safety
/// `r` must be a live handle or null (returns 0).
#[no_mangle]
pub unsafe extern "C" fn pcm_result_step_count(r: *const PcmResult) -> usize {
    r.as_ref().map_or(0, |r| r.0.trace.len())
}

/// # Safety
/// `r` must be a live handle; `step` writable.
#[no_mangle]
pub unsafe extern "C" fn pcm_result_step(r: *const PcmResult, k: usize, step: *mut PcmStep) -> PcmStatus {
    guard(|| {
        let r = deref!(r);
        let step = out!(step);
        let Some(s) = r.0.trace.get(k) else {
            return fail(PcmStatus::OutOfRange, format!("step {k} of {}", r.0.trace.len()));
        };
        *step = PcmStep {
            i: s.pair.0,
            j: s.pair.1,
            value: s.values.0,
            ci: s.ci,
            rank_p: s.ranks.0,
            rank_q: s.ranks.1,
            clamped: s.clamped,
        };
        PcmStatus::Ok
    })
}

/// Looks for rows that are a scaled copy of another row. `tol` is the
/// relative ratio tolerance; pass 0 or less for the default.
///
/// # Safety
/// `m` must be a live handle; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn pcm_detect(m: *const PcmMatrix, tol: f64, out: *mut *mut PcmDetection) -> PcmStatus {
    guard(|| {
        let m = deref!(m);
        let out = out!(out);
        let tol = if tol > 0.0 { tol } else { pcman::detect::DEFAULT_TOL };
        let report = try_pcm!(detect_row_manipulation(&m.0, tol));
        *out = boxed(PcmDetection(report));
        PcmStatus::Ok
    })
}

/// # Safety
/// `d` must come from [`pcm_detect`] and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn pcm_detection_free(d: *mut PcmDetection) {
    if !d.is_null() {
        drop(Box::from_raw(d));
    }
}

/// # Safety
/// `d` must be a live handle or null (returns 0).
#[no_mangle]
pub unsafe extern "C" fn pcm_detection_count(d: *const PcmDetection) -> usize {
    d.as_ref().map_or(0, |d| d.0.suspects.len())
}

/// True when the matrix was consistent enough that no scan ran.
///
/// # Safety
/// `d` must be a live handle or null (returns false).
#[no_mangle]
pub unsafe extern "C" fn pcm_detection_gated(d: *const PcmDetection) -> bool {
    d.as_ref().is_some_and(|d| d.0.gated)
}

/// # Safety
/// `d` must be a live handle; `suspect` writable.
#[no_mangle]
pub unsafe extern "C" fn pcm_detection_suspect(d: *const PcmDetection, k: usize, suspect: *mut PcmSuspect) -> PcmStatus {
    guard(|| {
        let d = deref!(d);
        let suspect = out!(suspect);
        let Some(s) = d.0.suspects.get(k) else {
            return fail(PcmStatus::OutOfRange, format!("suspect {k} of {}", d.0.suspects.len()));
        };
        *suspect = PcmSuspect {
            promoted: s.promoted,
            reference: s.reference,
            witness_count: s.witnesses.len(),
            common_ratio: s.common_ratio,
        };
        PcmStatus::Ok
    })
}
