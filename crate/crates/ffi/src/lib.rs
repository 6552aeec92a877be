//! C ABI over the gazescope engine.
//!
//! Sessions are opaque handles. Every fallible call returns a [`GzStatus`];
//! on failure [`gz_last_error`] describes what went wrong on the calling
//! thread. Strings and byte buffers handed out by the library must be
//! released with [`gz_string_free`] and [`gz_bytes_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use gazescope::bundle;
use gazescope::fixation::DetectionParams;
use gazescope::ingest::{self, HeaderMode, IngestOptions};
use gazescope::matrix::{self, MatrixError};
use gazescope::model::{EntityDim, Scope};
use gazescope::{aoi, Session};

/// Result codes.
#[repr(C)]
#[allow(non_camel_case_types)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GzStatus {
    GZ_OK = 0,
    GZ_NULL_POINTER = 1,
    GZ_INVALID_UTF8 = 2,
    GZ_PARSE_ERROR = 3,
    GZ_VALIDATION_ERROR = 4,
    GZ_UNSUPPORTED = 5,
    GZ_NOT_FOUND = 6,
    GZ_BUNDLE_ERROR = 7,
    GZ_PANIC = 8,
}

/// Opaque session handle.
pub struct GzSession {
    inner: Session,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: impl ToString) {
    let msg = msg.to_string().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).unwrap_or_default());
}

struct Fail(GzStatus, String);

impl Fail {
    fn new(status: GzStatus, e: impl ToString) -> Self {
        Fail(status, e.to_string())
    }
}

fn guard(f: impl FnOnce() -> Result<(), Fail>) -> GzStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error("");
            GzStatus::GZ_OK
        }
        Ok(Err(Fail(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            GzStatus::GZ_PANIC
        }
    }
}

unsafe fn session_mut<'a>(s: *mut GzSession) -> Result<&'a mut GzSession, Fail> {
    s.as_mut().ok_or_else(|| Fail::new(GzStatus::GZ_NULL_POINTER, "session is null"))
}

unsafe fn session_ref<'a>(s: *const GzSession) -> Result<&'a GzSession, Fail> {
    s.as_ref().ok_or_else(|| Fail::new(GzStatus::GZ_NULL_POINTER, "session is null"))
}

unsafe fn text<'a>(p: *const c_char, what: &str) -> Result<&'a str, Fail> {
    if p.is_null() {
        return Err(Fail::new(GzStatus::GZ_NULL_POINTER, format!("{what} is null")));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Fail::new(GzStatus::GZ_INVALID_UTF8, format!("{what} is not UTF-8")))
}

unsafe fn bytes<'a>(p: *const u8, len: usize) -> Result<&'a [u8], Fail> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(Fail::new(GzStatus::GZ_NULL_POINTER, "data is null"));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn out<T>(p: *mut T, v: T) -> Result<(), Fail> {
    if p.is_null() {
        return Err(Fail::new(GzStatus::GZ_NULL_POINTER, "output pointer is null"));
    }
    p.write(v);
    Ok(())
}

fn c_string(s: String) -> *mut c_char {
    CString::new(s.replace('\0', " ")).unwrap_or_default().into_raw()
}

fn validation(e: impl ToString) -> Fail {
    Fail::new(GzStatus::GZ_VALIDATION_ERROR, e)
}

fn parse(e: impl ToString) -> Fail {
    Fail::new(GzStatus::GZ_PARSE_ERROR, e)
}

/// Message for the last failed call on this thread; empty after a success.
/// The pointer stays valid until the next call on the same thread.
#[no_mangle]
pub extern "C" fn gz_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// A new, empty session. Never null.
#[no_mangle]
pub extern "C" fn gz_session_new() -> *mut GzSession {
    Box::into_raw(Box::new(GzSession {
        inner: Session::default(),
    }))
}

/// # Safety
/// `session` must come from this library and not be used afterwards. Null is ignored.
#[no_mangle]
pub unsafe extern "C" fn gz_session_free(session: *mut GzSession) {
    if !session.is_null() {
        drop(Box::from_raw(session));
    }
}

/// Current version; 0 for a null handle.
///
/// # Safety
/// `session` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn gz_session_version(session: *const GzSession) -> u64 {
    session.as_ref().map_or(0, |s| s.inner.version())
}

/// Adds (or replaces) a sample from gaze TSV bytes.
///
/// # Safety
/// `id` must be a NUL-terminated string; `data` must point to `len` readable bytes.
#[no_mangle]
pub unsafe extern "C" fn gz_session_add_sample_tsv(
    session: *mut GzSession,
    id: *const c_char,
    data: *const u8,
    len: usize,
    twi_column: bool,
) -> GzStatus {
    guard(|| {
        let s = session_mut(session)?;
        let id = text(id, "id")?;
        let opts = IngestOptions {
            has_header: HeaderMode::Auto,
            twi_column,
        };
        let (sample, twis) = ingest::parse_gaze_tsv(bytes(data, len)?, id, opts).map_err(parse)?;
        s.inner = s.inner.upsert_sample(sample, twis).map_err(validation)?;
        Ok(())
    })
}

/// Replaces the AOIs from AOI JSON.
///
/// # Safety
/// `data` must point to `len` readable bytes.
#[no_mangle]
pub unsafe extern "C" fn gz_session_set_aois_json(session: *mut GzSession, data: *const u8, len: usize) -> GzStatus {
    guard(|| {
        let s = session_mut(session)?;
        let aois = aoi::parse_aois_json(bytes(data, len)?).map_err(parse)?;
        s.inner = s.inner.set_aois(aois).map_err(validation)?;
        Ok(())
    })
}

/// Replaces the TWIs from TWI TSV.
///
/// # Safety
/// `data` must point to `len` readable bytes.
#[no_mangle]
pub unsafe extern "C" fn gz_session_set_twis_tsv(session: *mut GzSession, data: *const u8, len: usize) -> GzStatus {
    guard(|| {
        let s = session_mut(session)?;
        let raw = bytes(data, len)?;
        let twis = if raw.iter().all(u8::is_ascii_whitespace) {
            Vec::new()
        } else {
            ingest::parse_twi_tsv(raw).map_err(parse)?
        };
        s.inner = s.inner.set_twis(twis).map_err(validation)?;
        Ok(())
    })
}

/// Applies a groups JSON table.
///
/// # Safety
/// `data` must point to `len` readable bytes.
#[no_mangle]
pub unsafe extern "C" fn gz_session_set_groups_json(session: *mut GzSession, data: *const u8, len: usize) -> GzStatus {
    guard(|| {
        let s = session_mut(session)?;
        let table = ingest::parse_groups_json(bytes(data, len)?).map_err(parse)?;
        s.inner = s.inner.set_groups(&table).map_err(validation)?;
        Ok(())
    })
}

/// Sets the I-DT dispersion threshold and minimum duration (ms).
///
/// # Safety
/// `session` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn gz_session_set_detection(
    session: *mut GzSession,
    dispersion_threshold: f64,
    min_duration: f64,
) -> GzStatus {
    guard(|| {
        let s = session_mut(session)?;
        let p = DetectionParams::new(dispersion_threshold, min_duration).map_err(validation)?;
        s.inner = s.inner.set_detection(p).map_err(validation)?;
        Ok(())
    })
}

/// Sets the scope, e.g. `"group:4,one:trial1"`.
///
/// # Safety
/// `scope` must be a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn gz_session_set_scope(session: *mut GzSession, scope: *const c_char) -> GzStatus {
    guard(|| {
        let s = session_mut(session)?;
        let scope: Scope = text(scope, "scope")?.parse().map_err(parse)?;
        s.inner = s.inner.set_scope(scope).map_err(validation)?;
        Ok(())
    })
}

/// Number of fixations detected in a sample (unscoped).
///
/// # Safety
/// `sample_id` must be a NUL-terminated string; `out_count` must be writable.
#[no_mangle]
pub unsafe extern "C" fn gz_session_fixation_count(
    session: *const GzSession,
    sample_id: *const c_char,
    out_count: *mut usize,
) -> GzStatus {
    guard(|| {
        let s = session_ref(session)?;
        let id = text(sample_id, "sample_id")?;
        let n = s
            .inner
            .fixations(id)
            .ok_or_else(|| Fail::new(GzStatus::GZ_NOT_FOUND, format!("no sample `{id}`")))?
            .len();
        out(out_count, n)
    })
}

/// Fraction of a sample's fixations that hit an AOI (unscoped).
///
/// # Safety
/// `sample_id` must be a NUL-terminated string; `out_haar` must be writable.
#[no_mangle]
pub unsafe extern "C" fn gz_session_haar(
    session: *const GzSession,
    sample_id: *const c_char,
    out_haar: *mut f64,
) -> GzStatus {
    guard(|| {
        let s = session_ref(session)?;
        let id = text(sample_id, "sample_id")?;
        let labels = s
            .inner
            .labels(id)
            .ok_or_else(|| Fail::new(GzStatus::GZ_NOT_FOUND, format!("no sample `{id}`")))?;
        out(out_haar, aoi::haar(labels).map_err(validation)?)
    })
}

/// A relationship matrix under the session scope, as TSV.
///
/// # Safety
/// String arguments must be NUL-terminated; `out_tsv` must be writable.
/// Release the result with [`gz_string_free`].
#[no_mangle]
pub unsafe extern "C" fn gz_session_matrix_tsv(
    session: *const GzSession,
    rows: *const c_char,
    cols: *const c_char,
    metric: *const c_char,
    out_tsv: *mut *mut c_char,
) -> GzStatus {
    guard(|| {
        let s = session_ref(session)?;
        let rows: EntityDim = text(rows, "rows")?.parse().map_err(parse)?;
        let cols: EntityDim = text(cols, "cols")?.parse().map_err(parse)?;
        let metric = text(metric, "metric")?;
        let m = matrix::relationship_matrix(&s.inner, rows, cols, metric, s.inner.scope()).map_err(|e| match e {
            MatrixError::UnsupportedCombination { .. } => Fail::new(GzStatus::GZ_UNSUPPORTED, e),
            e => validation(e),
        })?;
        if out_tsv.is_null() {
            return Err(Fail::new(GzStatus::GZ_NULL_POINTER, "output pointer is null"));
        }
        out(out_tsv, c_string(bundle::matrix_tsv(&m)))
    })
}

/// The metrics summary under the session scope, as TSV.
///
/// # Safety
/// `out_tsv` must be writable. Release the result with [`gz_string_free`].
#[no_mangle]
pub unsafe extern "C" fn gz_session_metrics_tsv(session: *const GzSession, out_tsv: *mut *mut c_char) -> GzStatus {
    guard(|| {
        let s = session_ref(session)?;
        let rows = bundle::summary_rows(&s.inner, s.inner.scope()).map_err(validation)?;
        if out_tsv.is_null() {
            return Err(Fail::new(GzStatus::GZ_NULL_POINTER, "output pointer is null"));
        }
        out(out_tsv, c_string(bundle::summary_tsv(&rows)))
    })
}

/// Serializes the session as a zip bundle.
///
/// # Safety
/// `out_data` and `out_len` must be writable. Release with [`gz_bytes_free`].
#[no_mangle]
pub unsafe extern "C" fn gz_session_export(
    session: *const GzSession,
    out_data: *mut *mut u8,
    out_len: *mut usize,
) -> GzStatus {
    guard(|| {
        let s = session_ref(session)?;
        if out_data.is_null() || out_len.is_null() {
            return Err(Fail::new(GzStatus::GZ_NULL_POINTER, "output pointer is null"));
        }
        let buf = bundle::export_bundle(&s.inner).into_boxed_slice();
        let len = buf.len();
        out(out_len, len)?;
        out(out_data, Box::into_raw(buf) as *mut u8)
    })
}

/// Builds a new session from a zip bundle. Recomputation mismatches are not
/// errors; they are reported through [`gz_last_error`] with `GZ_OK`.
///
/// # Safety
/// `data` must point to `len` readable bytes; `out_session` must be writable.
#[no_mangle]
pub unsafe extern "C" fn gz_session_import(data: *const u8, len: usize, out_session: *mut *mut GzSession) -> GzStatus {
    let mut warnings = Vec::new();
    let status = guard(|| {
        if out_session.is_null() {
            return Err(Fail::new(GzStatus::GZ_NULL_POINTER, "output pointer is null"));
        }
        let (inner, w) = bundle::import_bundle(bytes(data, len)?).map_err(|e| match e {
            bundle::BundleError::Session(e) => validation(e),
            e => Fail::new(GzStatus::GZ_BUNDLE_ERROR, e),
        })?;
        warnings = w;
        out(out_session, Box::into_raw(Box::new(GzSession { inner })))
    });
    if status == GzStatus::GZ_OK && !warnings.is_empty() {
        set_error(warnings.iter().map(ToString::to_string).collect::<Vec<_>>().join("; "));
    }
    status
}

/// # Safety
/// `s` must be null or a string returned by this library, not freed before.
#[no_mangle]
pub unsafe extern "C" fn gz_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// # Safety
/// `data`/`len` must be exactly as returned by [`gz_session_export`].
#[no_mangle]
pub unsafe extern "C" fn gz_bytes_free(data: *mut u8, len: usize) {
    if !data.is_null() {
        drop(Box::from_raw(ptr::slice_from_raw_parts_mut(data, len)));
    }
}
