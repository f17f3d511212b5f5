//! C ABI over the selection engine.
//!
//! Conventions: an opaque engine handle created from a registry file (or the
//! built-in registry), status codes on every call, results returned as
//! heap-allocated JSON strings the caller releases with
//! [`synthony_string_free`], and a per-thread last-error message for
//! diagnostics. All strings are UTF-8, NUL-terminated.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::path::Path;

use synthony_core::data::load_csv;
use synthony_core::dims::Intent;
use synthony_core::engine::{recommend, RecommendRequest};
use synthony_core::registry::{builtin_registry, load_registry, Registry, UserConstraints};
use synthony_core::report::ProfileReport;
use synthony_core::Error;

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SynthonyStatus {
    Ok = 0,
    NullArgument = 1,
    InvalidUtf8 = 2,
    IoError = 3,
    ParseError = 4,
    InvalidArgument = 5,
    /// Hard filters removed every model.
    EmptyPool = 6,
    Internal = 7,
}

/// Opaque engine handle: a loaded, validated registry.
pub struct SynthonyEngine {
    registry: Registry,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(message: String) {
    let stored = CString::new(message)
        .unwrap_or_else(|_| CString::new("error message contained NUL").unwrap());
    LAST_ERROR.with(|slot| *slot.borrow_mut() = Some(stored));
}

fn status_of(error: &Error) -> SynthonyStatus {
    match error {
        Error::Io { .. } => SynthonyStatus::IoError,
        Error::Csv { .. } | Error::Json(_) | Error::Schema { .. } => SynthonyStatus::ParseError,
        Error::EmptyPool => SynthonyStatus::EmptyPool,
        Error::UnknownIntent(_)
        | Error::UnknownModel(_)
        | Error::InvalidArgument(_)
        | Error::InvalidParam { .. }
        | Error::DuplicateColumn(_)
        | Error::ZeroDataRows
        | Error::EmptyDataset => SynthonyStatus::InvalidArgument,
        _ => SynthonyStatus::Internal,
    }
}

fn fail(error: Error) -> SynthonyStatus {
    let status = status_of(&error);
    set_last_error(error.to_string());
    status
}

/// # Safety
/// `ptr` must be null or a valid NUL-terminated string.
unsafe fn optional_str<'a>(ptr: *const c_char) -> Result<Option<&'a str>, SynthonyStatus> {
    if ptr.is_null() {
        return Ok(None);
    }
    match unsafe { CStr::from_ptr(ptr) }.to_str() {
        Ok(s) => Ok(Some(s)),
        Err(_) => {
            set_last_error("argument is not valid UTF-8".to_string());
            Err(SynthonyStatus::InvalidUtf8)
        }
    }
}

fn export_json<T: serde::Serialize>(value: &T, out_json: *mut *mut c_char) -> SynthonyStatus {
    let text = match serde_json::to_string_pretty(value) {
        Ok(t) => t,
        Err(e) => return fail(Error::Json(e)),
    };
    match CString::new(text) {
        Ok(cstring) => {
            unsafe { *out_json = cstring.into_raw() };
            SynthonyStatus::Ok
        }
        Err(_) => {
            set_last_error("document contained an interior NUL".to_string());
            SynthonyStatus::Internal
        }
    }
}

/// Library version as a static string; never freed by the caller.
#[no_mangle]
pub extern "C" fn synthony_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

/// Message for the most recent failure on this thread, or null. Valid until
/// the next failing call on the same thread; do not free.
#[no_mangle]
pub extern "C" fn synthony_last_error_message() -> *const c_char {
    LAST_ERROR.with(|slot| {
        slot.borrow()
            .as_ref()
            .map(|s| s.as_ptr())
            .unwrap_or(std::ptr::null())
    })
}

/// Creates an engine from a registry file; pass null to use the built-in
/// registry. On success writes the handle to `out_engine`.
///
/// # Safety
/// `registry_path` must be null or a valid NUL-terminated path; `out_engine`
/// must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn synthony_engine_new(
    registry_path: *const c_char,
    out_engine: *mut *mut SynthonyEngine,
) -> SynthonyStatus {
    if out_engine.is_null() {
        set_last_error("out_engine is null".to_string());
        return SynthonyStatus::NullArgument;
    }
    let path = match unsafe { optional_str(registry_path) } {
        Ok(p) => p,
        Err(status) => return status,
    };
    let registry = match path {
        Some(p) => match load_registry(Path::new(p)) {
            Ok(r) => r,
            Err(e) => return fail(e),
        },
        None => builtin_registry(),
    };
    let engine = Box::new(SynthonyEngine { registry });
    unsafe { *out_engine = Box::into_raw(engine) };
    SynthonyStatus::Ok
}

/// Releases an engine handle. Null is a no-op.
///
/// # Safety
/// `engine` must be null or a pointer from [`synthony_engine_new`], released
/// at most once.
#[no_mangle]
pub unsafe extern "C" fn synthony_engine_free(engine: *mut SynthonyEngine) {
    if !engine.is_null() {
        drop(unsafe { Box::from_raw(engine) });
    }
}

/// Frees a string returned by this library. Null is a no-op.
///
/// # Safety
/// `s` must be null or a string returned by this library, freed at most once.
#[no_mangle]
pub unsafe extern "C" fn synthony_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(unsafe { CString::from_raw(s) });
    }
}

/// Profiles a CSV file and writes the profile document (stress statistics,
/// flags, requirement vector, meta-features) as JSON to `out_json`.
///
/// # Safety
/// `engine` must be a live engine handle; `csv_path` a valid NUL-terminated
/// path; `out_json` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn synthony_profile_csv(
    engine: *const SynthonyEngine,
    csv_path: *const c_char,
    out_json: *mut *mut c_char,
) -> SynthonyStatus {
    if engine.is_null() || out_json.is_null() {
        set_last_error("engine or out_json is null".to_string());
        return SynthonyStatus::NullArgument;
    }
    let path = match unsafe { optional_str(csv_path) } {
        Ok(Some(p)) => p,
        Ok(None) => {
            set_last_error("csv_path is null".to_string());
            return SynthonyStatus::NullArgument;
        }
        Err(status) => return status,
    };
    let engine = unsafe { &*engine };
    let dataset = match load_csv(Path::new(path), &Default::default()) {
        Ok(d) => d,
        Err(e) => return fail(e),
    };
    let report = ProfileReport::build(&dataset, &engine.registry.engine, None);
    export_json(&report, out_json)
}

/// Ranks synthesizers for a CSV file and writes the recommendation document
/// as JSON to `out_json`. `intent` may be null (unit scale factors) or one of
/// "privacy", "fidelity", "utility". `top_n` bounds the listed alternatives.
///
/// # Safety
/// `engine` must be a live engine handle; `csv_path` a valid NUL-terminated
/// path; `intent` null or NUL-terminated; `out_json` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn synthony_recommend_csv(
    engine: *const SynthonyEngine,
    csv_path: *const c_char,
    intent: *const c_char,
    cpu_only: bool,
    strict_dp: bool,
    top_n: u32,
    out_json: *mut *mut c_char,
) -> SynthonyStatus {
    if engine.is_null() || out_json.is_null() {
        set_last_error("engine or out_json is null".to_string());
        return SynthonyStatus::NullArgument;
    }
    let path = match unsafe { optional_str(csv_path) } {
        Ok(Some(p)) => p,
        Ok(None) => {
            set_last_error("csv_path is null".to_string());
            return SynthonyStatus::NullArgument;
        }
        Err(status) => return status,
    };
    let intent = match unsafe { optional_str(intent) } {
        Ok(None) => None,
        Ok(Some(text)) => match Intent::parse(text) {
            Ok(i) => Some(i),
            Err(e) => return fail(e),
        },
        Err(status) => return status,
    };
    let engine = unsafe { &*engine };
    let dataset = match load_csv(Path::new(path), &Default::default()) {
        Ok(d) => d,
        Err(e) => return fail(e),
    };
    let request = RecommendRequest {
        constraints: UserConstraints { cpu_only, strict_dp },
        top_n: (top_n.max(1)) as usize,
        ..RecommendRequest::new(intent)
    };
    match recommend(&dataset, &engine.registry, &request) {
        Ok(recommendation) => export_json(&recommendation.clipped(), out_json),
        Err(e) => fail(e),
    }
}
