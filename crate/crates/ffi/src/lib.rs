//! C ABI over the advisor.
//!
//! Handles are opaque heap objects created by `nsa_*_canonical` / `nsa_*_load`
//! and released with the matching `*_free`. Every fallible call returns an
//! [`NsaStatus`]; on failure [`nsa_last_error`] describes what went wrong on
//! the calling thread. Strings returned to the caller are owned by the caller
//! and must be released with [`nsa_string_free`].
//!
//! Feature vectors are 9 bytes (0 or 1) in the order document_oriented,
//! graph, key_value, wide_column, consistent, available, partition_tolerant,
//! free, proprietary. Verdict arrays are 6 bytes (1 = suitable) in the order
//! smart_cities, social_network_analysis, geospatial, life_sciences,
//! healthcare, business_intelligence.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use nosql_advisor::advisor::{predict_all, what_if, AdvisorBundle, AdvisorError};
use nosql_advisor::dataset::{load_dataset, validate_dataset, FeatureMatrix, FeatureVector, AREA_COUNT, FEATURE_COUNT};
use nosql_advisor::tree::Label;

// Literal so the generated header carries the numbers.
pub const NSA_FEATURE_COUNT: usize = 9;
pub const NSA_AREA_COUNT: usize = 6;
const _: () = assert!(NSA_FEATURE_COUNT == FEATURE_COUNT && NSA_AREA_COUNT == AREA_COUNT);

/// Result of every fallible call. Zero is success.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NsaStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    Io = 3,
    CorruptBundle = 4,
    BadFeatureVector = 5,
    BadFeatureIndex = 6,
    BadDataset = 7,
    DatasetMismatch = 8,
    Internal = 9,
}

/// Opaque trained advisor (one tree per application area).
pub struct NsaBundle(AdvisorBundle);

/// Opaque dataset of solution records.
pub struct NsaDataset(FeatureMatrix);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let text = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(text).ok());
}

fn fail(status: NsaStatus, msg: impl Into<String>) -> NsaStatus {
    set_error(msg);
    status
}

/// Clears the thread's error, runs `f`, and turns a panic into `Internal`.
fn guard(f: impl FnOnce() -> NsaStatus) -> NsaStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|_| fail(NsaStatus::Internal, "panic inside the advisor"))
}

fn advisor_status(e: &AdvisorError) -> NsaStatus {
    match e {
        AdvisorError::Io(_) => NsaStatus::Io,
        AdvisorError::BadFeatureIndex(_) => NsaStatus::BadFeatureIndex,
        AdvisorError::Tree(_) => NsaStatus::Internal,
        _ => NsaStatus::CorruptBundle,
    }
}

unsafe fn path_arg(path: *const c_char) -> Result<String, NsaStatus> {
    if path.is_null() {
        return Err(fail(NsaStatus::NullPointer, "path is null"));
    }
    CStr::from_ptr(path)
        .to_str()
        .map(str::to_string)
        .map_err(|_| fail(NsaStatus::InvalidUtf8, "path is not valid UTF-8"))
}

unsafe fn features_arg(features: *const u8) -> Result<FeatureVector, NsaStatus> {
    if features.is_null() {
        return Err(fail(NsaStatus::NullPointer, "features is null"));
    }
    let bits = std::slice::from_raw_parts(features, FEATURE_COUNT);
    FeatureVector::from_slice(bits)
        .ok_or_else(|| fail(NsaStatus::BadFeatureVector, format!("feature bytes must be 0 or 1, got {bits:?}")))
}

unsafe fn handle<'a, T>(p: *const T) -> Result<&'a T, NsaStatus> {
    p.as_ref().ok_or_else(|| fail(NsaStatus::NullPointer, "handle is null"))
}

fn write_verdicts(out: *mut u8, verdicts: impl Iterator<Item = Label>) {
    for (i, v) in verdicts.enumerate() {
        // SAFETY: caller provides NSA_AREA_COUNT bytes
        unsafe { *out.add(i) = (v == Label::Suitable) as u8 };
    }
}

fn into_c_string(s: String) -> *mut c_char {
    CString::new(s).map(CString::into_raw).unwrap_or(ptr::null_mut())
}

macro_rules! tri {
    ($e:expr) => {
        match $e {
            Ok(v) => v,
            Err(status) => return status,
        }
    };
}

/// Message for the last failed call on this thread, or null. Valid until the
/// next call on the same thread; do not free.
#[no_mangle]
pub extern "C" fn nsa_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Releases a string returned by this library. Null is ignored.
///
/// # Safety
/// `s` must come from this library and not have been freed already.
#[no_mangle]
pub unsafe extern "C" fn nsa_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Static name of area `index`, or null when out of range. Do not free.
#[no_mangle]
pub extern "C" fn nsa_area_name(index: usize) -> *const c_char {
    const NAMES: [&CStr; AREA_COUNT] = [
        c"smart_cities",
        c"social_network_analysis",
        c"geospatial",
        c"life_sciences",
        c"healthcare",
        c"business_intelligence",
    ];
    NAMES.get(index).map_or(ptr::null(), |s| s.as_ptr())
}

/// Static name of feature `index`, or null when out of range. Do not free.
#[no_mangle]
pub extern "C" fn nsa_feature_name(index: usize) -> *const c_char {
    const NAMES: [&CStr; FEATURE_COUNT] = [
        c"document_oriented",
        c"graph",
        c"key_value",
        c"wide_column",
        c"consistent",
        c"available",
        c"partition_tolerant",
        c"free",
        c"proprietary",
    ];
    NAMES.get(index).map_or(ptr::null(), |s| s.as_ptr())
}

/// The bundle shipped with the library.
///
/// # Safety
/// `out` must be a valid pointer to write the handle to.
#[no_mangle]
pub unsafe extern "C" fn nsa_bundle_canonical(out: *mut *mut NsaBundle) -> NsaStatus {
    guard(|| {
        if out.is_null() {
            return fail(NsaStatus::NullPointer, "out is null");
        }
        *out = Box::into_raw(Box::new(NsaBundle(AdvisorBundle::canonical())));
        NsaStatus::Ok
    })
}

/// Loads a bundle JSON file. `*out` is left untouched on failure.
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn nsa_bundle_load(path: *const c_char, out: *mut *mut NsaBundle) -> NsaStatus {
    guard(|| {
        let path = tri!(path_arg(path));
        if out.is_null() {
            return fail(NsaStatus::NullPointer, "out is null");
        }
        match AdvisorBundle::load(&path) {
            Ok(b) => {
                *out = Box::into_raw(Box::new(NsaBundle(b)));
                NsaStatus::Ok
            }
            Err(e) => fail(advisor_status(&e), format!("{path}: {e}")),
        }
    })
}

/// # Safety
/// `b` must come from `nsa_bundle_*` and not be used afterwards. Null is ignored.
#[no_mangle]
pub unsafe extern "C" fn nsa_bundle_free(b: *mut NsaBundle) {
    if !b.is_null() {
        drop(Box::from_raw(b));
    }
}

/// Dataset version the bundle was trained on; free with `nsa_string_free`.
///
/// # Safety
/// `b` must be a live bundle handle or null.
#[no_mangle]
pub unsafe extern "C" fn nsa_bundle_dataset_version(b: *const NsaBundle) -> *mut c_char {
    match b.as_ref() {
        Some(b) => into_c_string(b.0.dataset_version.clone()),
        None => ptr::null_mut(),
    }
}

/// Writes one byte per area (1 = suitable) into `out_verdicts`.
///
/// # Safety
/// `features` must point to 9 readable bytes, `out_verdicts` to 6 writable bytes.
#[no_mangle]
pub unsafe extern "C" fn nsa_predict(b: *const NsaBundle, features: *const u8, out_verdicts: *mut u8) -> NsaStatus {
    guard(|| {
        let b = tri!(handle(b));
        let x = tri!(features_arg(features));
        if out_verdicts.is_null() {
            return fail(NsaStatus::NullPointer, "out_verdicts is null");
        }
        match predict_all(&b.0, &x) {
            Ok(r) => {
                write_verdicts(out_verdicts, r.verdicts.iter().map(|v| v.verdict));
                NsaStatus::Ok
            }
            Err(e) => fail(advisor_status(&e), e.to_string()),
        }
    })
}

/// Full report (verdicts, decision paths, leaf counts) as JSON; free the
/// string with `nsa_string_free`.
///
/// # Safety
/// `features` must point to 9 readable bytes; `out_json` must be valid.
#[no_mangle]
pub unsafe extern "C" fn nsa_predict_json(
    b: *const NsaBundle,
    features: *const u8,
    out_json: *mut *mut c_char,
) -> NsaStatus {
    guard(|| {
        let b = tri!(handle(b));
        let x = tri!(features_arg(features));
        if out_json.is_null() {
            return fail(NsaStatus::NullPointer, "out_json is null");
        }
        let report = match predict_all(&b.0, &x) {
            Ok(r) => r,
            Err(e) => return fail(advisor_status(&e), e.to_string()),
        };
        match serde_json::to_string(&report) {
            Ok(s) => {
                *out_json = into_c_string(s);
                NsaStatus::Ok
            }
            Err(e) => fail(NsaStatus::Internal, e.to_string()),
        }
    })
}

/// Verdicts before and after flipping feature `toggle`, plus a bit mask of
/// the areas whose verdict changed (bit `i` = area `i`).
///
/// # Safety
/// `features` must point to 9 readable bytes, `before`/`after` to 6 writable
/// bytes each, `changed_mask` to a writable `uint32_t`.
#[no_mangle]
pub unsafe extern "C" fn nsa_what_if(
    b: *const NsaBundle,
    features: *const u8,
    toggle: usize,
    before: *mut u8,
    after: *mut u8,
    changed_mask: *mut u32,
) -> NsaStatus {
    guard(|| {
        let b = tri!(handle(b));
        let x = tri!(features_arg(features));
        if before.is_null() || after.is_null() || changed_mask.is_null() {
            return fail(NsaStatus::NullPointer, "an output pointer is null");
        }
        match what_if(&b.0, &x, toggle) {
            Ok(w) => {
                write_verdicts(before, w.before.verdicts.iter().map(|v| v.verdict));
                write_verdicts(after, w.after.verdicts.iter().map(|v| v.verdict));
                *changed_mask = w.changed_areas.iter().fold(0, |m, a| m | 1 << a.index());
                NsaStatus::Ok
            }
            Err(e) => fail(advisor_status(&e), e.to_string()),
        }
    })
}

/// The dataset shipped with the library.
///
/// # Safety
/// `out` must be a valid pointer to write the handle to.
#[no_mangle]
pub unsafe extern "C" fn nsa_dataset_canonical(out: *mut *mut NsaDataset) -> NsaStatus {
    guard(|| {
        if out.is_null() {
            return fail(NsaStatus::NullPointer, "out is null");
        }
        *out = Box::into_raw(Box::new(NsaDataset(FeatureMatrix::canonical())));
        NsaStatus::Ok
    })
}

/// Loads a dataset CSV. Parsing errors give `BadDataset`; record invariant
/// violations are reported by `nsa_dataset_violations`, not here.
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn nsa_dataset_load(path: *const c_char, out: *mut *mut NsaDataset) -> NsaStatus {
    guard(|| {
        let path = tri!(path_arg(path));
        if out.is_null() {
            return fail(NsaStatus::NullPointer, "out is null");
        }
        match load_dataset(&path) {
            Ok(m) => {
                *out = Box::into_raw(Box::new(NsaDataset(m)));
                NsaStatus::Ok
            }
            Err(e) => fail(NsaStatus::BadDataset, format!("{path}: {e}")),
        }
    })
}

/// # Safety
/// `d` must come from `nsa_dataset_*` and not be used afterwards. Null is ignored.
#[no_mangle]
pub unsafe extern "C" fn nsa_dataset_free(d: *mut NsaDataset) {
    if !d.is_null() {
        drop(Box::from_raw(d));
    }
}

/// Number of records; 0 for a null handle.
///
/// # Safety
/// `d` must be a live dataset handle or null.
#[no_mangle]
pub unsafe extern "C" fn nsa_dataset_len(d: *const NsaDataset) -> usize {
    d.as_ref().map_or(0, |d| d.0.len())
}

/// Content version string; free with `nsa_string_free`.
///
/// # Safety
/// `d` must be a live dataset handle or null.
#[no_mangle]
pub unsafe extern "C" fn nsa_dataset_version(d: *const NsaDataset) -> *mut c_char {
    match d.as_ref() {
        Some(d) => into_c_string(d.0.version().to_string()),
        None => ptr::null_mut(),
    }
}

/// Writes the number of record invariant violations to `out_count`.
///
/// # Safety
/// `d` must be a live dataset handle; `out_count` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn nsa_dataset_violations(d: *const NsaDataset, out_count: *mut usize) -> NsaStatus {
    guard(|| {
        let d = tri!(handle(d));
        if out_count.is_null() {
            return fail(NsaStatus::NullPointer, "out_count is null");
        }
        let v = validate_dataset(&d.0);
        if let Some(first) = v.first() {
            set_error(format!("{}: {}", first.record, first.message));
        }
        *out_count = v.len();
        NsaStatus::Ok
    })
}

/// Checks that a bundle was trained on this dataset.
///
/// # Safety
/// Both handles must be live.
#[no_mangle]
pub unsafe extern "C" fn nsa_bundle_matches_dataset(b: *const NsaBundle, d: *const NsaDataset) -> NsaStatus {
    guard(|| {
        let b = tri!(handle(b));
        let d = tri!(handle(d));
        if b.0.dataset_version == d.0.version() {
            NsaStatus::Ok
        } else {
            fail(
                NsaStatus::DatasetMismatch,
                format!("bundle trained on {}, dataset is {}", b.0.dataset_version, d.0.version()),
            )
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use nosql_advisor::dataset::Area;

    #[test]
    fn name_tables_follow_the_library_order() {
        for (i, a) in Area::ALL.iter().enumerate() {
            let got = unsafe { CStr::from_ptr(nsa_area_name(i)) };
            assert_eq!(got.to_str().unwrap(), a.name());
        }
        for f in nosql_advisor::dataset::Feature::ALL {
            let got = unsafe { CStr::from_ptr(nsa_feature_name(f.index())) };
            assert_eq!(got.to_str().unwrap(), f.name());
        }
        assert!(nsa_area_name(AREA_COUNT).is_null());
        assert!(nsa_feature_name(FEATURE_COUNT).is_null());
    }
}
