//! C ABI for asymptolab.
//!
//! Every function returns an [`AsymStatus`]; on failure the message is kept
//! per thread and read with [`asym_last_error`]. Strings handed out by the
//! library are freed with [`asym_string_free`], handles with their own
//! `_free` function. Panics never cross the boundary.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use asymptolab::cli::{output::to_json, run, RunConfig};
use asymptolab::criteria::classify_space;
use asymptolab::error::Error;
use asymptolab::gallery::{make_family, verify_gallery, Family, FamilySpec, Overrides};
use asymptolab::porosity::{default_schedule, porosity_at_infinity};

/// Status codes. The positive values match the command-line exit codes.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AsymStatus {
    Ok = 0,
    /// A cross-check raised inconsistency flags.
    Inconsistent = 1,
    /// Malformed JSON or invalid parameters.
    Parse = 2,
    /// A resource cap was hit.
    Resource = 3,
    /// A required pointer was null or a string was not UTF-8.
    InvalidArgument = 4,
    /// The library panicked; the handle involved should be dropped.
    Panic = 5,
}

/// An example family built from a JSON family spec.
pub struct AsymFamily {
    inner: Family,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let c = CString::new(msg.into().replace('\0', " ")).expect("nul bytes replaced");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn fail(e: Error) -> AsymStatus {
    set_error(e.to_string());
    match e {
        Error::Resource(_) => AsymStatus::Resource,
        Error::Input(_) | Error::Parse(_) => AsymStatus::Parse,
    }
}

fn guard(f: impl FnOnce() -> AsymStatus) -> AsymStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(s) => s,
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_error(format!("panic: {msg}"));
            AsymStatus::Panic
        }
    }
}

/// # Safety
/// `s` is null or a valid NUL-terminated string.
unsafe fn read_str<'a>(s: *const c_char, what: &str) -> Result<&'a str, AsymStatus> {
    if s.is_null() {
        set_error(format!("{what} is null"));
        return Err(AsymStatus::InvalidArgument);
    }
    CStr::from_ptr(s).to_str().map_err(|_| {
        set_error(format!("{what} is not UTF-8"));
        AsymStatus::InvalidArgument
    })
}

/// # Safety
/// `out` is null or valid for one pointer write.
unsafe fn hand_out(text: String, out: *mut *mut c_char) -> AsymStatus {
    if out.is_null() {
        set_error("output pointer is null");
        return AsymStatus::InvalidArgument;
    }
    match CString::new(text) {
        Ok(c) => {
            *out = c.into_raw();
            AsymStatus::Ok
        }
        Err(_) => {
            set_error("report contained a NUL byte");
            AsymStatus::Panic
        }
    }
}

fn json<T: serde::Serialize>(v: &T) -> Result<String, AsymStatus> {
    to_json(v).map_err(|e| {
        set_error(e.to_string());
        AsymStatus::Panic
    })
}

/// Message of the last failed call on this thread, or null. The pointer stays
/// valid until the next call on the same thread.
#[no_mangle]
pub extern "C" fn asym_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Frees a string returned by this library. Null is a no-op.
///
/// # Safety
/// `s` is null or came from this library and was not freed before.
#[no_mangle]
pub unsafe extern "C" fn asym_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Builds a family from a JSON spec such as `{"kind": "geometric", "q": 2}`.
///
/// # Safety
/// `spec_json` is a NUL-terminated string; `out` is valid for one write.
#[no_mangle]
pub unsafe extern "C" fn asym_family_new(spec_json: *const c_char, out: *mut *mut AsymFamily) -> AsymStatus {
    guard(|| {
        if out.is_null() {
            set_error("output pointer is null");
            return AsymStatus::InvalidArgument;
        }
        let text = match read_str(spec_json, "spec_json") {
            Ok(t) => t,
            Err(s) => return s,
        };
        let spec: FamilySpec = match serde_json::from_str(text) {
            Ok(s) => s,
            Err(e) => return fail(Error::Parse(e.to_string())),
        };
        match make_family(&spec) {
            Ok(f) => {
                *out = Box::into_raw(Box::new(AsymFamily { inner: f }));
                AsymStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}

/// Frees a family. Null is a no-op.
///
/// # Safety
/// `f` is null or came from [`asym_family_new`] and was not freed before.
#[no_mangle]
pub unsafe extern "C" fn asym_family_free(f: *mut AsymFamily) {
    if !f.is_null() {
        drop(Box::from_raw(f));
    }
}

/// Porosity at infinity of the family's distance set by the gap formula on
/// the family's horizon schedule.
///
/// # Safety
/// `f` is a live family; `out` is valid for one write.
#[no_mangle]
pub unsafe extern "C" fn asym_family_porosity(f: *const AsymFamily, out: *mut f64) -> AsymStatus {
    guard(|| {
        let (Some(f), false) = (f.as_ref(), out.is_null()) else {
            set_error("null argument");
            return AsymStatus::InvalidArgument;
        };
        let fam = &f.inner;
        let set = fam.model.distance_set();
        let profile = fam.classify_config(0).porosity_profile;
        match porosity_at_infinity(&set, &default_schedule(fam.porosity_log2_max), &profile) {
            Ok(p) => {
                *out = p.value_by_gap_formula;
                AsymStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}

/// Classification report of the family as JSON. Free with
/// [`asym_string_free`].
///
/// # Safety
/// `f` is a live family; `out` is valid for one write.
#[no_mangle]
pub unsafe extern "C" fn asym_family_classify_json(
    f: *const AsymFamily,
    seed: u64,
    out: *mut *mut c_char,
) -> AsymStatus {
    guard(|| {
        let Some(f) = f.as_ref() else {
            set_error("family is null");
            return AsymStatus::InvalidArgument;
        };
        let fam = &f.inner;
        match classify_space(fam.model.as_ref(), &fam.classify_config(seed)) {
            Ok(r) => match json(&r) {
                Ok(t) => hand_out(t, out),
                Err(s) => s,
            },
            Err(e) => fail(e),
        }
    })
}

/// Runs the gallery cross-check suite. Writes the report JSON and returns
/// [`AsymStatus::Inconsistent`] when any flag was raised.
///
/// # Safety
/// `out` is valid for one write.
#[no_mangle]
pub unsafe extern "C" fn asym_verify_json(seed: u64, out: *mut *mut c_char) -> AsymStatus {
    guard(|| match verify_gallery(seed, &Overrides::default()) {
        Ok(r) => {
            let text = match json(&r) {
                Ok(t) => t,
                Err(s) => return s,
            };
            match hand_out(text, out) {
                AsymStatus::Ok if !r.consistent => {
                    set_error(format!("{} inconsistency flags", r.flags.len()));
                    AsymStatus::Inconsistent
                }
                s => s,
            }
        }
        Err(e) => fail(e),
    })
}

/// Runs a CLI configuration (the `--spec` JSON) and writes its reports into
/// `out_dir`.
///
/// # Safety
/// Both arguments are NUL-terminated strings.
#[no_mangle]
pub unsafe extern "C" fn asym_run(config_json: *const c_char, out_dir: *const c_char) -> AsymStatus {
    guard(|| {
        let (text, dir) = match (read_str(config_json, "config_json"), read_str(out_dir, "out_dir")) {
            (Ok(t), Ok(d)) => (t, d),
            (Err(s), _) | (_, Err(s)) => return s,
        };
        let config = match RunConfig::from_json(text) {
            Ok(c) => c,
            Err(e) => return fail(e),
        };
        match run(&config, Path::new(dir)) {
            Ok(o) if o.flags.is_empty() => AsymStatus::Ok,
            Ok(o) => {
                set_error(format!("{} inconsistency flags", o.flags.len()));
                AsymStatus::Inconsistent
            }
            Err(e) => fail(e),
        }
    })
}
