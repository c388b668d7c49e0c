//! C interface to the formhd toolkit.
//!
//! The surface is deliberately small: parse or load a scenario into an
//! opaque handle, then run or validate it, and fetch the machinery's
//! self-test and symmetry tables. Results cross the boundary as JSON
//! strings (the same documents the command line prints), status codes
//! mirror the command line exit codes, and a thread-local message holds
//! the detail of the most recent failure.
//!
//! Ownership rules:
//! - every `*mut FormhdScenario` produced here must go back through
//!   [`formhd_scenario_free`];
//! - every string returned through an out-parameter must go back through
//!   [`formhd_string_free`];
//! - [`formhd_version`] and [`formhd_last_error`] return borrowed pointers
//!   that must not be freed. The error pointer stays valid until the same
//!   thread calls into the library again.
//!
//! Every entry point catches panics and converts them into
//! [`FormhdStatus::Panic`], so undefined behavior never crosses the
//! boundary on the Rust side.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;

use formhd::error::{Category, Error};
use formhd::scenario::{self, Scenario};
use formhd::selfcheck::{selfcheck, SelfcheckOptions};

/// Status of one call. Nonzero values follow the command line exit codes
/// where one exists: 2 for configuration, 3 for numerics, 4 for validation.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FormhdStatus {
    Ok = 0,
    /// An internal error outside the other categories, I/O included.
    RuntimeError = 1,
    /// The input can never run: malformed TOML, bad mesh, bad closure.
    ConfigError = 2,
    /// The arithmetic failed mid-run: blow-up, density floor, cold spot.
    NumericError = 3,
    /// A validator rejected the input, or a run finished with failed checks.
    ValidationError = 4,
    /// A required pointer argument was null.
    NullArgument = 5,
    /// A string argument was not valid UTF-8.
    InvalidUtf8 = 6,
    /// The library panicked; see `formhd_last_error`.
    Panic = 7,
}

/// Opaque parsed-and-validated scenario.
pub struct FormhdScenario {
    inner: Scenario,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let clean: String = msg.chars().filter(|&c| c != '\0').collect();
    LAST_ERROR.with(|slot| {
        *slot.borrow_mut() = CString::new(clean).expect("NUL stripped above");
    });
}

fn status_of(e: &Error) -> FormhdStatus {
    set_error(&e.to_string());
    match e.category() {
        Category::Config => FormhdStatus::ConfigError,
        Category::Numeric => FormhdStatus::NumericError,
        Category::Validation => FormhdStatus::ValidationError,
        Category::Other => FormhdStatus::RuntimeError,
    }
}

/// Read a required C string argument.
///
/// # Safety
/// `p` must be null or point at a NUL-terminated string.
unsafe fn arg_str<'a>(p: *const c_char, what: &str) -> Result<&'a str, FormhdStatus> {
    if p.is_null() {
        set_error(&format!("{what} must not be null"));
        return Err(FormhdStatus::NullArgument);
    }
    CStr::from_ptr(p).to_str().map_err(|_| {
        set_error(&format!("{what} is not valid UTF-8"));
        FormhdStatus::InvalidUtf8
    })
}

/// Hand a string to the caller through an out-parameter, or drop it
/// silently when the caller passed null because it does not want it.
unsafe fn emit(out: *mut *mut c_char, text: &str) {
    if out.is_null() {
        return;
    }
    let clean: String = text.chars().filter(|&c| c != '\0').collect();
    *out = CString::new(clean).expect("NUL stripped above").into_raw();
}

fn guarded(body: impl FnOnce() -> FormhdStatus) -> FormhdStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(status) => status,
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic with non-string payload".into());
            set_error(&format!("panic: {msg}"));
            FormhdStatus::Panic
        }
    }
}

/// Library version as a static string; do not free.
#[no_mangle]
pub extern "C" fn formhd_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

/// Message of the most recent failure on this thread; empty if none.
/// Borrowed: valid until this thread calls the library again, do not free.
#[no_mangle]
pub extern "C" fn formhd_last_error() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ptr())
}

/// Free a string returned through an out-parameter. Null is a no-op.
///
/// # Safety
/// `s` must have been produced by this library and not freed before.
#[no_mangle]
pub unsafe extern "C" fn formhd_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

fn parse_scenario(text: &str) -> Result<Box<FormhdScenario>, Error> {
    let inner = Scenario::from_toml(text)?;
    inner.validate()?;
    Ok(Box::new(FormhdScenario { inner }))
}

/// Parse and validate a scenario from TOML text.
///
/// # Safety
/// `toml_text` must be a NUL-terminated string, `out` a valid location.
#[no_mangle]
pub unsafe extern "C" fn formhd_scenario_parse(
    toml_text: *const c_char,
    out: *mut *mut FormhdScenario,
) -> FormhdStatus {
    guarded(|| {
        if out.is_null() {
            set_error("out must not be null");
            return FormhdStatus::NullArgument;
        }
        let text = match arg_str(toml_text, "toml_text") {
            Ok(t) => t,
            Err(status) => return status,
        };
        match parse_scenario(text) {
            Ok(handle) => {
                *out = Box::into_raw(handle);
                FormhdStatus::Ok
            }
            Err(e) => status_of(&e),
        }
    })
}

/// Parse and validate a scenario from a TOML file on disk.
///
/// # Safety
/// `path` must be a NUL-terminated string, `out` a valid location.
#[no_mangle]
pub unsafe extern "C" fn formhd_scenario_load(
    path: *const c_char,
    out: *mut *mut FormhdScenario,
) -> FormhdStatus {
    guarded(|| {
        if out.is_null() {
            set_error("out must not be null");
            return FormhdStatus::NullArgument;
        }
        let path = match arg_str(path, "path") {
            Ok(p) => p,
            Err(status) => return status,
        };
        let text = match std::fs::read_to_string(path) {
            Ok(t) => t,
            Err(e) => return status_of(&Error::from(e)),
        };
        match parse_scenario(&text) {
            Ok(handle) => {
                *out = Box::into_raw(handle);
                FormhdStatus::Ok
            }
            Err(e) => status_of(&e),
        }
    })
}

/// Free a scenario handle. Null is a no-op.
///
/// # Safety
/// `scenario` must have come from this library and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn formhd_scenario_free(scenario: *mut FormhdScenario) {
    if !scenario.is_null() {
        drop(Box::from_raw(scenario));
    }
}

/// Run a scenario, writing the CSV report, summary and optional checkpoint
/// under `artifact_dir` with the given base name. On success and on the
/// two run-outcome failures the summary JSON is returned through
/// `summary_json` (if non-null): `NumericError` means the run blew up and
/// the artifacts are partial, `ValidationError` means it finished but a
/// configured check failed.
///
/// # Safety
/// Pointer arguments follow the module contract.
#[no_mangle]
pub unsafe extern "C" fn formhd_scenario_run(
    scenario: *const FormhdScenario,
    name: *const c_char,
    artifact_dir: *const c_char,
    summary_json: *mut *mut c_char,
) -> FormhdStatus {
    guarded(|| {
        if scenario.is_null() {
            set_error("scenario must not be null");
            return FormhdStatus::NullArgument;
        }
        let name = match arg_str(name, "name") {
            Ok(n) => n,
            Err(status) => return status,
        };
        let dir = match arg_str(artifact_dir, "artifact_dir") {
            Ok(d) => d,
            Err(status) => return status,
        };
        let outcome = match scenario::run_scenario(&(*scenario).inner, name, Path::new(dir)) {
            Ok(o) => o,
            Err(e) => return status_of(&e),
        };
        match serde_json::to_string_pretty(&outcome.summary) {
            Ok(json) => emit(summary_json, &json),
            Err(e) => {
                set_error(&format!("summary serialization failed: {e}"));
                return FormhdStatus::RuntimeError;
            }
        }
        if let Some(reason) = &outcome.summary.blow_up {
            set_error(reason);
            FormhdStatus::NumericError
        } else if !outcome.summary.ok {
            set_error("a configured check failed; see the summary");
            FormhdStatus::ValidationError
        } else {
            FormhdStatus::Ok
        }
    })
}

/// Validate a scenario's closure against reciprocity and the isotropy
/// tables, returning the report as JSON. `ValidationError` means the
/// report was produced and says no.
///
/// # Safety
/// Pointer arguments follow the module contract.
#[no_mangle]
pub unsafe extern "C" fn formhd_scenario_validate(
    scenario: *const FormhdScenario,
    samples: u32,
    seed: u64,
    report_json: *mut *mut c_char,
) -> FormhdStatus {
    guarded(|| {
        if scenario.is_null() {
            set_error("scenario must not be null");
            return FormhdStatus::NullArgument;
        }
        let report =
            match scenario::validate_scenario(&(*scenario).inner, samples as usize, seed) {
                Ok(r) => r,
                Err(e) => return status_of(&e),
            };
        match serde_json::to_string_pretty(&report) {
            Ok(json) => emit(report_json, &json),
            Err(e) => {
                set_error(&format!("report serialization failed: {e}"));
                return FormhdStatus::RuntimeError;
            }
        }
        if report.ok {
            FormhdStatus::Ok
        } else {
            set_error("closure validation failed; see the report");
            FormhdStatus::ValidationError
        }
    })
}

/// Run the built-in verification suites with the given seed and return
/// the report as JSON. `ValidationError` means at least one suite failed.
///
/// # Safety
/// `report_json` may be null if the caller only wants the status.
#[no_mangle]
pub unsafe extern "C" fn formhd_selfcheck(
    seed: u64,
    report_json: *mut *mut c_char,
) -> FormhdStatus {
    guarded(|| {
        let options = SelfcheckOptions {
            seed,
            ..SelfcheckOptions::default()
        };
        let report = match selfcheck(&options) {
            Ok(r) => r,
            Err(e) => return status_of(&e),
        };
        match serde_json::to_string_pretty(&report) {
            Ok(json) => emit(report_json, &json),
            Err(e) => {
                set_error(&format!("report serialization failed: {e}"));
                return FormhdStatus::RuntimeError;
            }
        }
        if report.ok() {
            FormhdStatus::Ok
        } else {
            set_error("at least one verification suite failed; see the report");
            FormhdStatus::ValidationError
        }
    })
}

/// Compute the symmetry classification tables for ambient dimension `n`
/// (2 or 3) and return them as JSON.
///
/// # Safety
/// `report_json` may be null if the caller only wants the status.
#[no_mangle]
pub unsafe extern "C" fn formhd_curie_table(
    n: u32,
    samples: u32,
    seed: u64,
    report_json: *mut *mut c_char,
) -> FormhdStatus {
    guarded(|| {
        let report = match formhd::curie::curie_report(n as usize, samples as usize, seed) {
            Ok(r) => r,
            Err(e) => return status_of(&e),
        };
        match serde_json::to_string_pretty(&report) {
            Ok(json) => {
                emit(report_json, &json);
                FormhdStatus::Ok
            }
            Err(e) => {
                set_error(&format!("report serialization failed: {e}"));
                FormhdStatus::RuntimeError
            }
        }
    })
}
