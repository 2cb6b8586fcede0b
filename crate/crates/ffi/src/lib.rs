//! C interface to `nogo-core`.
//!
//! Every function returns a [`NogoStatus`]; on failure the message is
//! available from [`nogo_last_error_message`] on the same thread. Handles
//! are owned by the caller and released with the matching `_free`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use nogo_core::analyzer::{analyze, AnalysisOptions, Mode, SecurityReport};
use nogo_core::demos::{build_demo, reversible_ot_gate};
use nogo_core::format::parse_protocol;
use nogo_core::protocol::{Executor, ProtocolScript};
use nogo_core::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NogoStatus {
    Ok = 0,
    /// Malformed input or a failed structural check.
    Validation = 2,
    /// The global dimension would exceed the cap.
    Capacity = 3,
    NullPointer = 10,
    InvalidUtf8 = 11,
    /// A requested report field was not computed.
    Missing = 12,
    Panic = 13,
}

/// Scalar fields of a report.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NogoMetric {
    Concealment = 0,
    Epsilon = 1,
    AttackSuccess = 2,
    GlobalOverlap = 3,
    ConcStandard = 4,
    ConcPrime = 5,
    CheatPrime = 6,
    NoiselessGap = 7,
    ModeDeviation = 8,
    PrunedMass = 9,
}

/// Which executions `nogo_analyze` runs.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NogoMode {
    Purified = 0,
    Branches = 1,
    Both = 2,
}

/// Opaque protocol script.
pub struct NogoScript(ProtocolScript);

/// Opaque analysis report.
pub struct NogoReport(SecurityReport);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let text = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(text).ok());
}

fn fail(err: Error) -> NogoStatus {
    let status = if err.is_capacity() {
        NogoStatus::Capacity
    } else {
        NogoStatus::Validation
    };
    set_error(err.to_string());
    status
}

fn guard(f: impl FnOnce() -> NogoStatus) -> NogoStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|_| {
        set_error("internal panic");
        NogoStatus::Panic
    })
}

unsafe fn read_str<'a>(s: *const c_char) -> Result<&'a str, NogoStatus> {
    if s.is_null() {
        set_error("null string argument");
        return Err(NogoStatus::NullPointer);
    }
    CStr::from_ptr(s).to_str().map_err(|_| {
        set_error("string argument is not UTF-8");
        NogoStatus::InvalidUtf8
    })
}

macro_rules! non_null {
    ($($p:expr),+) => {
        if $($p.is_null())||+ {
            set_error("null pointer argument");
            return NogoStatus::NullPointer;
        }
    };
}

/// Message for the last failed call on this thread, or null. Valid until
/// the next call into this library on the same thread.
#[no_mangle]
pub extern "C" fn nogo_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Parses a protocol document.
///
/// # Safety
/// `json` must be a NUL-terminated string and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn nogo_script_from_json(
    json: *const c_char,
    out: *mut *mut NogoScript,
) -> NogoStatus {
    guard(|| {
        non_null!(out);
        let text = match read_str(json) {
            Ok(t) => t,
            Err(s) => return s,
        };
        match parse_protocol(text) {
            Ok(script) => {
                *out = Box::into_raw(Box::new(NogoScript(script)));
                NogoStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}

/// Builds a registered demo; `use_param = false` selects its default.
///
/// # Safety
/// `id` must be a NUL-terminated string and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn nogo_script_from_demo(
    id: *const c_char,
    use_param: bool,
    param: f64,
    out: *mut *mut NogoScript,
) -> NogoStatus {
    guard(|| {
        non_null!(out);
        let id = match read_str(id) {
            Ok(t) => t,
            Err(s) => return s,
        };
        match build_demo(id, use_param.then_some(param)) {
            Ok(script) => {
                *out = Box::into_raw(Box::new(NogoScript(script)));
                NogoStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}

/// # Safety
/// `script` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn nogo_script_free(script: *mut NogoScript) {
    if !script.is_null() {
        drop(Box::from_raw(script));
    }
}

/// Analyses a script with Bob as observer. `max_dim = 0` selects the
/// default dimension cap.
///
/// # Safety
/// `script` must be a live handle and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn nogo_analyze(
    script: *const NogoScript,
    mode: NogoMode,
    max_dim: usize,
    out: *mut *mut NogoReport,
) -> NogoStatus {
    guard(|| {
        non_null!(script, out);
        let executor = if max_dim == 0 {
            Executor::default()
        } else {
            Executor::new(max_dim)
        };
        let options = AnalysisOptions {
            executor,
            mode: match mode {
                NogoMode::Purified => Mode::Purified,
                NogoMode::Branches => Mode::Branches,
                NogoMode::Both => Mode::Both,
            },
            ..AnalysisOptions::default()
        };
        match analyze(&(*script).0, &options) {
            Ok(report) => {
                *out = Box::into_raw(Box::new(NogoReport(report)));
                NogoStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}

/// # Safety
/// `report` must be a live handle and `value` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn nogo_report_metric(
    report: *const NogoReport,
    metric: NogoMetric,
    value: *mut f64,
) -> NogoStatus {
    guard(|| {
        non_null!(report, value);
        let r = &(*report).0;
        let field = match metric {
            NogoMetric::Concealment => r.concealment_f,
            NogoMetric::Epsilon => r.epsilon,
            NogoMetric::AttackSuccess => r.attack_success,
            NogoMetric::GlobalOverlap => r.global_overlap,
            NogoMetric::ConcStandard => r.conc_standard,
            NogoMetric::ConcPrime => r.conc_prime,
            NogoMetric::CheatPrime => r.cheat_prime,
            NogoMetric::NoiselessGap => r.noiseless_gap,
            NogoMetric::ModeDeviation => r.mode_deviation,
            NogoMetric::PrunedMass => r.pruned_mass,
        };
        match field {
            Some(v) => {
                *value = v;
                NogoStatus::Ok
            }
            None => {
                set_error(format!("{metric:?} was not computed"));
                NogoStatus::Missing
            }
        }
    })
}

/// Whether the attack succeeds at least as well as the protocol conceals.
///
/// # Safety
/// `report` must be a live handle and `holds` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn nogo_report_nogo_holds(
    report: *const NogoReport,
    holds: *mut bool,
) -> NogoStatus {
    guard(|| {
        non_null!(report, holds);
        match (*report).0.nogo_holds {
            Some(h) => {
                *holds = h;
                NogoStatus::Ok
            }
            None => {
                set_error("no-go check was not computed");
                NogoStatus::Missing
            }
        }
    })
}

/// Canonical JSON for a report; free with [`nogo_string_free`].
///
/// # Safety
/// `report` must be a live handle and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn nogo_report_to_json(
    report: *const NogoReport,
    out: *mut *mut c_char,
) -> NogoStatus {
    guard(|| {
        non_null!(report, out);
        match (*report).0.to_json() {
            Ok(s) => match CString::new(s) {
                Ok(c) => {
                    *out = c.into_raw();
                    NogoStatus::Ok
                }
                Err(_) => {
                    set_error("report contains a NUL byte");
                    NogoStatus::Validation
                }
            },
            Err(e) => fail(e),
        }
    })
}

/// # Safety
/// `report` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn nogo_report_free(report: *mut NogoReport) {
    if !report.is_null() {
        drop(Box::from_raw(report));
    }
}

/// # Safety
/// `s` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn nogo_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Writes `(b0, b1, c, x ⊕ b_c)` to `out[0..4]`.
///
/// # Safety
/// `out` must point to four writable bytes.
#[no_mangle]
pub unsafe extern "C" fn nogo_ot_gate(
    b0: u8,
    b1: u8,
    choice: u8,
    x: u8,
    out: *mut u8,
) -> NogoStatus {
    guard(|| {
        non_null!(out);
        match reversible_ot_gate(b0, b1, choice, x) {
            Ok((a, b, c, d)) => {
                for (i, v) in [a, b, c, d].into_iter().enumerate() {
                    *out.add(i) = v;
                }
                NogoStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}
