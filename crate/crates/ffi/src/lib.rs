//! C ABI for the z2flow library.
//!
//! Models travel through opaque handles created from JSON documents or the
//! built-in fixtures; every fallible call returns a status code mirroring the
//! CLI exit-code contract (0 ok, 1 I/O, 2 invalid input, 3 numerical
//! refusal) and leaves a human-readable message readable through
//! [`z2f_last_error`]. Panics are caught at the boundary and reported as
//! `Z2F_STATUS_PANIC` instead of unwinding into foreign frames.
//!
//! The C header is generated into `include/z2flow.h` at build time.

use std::cell::RefCell;
use std::ffi::{c_char, c_int, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use z2flow::bulk::{bec_verify, bulk_index, BecOptions, BulkOptions};
use z2flow::error::CoreError;
use z2flow::flow::{sf_tau_circle, sf_tau_line, EpsPolicy, FlowParams};
use z2flow::lattice::{edge_index, load_model, EdgeOptions, TightBindingModel};
use z2flow::path::PathDomain;

/// Status codes returned by every fallible entry point.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Z2fStatus {
    Ok = 0,
    IoError = 1,
    InvalidInput = 2,
    NumericalRefusal = 3,
    NullArgument = 4,
    Panic = 5,
}

/// Opaque handle to a validated tight-binding model.
pub struct Z2fModel {
    inner: TightBindingModel,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::new("").unwrap());
}

fn set_error(msg: &str) {
    let sanitized = msg.replace('\0', " ");
    LAST_ERROR.with(|slot| {
        *slot.borrow_mut() = CString::new(sanitized).unwrap_or_default();
    });
}

fn status_of(e: &CoreError) -> Z2fStatus {
    match e.exit_class() {
        1 => Z2fStatus::IoError,
        2 => Z2fStatus::InvalidInput,
        _ => Z2fStatus::NumericalRefusal,
    }
}

fn guard(body: impl FnOnce() -> Z2fStatus + std::panic::UnwindSafe) -> Z2fStatus {
    match catch_unwind(body) {
        Ok(status) => status,
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic in library call".into());
            set_error(&msg);
            Z2fStatus::Panic
        }
    }
}

/// Message describing the most recent failure on this thread. The pointer
/// stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn z2f_last_error() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ptr())
}

/// Parse and validate a model from a JSON document (see the README for the
/// schema). On success writes a heap-allocated handle to `out`; release it
/// with `z2f_model_free`.
///
/// # Safety
/// `json` must be a valid NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn z2f_model_from_json(
    json: *const c_char,
    out: *mut *mut Z2fModel,
) -> Z2fStatus {
    if json.is_null() || out.is_null() {
        set_error("null argument");
        return Z2fStatus::NullArgument;
    }
    let text = match CStr::from_ptr(json).to_str() {
        Ok(t) => t.to_owned(),
        Err(_) => {
            set_error("model JSON is not valid UTF-8");
            return Z2fStatus::InvalidInput;
        }
    };
    guard(AssertUnwindSafe(move || match load_model(&text) {
        Ok(model) => {
            *out = Box::into_raw(Box::new(Z2fModel { inner: model }));
            Z2fStatus::Ok
        }
        Err(e) => {
            set_error(&e.to_string());
            status_of(&e)
        }
    }))
}

/// Built-in BHZ-type model with the given mass parameter.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn z2f_model_bhz(mass: f64, out: *mut *mut Z2fModel) -> Z2fStatus {
    if out.is_null() {
        set_error("null argument");
        return Z2fStatus::NullArgument;
    }
    guard(AssertUnwindSafe(move || {
        let model = z2flow::fixtures::bhz_model(mass);
        *out = Box::into_raw(Box::new(Z2fModel { inner: model }));
        Z2fStatus::Ok
    }))
}

/// Built-in trivial atomic insulator.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn z2f_model_atomic(out: *mut *mut Z2fModel) -> Z2fStatus {
    if out.is_null() {
        set_error("null argument");
        return Z2fStatus::NullArgument;
    }
    guard(AssertUnwindSafe(move || {
        let model = z2flow::fixtures::atomic_model();
        *out = Box::into_raw(Box::new(Z2fModel { inner: model }));
        Z2fStatus::Ok
    }))
}

/// Release a model handle. Passing NULL is a no-op.
///
/// # Safety
/// `model` must come from one of the constructors and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn z2f_model_free(model: *mut Z2fModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

unsafe fn model_ref<'a>(model: *const Z2fModel) -> Option<&'a TightBindingModel> {
    model.as_ref().map(|m| &m.inner)
}

/// Z2 bulk invariant (Wannier-center partner switching). `t_points` tracks
/// the half cycle, `s_points` resolves each Wilson loop; 0 picks the default
/// (40 and 100).
///
/// # Safety
/// `model` and `out_value` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn z2f_bulk_index(
    model: *const Z2fModel,
    t_points: u32,
    s_points: u32,
    out_value: *mut c_int,
) -> Z2fStatus {
    let Some(m) = model_ref(model) else {
        set_error("null model");
        return Z2fStatus::NullArgument;
    };
    if out_value.is_null() {
        set_error("null output pointer");
        return Z2fStatus::NullArgument;
    }
    guard(AssertUnwindSafe(move || {
        let opts = BulkOptions {
            t_points: if t_points == 0 { 40 } else { t_points as usize },
            s_points: if s_points == 0 {
                100
            } else {
                s_points as usize
            },
            ..BulkOptions::default()
        };
        match bulk_index(m, &opts) {
            Ok(rep) => {
                *out_value = rep.value.value() as c_int;
                Z2fStatus::Ok
            }
            Err(e) => {
                set_error(&e.to_string());
                status_of(&e)
            }
        }
    }))
}

/// Z2 edge invariant (half-spectral flow of the truncated edge family with
/// left-edge localization filtering). Zeros pick the defaults (30 sites,
/// 400 scan points, threshold 0.9).
///
/// # Safety
/// `model` and `out_value` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn z2f_edge_index(
    model: *const Z2fModel,
    sites: u32,
    t_points: u32,
    loc_threshold: f64,
    out_value: *mut c_int,
) -> Z2fStatus {
    let Some(m) = model_ref(model) else {
        set_error("null model");
        return Z2fStatus::NullArgument;
    };
    if out_value.is_null() {
        set_error("null output pointer");
        return Z2fStatus::NullArgument;
    }
    guard(AssertUnwindSafe(move || {
        let opts = EdgeOptions {
            t_points: if t_points == 0 {
                400
            } else {
                t_points as usize
            },
            loc_threshold: if loc_threshold <= 0.0 {
                0.9
            } else {
                loc_threshold
            },
            ..EdgeOptions::default()
        };
        let sites = if sites == 0 { 30 } else { sites as usize };
        match edge_index(m, sites, &opts) {
            Ok(rep) => {
                *out_value = rep.value.value() as c_int;
                Z2fStatus::Ok
            }
            Err(e) => {
                set_error(&e.to_string());
                status_of(&e)
            }
        }
    }))
}

/// Bulk-edge correspondence: computes both invariants and their equality
/// verdict. Zeros pick the defaults.
///
/// # Safety
/// `model` and the output pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn z2f_bec_verify(
    model: *const Z2fModel,
    sites: u32,
    out_bulk: *mut c_int,
    out_edge: *mut c_int,
    out_equal: *mut bool,
) -> Z2fStatus {
    let Some(m) = model_ref(model) else {
        set_error("null model");
        return Z2fStatus::NullArgument;
    };
    if out_bulk.is_null() || out_edge.is_null() || out_equal.is_null() {
        set_error("null output pointer");
        return Z2fStatus::NullArgument;
    }
    guard(AssertUnwindSafe(move || {
        let opts = BecOptions {
            n_sites: if sites == 0 { 30 } else { sites as usize },
            ..BecOptions::default()
        };
        match bec_verify(m, &opts) {
            Ok(rep) => {
                *out_bulk = rep.bulk.value.value() as c_int;
                *out_edge = rep.edge.value.value() as c_int;
                *out_equal = rep.equal;
                Z2fStatus::Ok
            }
            Err(e) => {
                set_error(&e.to_string());
                status_of(&e)
            }
        }
    }))
}

/// Half-spectral flow of a built-in abstract family (`arctan-pair`,
/// `shifted-arctan-pair`, `constant`, `constant-circle`, `cos-sin-circle`,
/// `sin-rank2-circle`).
///
/// # Safety
/// `name` must be a valid NUL-terminated string, `out_value` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn z2f_sf_tau_fixture(
    name: *const c_char,
    out_value: *mut c_int,
) -> Z2fStatus {
    if name.is_null() || out_value.is_null() {
        set_error("null argument");
        return Z2fStatus::NullArgument;
    }
    let name = match CStr::from_ptr(name).to_str() {
        Ok(n) => n.to_owned(),
        Err(_) => {
            set_error("fixture name is not valid UTF-8");
            return Z2fStatus::InvalidInput;
        }
    };
    guard(AssertUnwindSafe(move || {
        let Some(path) = z2flow::fixtures::builtin_path(&name) else {
            set_error(&format!("unknown fixture '{name}'"));
            return Z2fStatus::InvalidInput;
        };
        let fp = FlowParams::default();
        let value = match path.domain() {
            PathDomain::Line { .. } => sf_tau_line(&path, &fp),
            PathDomain::Circle => {
                sf_tau_circle(&path, &fp, EpsPolicy::ShiftIfSingular).map(|r| r.value)
            }
        };
        match value {
            Ok(v) => {
                *out_value = v.value() as c_int;
                Z2fStatus::Ok
            }
            Err(e) => {
                set_error(&e.to_string());
                status_of(&e)
            }
        }
    }))
}
