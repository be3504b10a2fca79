//! C interface. Objects cross the boundary as opaque handles that the caller
//! releases with the matching `_free` function. Every fallible call returns a
//! `BpStatus`; on failure the message is available from `bp_last_error`
//! until the next failing call on the same thread.

#![allow(clippy::missing_safety_doc)]

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use bayes_poison::cli::run::{run_job, Job};
use bayes_poison::cli::{RunConfig, RunResult};
use bayes_poison::{Budget, Error, FeasibleSet, WeightVector};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BpStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Config = 3,
    Io = 4,
    ConstraintViolation = 5,
    Unsupported = 6,
    Numerical = 7,
    Internal = 8,
    Panic = 9,
}

/// A validated run configuration.
pub struct BpConfig(RunConfig);

/// The outcome of one attack job.
pub struct BpResult(RunResult);

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn status_of(e: &Error) -> BpStatus {
    match e.root() {
        Error::InvalidArgument(_) => BpStatus::InvalidArgument,
        Error::Config(_) | Error::Json(_) | Error::Csv(_) => BpStatus::Config,
        Error::Io { .. } => BpStatus::Io,
        Error::ConstraintViolation(_) => BpStatus::ConstraintViolation,
        Error::Unsupported(_) => BpStatus::Unsupported,
        Error::Domain(_)
        | Error::SamplerHealth { .. }
        | Error::OptimizationFailure { .. }
        | Error::SaddlePoint { .. } => BpStatus::Numerical,
        _ => BpStatus::Internal,
    }
}

fn guard(f: impl FnOnce() -> Result<(), (BpStatus, String)>) -> BpStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => BpStatus::Ok,
        Ok(Err((status, msg))) => {
            set_error(&msg);
            status
        }
        Err(_) => {
            set_error("panic inside bayes-poison");
            BpStatus::Panic
        }
    }
}

fn lib_err(e: Error) -> (BpStatus, String) {
    (status_of(&e), e.to_string())
}

fn null(what: &str) -> (BpStatus, String) {
    (BpStatus::NullPointer, format!("{what} is null"))
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, (BpStatus, String)> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| (BpStatus::InvalidArgument, format!("{what} is not UTF-8")))
}

unsafe fn slice_arg<'a>(
    p: *const f64,
    len: usize,
    what: &str,
) -> Result<&'a [f64], (BpStatus, String)> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

/// Message of the last failure on this thread; empty if none. The pointer is
/// owned by the library.
#[no_mangle]
pub extern "C" fn bp_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

#[no_mangle]
pub extern "C" fn bp_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Parses a JSON run configuration. Relative dataset paths resolve against
/// `base_dir`, which may be null for the working directory.
/// Requires: `json` and a non-null `base_dir` must be NUL-terminated strings; `out`
/// must be writable.
#[no_mangle]
pub unsafe extern "C" fn bp_config_from_json(
    json: *const c_char,
    base_dir: *const c_char,
    out: *mut *mut BpConfig,
) -> BpStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = ptr::null_mut();
        let text = str_arg(json, "json")?;
        let base = if base_dir.is_null() {
            "."
        } else {
            str_arg(base_dir, "base_dir")?
        };
        let cfg = RunConfig::from_json(text, Path::new(base)).map_err(lib_err)?;
        *out = Box::into_raw(Box::new(BpConfig(cfg)));
        Ok(())
    })
}

/// Requires: `path` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn bp_config_load(path: *const c_char, out: *mut *mut BpConfig) -> BpStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = ptr::null_mut();
        let cfg = RunConfig::load(Path::new(str_arg(path, "path")?)).map_err(lib_err)?;
        *out = Box::into_raw(Box::new(BpConfig(cfg)));
        Ok(())
    })
}

/// Requires: `cfg` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn bp_config_free(cfg: *mut BpConfig) {
    if !cfg.is_null() {
        drop(Box::from_raw(cfg));
    }
}

/// Number of attacks listed in the configuration.
/// Requires: `cfg` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn bp_config_attack_count(cfg: *const BpConfig, out: *mut usize) -> BpStatus {
    guard(|| {
        let cfg = cfg.as_ref().ok_or_else(|| null("cfg"))?;
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        *out = cfg.0.attacks.len();
        Ok(())
    })
}

/// Runs attack `attack_index` on replication `replication` with run seed
/// `seed`, then evaluates the result. Seeds match the command line tool.
/// Requires: `cfg` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn bp_attack_run(
    cfg: *const BpConfig,
    attack_index: usize,
    replication: usize,
    seed: u64,
    out: *mut *mut BpResult,
) -> BpStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = ptr::null_mut();
        let cfg = &cfg.as_ref().ok_or_else(|| null("cfg"))?.0;
        if attack_index >= cfg.attacks.len() {
            return Err((
                BpStatus::InvalidArgument,
                format!(
                    "attack index {attack_index} out of range; the configuration has {}",
                    cfg.attacks.len()
                ),
            ));
        }
        let job = Job {
            cell: 0,
            sweep: None,
            method_index: attack_index,
            replication,
        };
        let res = run_job(cfg, &job, seed).map_err(lib_err)?;
        *out = Box::into_raw(Box::new(BpResult(res)));
        Ok(())
    })
}

/// Requires: `res` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn bp_result_free(res: *mut BpResult) {
    if !res.is_null() {
        drop(Box::from_raw(res));
    }
}

/// Requires: `res` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn bp_result_weights_len(res: *const BpResult, out: *mut usize) -> BpStatus {
    guard(|| {
        let res = res.as_ref().ok_or_else(|| null("res"))?;
        *out.as_mut().ok_or_else(|| null("out"))? = res.0.w_star.len();
        Ok(())
    })
}

/// Copies the integer weights into `buf`, which must hold exactly
/// `bp_result_weights_len` values.
/// Requires: `res` must be a live handle; `buf` must be writable for `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn bp_result_weights(
    res: *const BpResult,
    buf: *mut f64,
    len: usize,
) -> BpStatus {
    guard(|| {
        let w = &res.as_ref().ok_or_else(|| null("res"))?.0.w_star;
        if len != w.len() {
            return Err((
                BpStatus::InvalidArgument,
                format!("buffer holds {len} values, result has {}", w.len()),
            ));
        }
        if buf.is_null() {
            return Err(null("buf"));
        }
        std::slice::from_raw_parts_mut(buf, len).copy_from_slice(w);
        Ok(())
    })
}

/// KL to the target at the attack weights, and at `w = 1` when `baseline` is
/// non-null. Unsupported when the target has no closed form or Laplace KL.
/// Requires: `res` must be a live handle; `kl` and a non-null `baseline` must be
/// writable.
#[no_mangle]
pub unsafe extern "C" fn bp_result_kl(
    res: *const BpResult,
    kl: *mut f64,
    baseline: *mut f64,
) -> BpStatus {
    guard(|| {
        let r = &res.as_ref().ok_or_else(|| null("res"))?.0;
        let kl = kl.as_mut().ok_or_else(|| null("kl"))?;
        let missing = || {
            (
                BpStatus::Unsupported,
                "the target has no KL value".to_string(),
            )
        };
        *kl = r.eval.kl_to_target.value.ok_or_else(missing)?;
        if let Some(b) = baseline.as_mut() {
            *b = r.baseline.kl_to_target.value.ok_or_else(missing)?;
        }
        Ok(())
    })
}

/// The full result document as JSON. Release it with `bp_string_free`.
/// Requires: `res` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn bp_result_to_json(
    res: *const BpResult,
    out: *mut *mut c_char,
) -> BpStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = ptr::null_mut();
        let r = &res.as_ref().ok_or_else(|| null("res"))?.0;
        let text = serde_json::to_string(r).map_err(|e| (BpStatus::Internal, e.to_string()))?;
        *out = CString::new(text)
            .map_err(|e| (BpStatus::Internal, e.to_string()))?
            .into_raw();
        Ok(())
    })
}

/// Requires: `s` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn bp_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Euclidean projection of `v` onto the feasible set with budget `b` and cap
/// `l`, written to `out`.
/// Requires: `v` must be readable and `out` writable for `n` doubles.
#[no_mangle]
pub unsafe extern "C" fn bp_project(
    v: *const f64,
    n: usize,
    b: u32,
    l: u32,
    out: *mut f64,
) -> BpStatus {
    guard(|| {
        let v = slice_arg(v, n, "v")?;
        let fs = FeasibleSet::new(n, Budget::new(b, l).map_err(lib_err)?);
        let w = fs.project(v).map_err(lib_err)?;
        write_out(out, w.as_slice())
    })
}

/// Nearest integer point of the feasible set to a feasible `w`.
/// Requires: `w` must be readable and `out` writable for `n` doubles.
#[no_mangle]
pub unsafe extern "C" fn bp_round(
    w: *const f64,
    n: usize,
    b: u32,
    l: u32,
    out: *mut f64,
) -> BpStatus {
    guard(|| {
        let w = WeightVector::new(slice_arg(w, n, "w")?.to_vec()).map_err(lib_err)?;
        let fs = FeasibleSet::new(n, Budget::new(b, l).map_err(lib_err)?);
        let r = fs.round_constrained(&w).map_err(lib_err)?;
        write_out(out, r.as_slice())
    })
}

unsafe fn write_out(out: *mut f64, values: &[f64]) -> Result<(), (BpStatus, String)> {
    if values.is_empty() {
        return Ok(());
    }
    if out.is_null() {
        return Err(null("out"));
    }
    std::slice::from_raw_parts_mut(out, values.len()).copy_from_slice(values);
    Ok(())
}
