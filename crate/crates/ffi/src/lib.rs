//! C ABI over `xikernel`.
//!
//! Structured inputs (domains, weights, functionals, ideals, polynomials) are
//! passed as JSON strings in the same schema the CLI configs use. Complex
//! points are passed as parallel `re`/`im` arrays. Every entry point returns
//! an [`XkStatus`]; on failure, [`xk_last_error`] describes what went wrong.
//! Strings handed out by the library must be released with [`xk_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use serde_json::{json, Map, Value};
use xikernel::bergman::{BasisSpec, GramModel, GramOptions};
use xikernel::config::RunConfig;
use xikernel::functional::Functional;
use xikernel::ideal::{IdealFamily, JetIdeal};
use xikernel::poly::{Poly, C64};
use xikernel::weights::{Polydisc, WeightSpec};
use xikernel::Error;

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum XkStatus {
    Ok = 0,
    NullPointer = 1,
    /// Malformed UTF-8 or JSON.
    Parse = 2,
    InvalidArgument = 3,
    OutsideDomain = 4,
    /// Every basis element has infinite norm; kernels are zero.
    EmptyModel = 5,
    /// The parameter is outside the regular set of the ideal family.
    OutsideRegularSet = 6,
    /// Any other library error.
    Compute = 7,
    Panic = 8,
}

/// Gram model of a weighted space on a polydisc.
pub struct XkModel(GramModel);

/// Ideal family with its annihilator and functionals.
pub struct XkIdeal(JetIdeal);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let s = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(s).ok());
}

struct Fail(XkStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Json(_) => XkStatus::Parse,
            Error::OutsideDomain => XkStatus::OutsideDomain,
            Error::EmptyModel => XkStatus::EmptyModel,
            Error::OutsideRegularSet { .. } => XkStatus::OutsideRegularSet,
            Error::ArityMismatch { .. } | Error::InvalidParameter(_) | Error::EmptyGrid => XkStatus::InvalidArgument,
            _ => XkStatus::Compute,
        };
        Fail(code, e.to_string())
    }
}

impl From<serde_json::Error> for Fail {
    fn from(e: serde_json::Error) -> Self {
        Fail(XkStatus::Parse, format!("json: {e}"))
    }
}

fn null() -> Fail {
    Fail(XkStatus::NullPointer, "null pointer argument".into())
}

fn guard(f: impl FnOnce() -> Result<(), Fail>) -> XkStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            XkStatus::Ok
        }
        Ok(Err(Fail(code, msg))) => {
            set_error(msg);
            code
        }
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_error(format!("panic: {msg}"));
            XkStatus::Panic
        }
    }
}

unsafe fn str_arg<'a>(p: *const c_char) -> Result<&'a str, Fail> {
    if p.is_null() {
        return Err(null());
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Fail(XkStatus::Parse, "string is not valid UTF-8".into()))
}

unsafe fn json_arg<T: serde::de::DeserializeOwned>(p: *const c_char) -> Result<T, Fail> {
    Ok(serde_json::from_str(str_arg(p)?)?)
}

unsafe fn point_arg(re: *const f64, im: *const f64, len: usize) -> Result<Vec<C64>, Fail> {
    if len == 0 {
        return Ok(Vec::new());
    }
    if re.is_null() || im.is_null() {
        return Err(null());
    }
    let re = std::slice::from_raw_parts(re, len);
    let im = std::slice::from_raw_parts(im, len);
    Ok(re.iter().zip(im).map(|(&a, &b)| C64::new(a, b)).collect())
}

unsafe fn out_arg<'a, T>(p: *mut T) -> Result<&'a mut T, Fail> {
    p.as_mut().ok_or_else(null)
}

fn to_c_string(s: String) -> Result<*mut c_char, Fail> {
    CString::new(s)
        .map(CString::into_raw)
        .map_err(|_| Fail(XkStatus::Compute, "output contains a NUL byte".into()))
}

/// Message for the most recent failure on this thread, or NULL after a
/// success. The pointer stays valid until the next library call on this
/// thread.
#[no_mangle]
pub extern "C" fn xk_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn xk_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Release a string returned by this library. NULL is ignored.
///
/// # Safety
/// `s` must come from this library and must not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn xk_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Assemble the Gram model of `(domain, weight)` on polynomials of total
/// degree at most `degree`. `weight_json` must have w-arity 0.
///
/// # Safety
/// String arguments must be NUL-terminated; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn xk_model_new(
    domain_json: *const c_char,
    weight_json: *const c_char,
    degree: usize,
    force_quadrature: bool,
    out: *mut *mut XkModel,
) -> XkStatus {
    guard(|| {
        let out = out_arg(out)?;
        *out = ptr::null_mut();
        let domain: Polydisc = json_arg(domain_json)?;
        let weight: WeightSpec = json_arg(weight_json)?;
        let opts = GramOptions {
            force_quadrature,
            ..GramOptions::default()
        };
        let m = GramModel::assemble(&domain, &weight, &BasisSpec::TotalDegree(degree), &opts)?;
        *out = Box::into_raw(Box::new(XkModel(m)));
        Ok(())
    })
}

/// # Safety
/// `model` must come from [`xk_model_new`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn xk_model_free(model: *mut XkModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Number of orthonormal basis elements kept.
///
/// # Safety
/// `model` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn xk_model_rank(model: *const XkModel, out: *mut usize) -> XkStatus {
    guard(|| {
        let m = model.as_ref().ok_or_else(null)?;
        *out_arg(out)? = m.0.rank();
        Ok(())
    })
}

/// Kernel value `K(z)` for the functional in `functional_json` at the point
/// `z = re + i·im` of length `n`.
///
/// # Safety
/// `model` must be a live handle; `re`/`im` must hold `n` values.
#[no_mangle]
pub unsafe extern "C" fn xk_model_kernel(
    model: *const XkModel,
    functional_json: *const c_char,
    re: *const f64,
    im: *const f64,
    n: usize,
    out: *mut f64,
) -> XkStatus {
    guard(|| {
        let m = model.as_ref().ok_or_else(null)?;
        let out = out_arg(out)?;
        let xi: Functional = json_arg(functional_json)?;
        let z = point_arg(re, im, n)?;
        if !m.0.domain().contains(&z) {
            return Err(Error::OutsideDomain.into());
        }
        *out = m.0.xi_kernel(&xi, &z)?;
        Ok(())
    })
}

/// Build the annihilator of an ideal family. `grid_re`/`grid_im` hold
/// `n_points` base points of arity `m` stored point after point; they are
/// tried first when searching for the generic rank. They may be NULL when
/// `n_points` is 0.
///
/// # Safety
/// String arguments must be NUL-terminated; grid arrays must hold
/// `n_points * m` values; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn xk_ideal_new(
    ideal_json: *const c_char,
    base_json: *const c_char,
    grid_re: *const f64,
    grid_im: *const f64,
    n_points: usize,
    seed: u64,
    out: *mut *mut XkIdeal,
) -> XkStatus {
    guard(|| {
        let out = out_arg(out)?;
        *out = ptr::null_mut();
        let fam: IdealFamily = json_arg(ideal_json)?;
        let base: Polydisc = json_arg(base_json)?;
        let m = base.arity();
        let flat = point_arg(grid_re, grid_im, n_points * m)?;
        let grid: Vec<Vec<C64>> = if m == 0 {
            Vec::new()
        } else {
            flat.chunks(m).map(<[C64]>::to_vec).collect()
        };
        let jet = JetIdeal::build(&fam, &grid, &base, seed)?;
        *out = Box::into_raw(Box::new(XkIdeal(jet)));
        Ok(())
    })
}

/// # Safety
/// `ideal` must come from [`xk_ideal_new`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn xk_ideal_free(ideal: *mut XkIdeal) {
    if !ideal.is_null() {
        drop(Box::from_raw(ideal));
    }
}

/// Generic rank of the coefficient matrix.
///
/// # Safety
/// `ideal` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn xk_ideal_rank(ideal: *const XkIdeal, out: *mut usize) -> XkStatus {
    guard(|| {
        let h = ideal.as_ref().ok_or_else(null)?;
        *out_arg(out)? = h.0.annihilator.rank;
        Ok(())
    })
}

/// Whether `w` lies in the regular set where the annihilator is exact.
///
/// # Safety
/// `ideal` must be a live handle; `re`/`im` must hold `m` values.
#[no_mangle]
pub unsafe extern "C" fn xk_ideal_in_regular_set(
    ideal: *const XkIdeal,
    re: *const f64,
    im: *const f64,
    m: usize,
    out: *mut bool,
) -> XkStatus {
    guard(|| {
        let h = ideal.as_ref().ok_or_else(null)?;
        let out = out_arg(out)?;
        *out = h.0.in_u(&point_arg(re, im, m)?)?;
        Ok(())
    })
}

/// Membership of the fiber polynomial `poly_json` in the fiber ideal at `w`
/// modulo the jet order, decided by the annihilator functionals.
///
/// # Safety
/// `ideal` must be a live handle; `re`/`im` must hold `m` values.
#[no_mangle]
pub unsafe extern "C" fn xk_ideal_contains(
    ideal: *const XkIdeal,
    re: *const f64,
    im: *const f64,
    m: usize,
    poly_json: *const c_char,
    out: *mut bool,
) -> XkStatus {
    guard(|| {
        let h = ideal.as_ref().ok_or_else(null)?;
        let out = out_arg(out)?;
        let f: Poly = json_arg(poly_json)?;
        *out = h.0.membership_by_functionals(&point_arg(re, im, m)?, &f)?;
        Ok(())
    })
}

/// Annihilator matrix, rank data and functionals as JSON.
///
/// # Safety
/// `ideal` must be a live handle; the result must be released with
/// [`xk_string_free`].
#[no_mangle]
pub unsafe extern "C" fn xk_ideal_to_json(ideal: *const XkIdeal, out: *mut *mut c_char) -> XkStatus {
    guard(|| {
        let h = ideal.as_ref().ok_or_else(null)?;
        let out = out_arg(out)?;
        *out = ptr::null_mut();
        let v = json!({
            "annihilator": h.0.annihilator,
            "functionals": h.0.functionals,
        });
        *out = to_c_string(serde_json::to_string(&v)?)?;
        Ok(())
    })
}

/// Run a full CLI config. The result is a JSON object with keys `failed`,
/// `warnings`, `summary` and `artifacts` (file name to contents). A failed
/// verification is reported through `failed`, not through the status.
///
/// # Safety
/// `config_json` must be NUL-terminated; the result must be released with
/// [`xk_string_free`].
#[no_mangle]
pub unsafe extern "C" fn xk_run_config(
    config_json: *const c_char,
    seed: *const u64,
    out: *mut *mut c_char,
) -> XkStatus {
    guard(|| {
        let out = out_arg(out)?;
        *out = ptr::null_mut();
        let cfg = RunConfig::from_json(str_arg(config_json)?)?;
        let run = xikernel::cli::run(&cfg, seed.as_ref().copied())?;
        let artifacts: Map<String, Value> = run
            .artifacts
            .into_iter()
            .map(|a| (a.name, Value::String(a.contents)))
            .collect();
        let v = json!({
            "command": cfg.command(),
            "failed": run.failed,
            "warnings": run.warnings,
            "summary": run.summary,
            "artifacts": artifacts,
        });
        *out = to_c_string(serde_json::to_string(&v)?)?;
        Ok(())
    })
}
