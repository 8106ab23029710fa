//! C interface to the ordinal-threshold library.
//!
//! Every fallible call returns an [`OtStatus`]. On failure a message is kept
//! per thread and read with [`ot_last_error`]. Handles are opaque; release
//! them with the matching `*_free` function. Labels are 1-based.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use ordinal_threshold::distributions::{
    build_distribution, DiscreteOrdinalDistribution, DistributionFamily, FamilyKind,
};
use ordinal_threshold::evaluation::{approximation_error, bayes_error};
use ordinal_threshold::risk::{fit, FitConfig, FitResult};
use ordinal_threshold::thresholding::optimal_thresholds;
use ordinal_threshold::{Error, Pmf, SurrogateSpec, TaskLoss};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OtStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    InvalidArgument = 3,
    DimensionMismatch = 4,
    BufferTooSmall = 5,
    Parse = 6,
    NumericalFailure = 7,
    Panic = 8,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OtTask {
    ZeroOne = 0,
    Absolute = 1,
    Squared = 2,
}

impl From<OtTask> for TaskLoss {
    fn from(t: OtTask) -> Self {
        match t {
            OtTask::ZeroOne => TaskLoss::ZeroOne,
            OtTask::Absolute => TaskLoss::Absolute,
            OtTask::Squared => TaskLoss::Squared,
        }
    }
}

/// A discrete population: support points, label distributions, weights.
pub struct OtDistribution(DiscreteOrdinalDistribution);

/// A fitted 1DT and bias vector.
pub struct OtFit(FitResult);

struct Failure(OtStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = match e {
            Error::DimensionMismatch(_) => OtStatus::DimensionMismatch,
            Error::Parse(_) => OtStatus::Parse,
            Error::Diverged { .. } | Error::SingularSystem { .. } | Error::NotBracketed { .. } => {
                OtStatus::NumericalFailure
            }
            _ => OtStatus::InvalidArgument,
        };
        Failure(status, e.to_string())
    }
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> OtStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            OtStatus::Ok
        }
        Ok(Err(Failure(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic".into());
            OtStatus::Panic
        }
    }
}

fn null(what: &str) -> Failure {
    Failure(OtStatus::NullPointer, format!("{what} is null"))
}

unsafe fn deref<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Failure(OtStatus::InvalidUtf8, format!("{what} is not UTF-8")))
}

unsafe fn slice_arg<'a>(p: *const f64, len: usize, what: &str) -> Result<&'a [f64], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn write_out<T>(out: *mut T, value: T, what: &str) -> Result<(), Failure> {
    if out.is_null() {
        return Err(null(what));
    }
    out.write(value);
    Ok(())
}

unsafe fn copy_out(src: &[f64], out: *mut f64, len: usize) -> Result<(), Failure> {
    if len < src.len() {
        return Err(Failure(
            OtStatus::BufferTooSmall,
            format!("need {} values, got room for {len}", src.len()),
        ));
    }
    if out.is_null() {
        return Err(null("output buffer"));
    }
    ptr::copy_nonoverlapping(src.as_ptr(), out, src.len());
    Ok(())
}

fn parse_method(s: &str) -> Result<SurrogateSpec, Failure> {
    s.parse::<SurrogateSpec>().map_err(Failure::from)
}

/// Library version, a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn ot_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message of the last failed call on this thread, or NULL after a
/// successful call. Valid until the next call on the same thread.
#[no_mangle]
pub extern "C" fn ot_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Builds a simulation distribution by name, e.g. `"H-1/3"` or `"O-1-3"`
/// (K = 10, N = 100).
///
/// # Safety
/// `name` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ot_distribution_from_name(name: *const c_char, out: *mut *mut OtDistribution) -> OtStatus {
    guard(|| {
        let kind: FamilyKind = str_arg(name, "name")?.parse()?;
        let dist = build_distribution(&DistributionFamily::standard(kind))?;
        write_out(out, Box::into_raw(Box::new(OtDistribution(dist))), "out")
    })
}

/// Builds a distribution from `n` support points, an `n × k` row-major
/// table of label probabilities and `n` weights. A NULL `weights` means
/// uniform weights.
///
/// # Safety
/// `support` must hold `n` values, `cpds` `n * k` values, `weights` `n`
/// values or be NULL; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn ot_distribution_new(
    support: *const f64,
    cpds: *const f64,
    weights: *const f64,
    n: usize,
    k: usize,
    out: *mut *mut OtDistribution,
) -> OtStatus {
    guard(|| {
        let total = n
            .checked_mul(k)
            .ok_or_else(|| Failure(OtStatus::InvalidArgument, "n * k overflows".into()))?;
        let support = slice_arg(support, n, "support")?.to_vec();
        let rows = slice_arg(cpds, total, "cpds")?;
        let rows = rows
            .chunks(k.max(1))
            .map(|r| Pmf::new(r.to_vec()))
            .collect::<Result<Vec<_>, _>>()?;
        let dist = if weights.is_null() {
            DiscreteOrdinalDistribution::uniform(support, rows)?
        } else {
            DiscreteOrdinalDistribution::new(support, rows, slice_arg(weights, n, "weights")?.to_vec())?
        };
        write_out(out, Box::into_raw(Box::new(OtDistribution(dist))), "out")
    })
}

/// # Safety
/// `dist` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn ot_distribution_free(dist: *mut OtDistribution) {
    if !dist.is_null() {
        drop(Box::from_raw(dist));
    }
}

/// Number of support points `N`.
///
/// # Safety
/// `dist` and `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn ot_distribution_num_points(dist: *const OtDistribution, out: *mut usize) -> OtStatus {
    guard(|| write_out(out, deref(dist, "dist")?.0.num_points(), "out"))
}

/// Number of labels `K`.
///
/// # Safety
/// `dist` and `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn ot_distribution_num_classes(dist: *const OtDistribution, out: *mut usize) -> OtStatus {
    guard(|| write_out(out, deref(dist, "dist")?.0.num_classes(), "out"))
}

/// Minimizes the population surrogate risk of `method` (e.g.
/// `"logi-at-o"`) with full-batch Adam. `epochs = 0` uses the default
/// length.
///
/// # Safety
/// `dist`, `method` and `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn ot_fit(
    dist: *const OtDistribution,
    method: *const c_char,
    epochs: usize,
    out: *mut *mut OtFit,
) -> OtStatus {
    guard(|| {
        let dist = deref(dist, "dist")?;
        let spec = parse_method(str_arg(method, "method")?)?;
        let mut cfg = FitConfig::population();
        if epochs > 0 {
            cfg = cfg.with_epochs(epochs);
        }
        let result = fit(&dist.0, &spec, &cfg)?;
        write_out(out, Box::into_raw(Box::new(OtFit(result))), "out")
    })
}

/// # Safety
/// `fit` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn ot_fit_free(fit: *mut OtFit) {
    if !fit.is_null() {
        drop(Box::from_raw(fit));
    }
}

/// Final surrogate risk.
///
/// # Safety
/// `fit` and `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn ot_fit_risk(fit: *const OtFit, out: *mut f64) -> OtStatus {
    guard(|| write_out(out, deref(fit, "fit")?.0.risk, "out"))
}

/// Copies the `N` fitted 1DT values into `out`, which has room for `len`.
///
/// # Safety
/// `fit` must be valid and `out` must hold `len` values.
#[no_mangle]
pub unsafe extern "C" fn ot_fit_a(fit: *const OtFit, out: *mut f64, len: usize) -> OtStatus {
    guard(|| copy_out(&deref(fit, "fit")?.0.a, out, len))
}

/// Copies the `K - 1` fitted biases into `out`, which has room for `len`.
///
/// # Safety
/// `fit` must be valid and `out` must hold `len` values.
#[no_mangle]
pub unsafe extern "C" fn ot_fit_b(fit: *const OtFit, out: *mut f64, len: usize) -> OtStatus {
    guard(|| copy_out(deref(fit, "fit")?.0.b.values(), out, len))
}

/// Task-optimal thresholds for 1DT values `a` (one per support point).
/// Writes `K - 1` thresholds into `t_out` and the task risk into `risk`.
///
/// # Safety
/// `a` must hold `n` values, `t_out` `t_len` values; pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn ot_optimal_thresholds(
    dist: *const OtDistribution,
    a: *const f64,
    n: usize,
    task: OtTask,
    t_out: *mut f64,
    t_len: usize,
    risk: *mut f64,
) -> OtStatus {
    guard(|| {
        let dist = &deref(dist, "dist")?.0;
        let a = slice_arg(a, n, "a")?;
        let opt = optimal_thresholds(a, dist.cpds(), dist.weights(), task.into())?;
        copy_out(&opt.t, t_out, t_len)?;
        write_out(risk, opt.risk, "risk")
    })
}

/// Mean task loss of labeling 1DT values `a` with thresholds `t`. For the
/// squared task this is the MSE.
///
/// # Safety
/// `a` must hold `n` values and `t` `t_len` values; pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn ot_approximation_error(
    dist: *const OtDistribution,
    a: *const f64,
    n: usize,
    t: *const f64,
    t_len: usize,
    task: OtTask,
    out: *mut f64,
) -> OtStatus {
    guard(|| {
        let dist = &deref(dist, "dist")?.0;
        let a = slice_arg(a, n, "a")?;
        let t = slice_arg(t, t_len, "t")?;
        if a.len() != dist.num_points() || t.len() + 1 != dist.num_classes() {
            return Err(Failure(
                OtStatus::DimensionMismatch,
                format!(
                    "a {}, t {} for N {} K {}",
                    a.len(),
                    t.len(),
                    dist.num_points(),
                    dist.num_classes()
                ),
            ));
        }
        write_out(out, approximation_error(dist, a, t, task.into()), "out")
    })
}

/// Mean task loss of the Bayes rule.
///
/// # Safety
/// `dist` and `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn ot_bayes_error(dist: *const OtDistribution, task: OtTask, out: *mut f64) -> OtStatus {
    guard(|| write_out(out, bayes_error(&deref(dist, "dist")?.0, task.into()), "out"))
}

/// Surrogate loss of `method` at 1DT value `a`, biases `b` (`b_len = K - 1`)
/// and label `y`.
///
/// # Safety
/// `method` must be a NUL-terminated string, `b` must hold `b_len` values
/// and `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn ot_surrogate_loss(
    method: *const c_char,
    a: f64,
    b: *const f64,
    b_len: usize,
    y: usize,
    out: *mut f64,
) -> OtStatus {
    guard(|| {
        let spec = parse_method(str_arg(method, "method")?)?;
        let b = slice_arg(b, b_len, "b")?;
        if b.len() < 2 || !(1..=b.len() + 1).contains(&y) {
            return Err(Failure(
                OtStatus::InvalidArgument,
                format!("label {y} with {} biases", b.len()),
            ));
        }
        write_out(out, spec.loss(a, b, y), "out")
    })
}
