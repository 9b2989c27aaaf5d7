//! C ABI for the dfokit toolkit.
//!
//! Problems are opaque handles created from TOML text or files; every
//! function returns a status code and writes results through out-pointers.
//! String and slice arguments are borrowed for the call only. Handles are
//! not thread-safe to mutate but all operations here are read-only, so one
//! handle may be shared across threads. On any non-OK status a thread-local
//! message is available from `dfokit_last_error`.

use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::sync::OnceLock;

use dfokit::cli::{self, LoadedProblem};
use dfokit::error::Error;
use dfokit::norms::{h2_norm, hinf_norm, NormOptions};
use dfokit::optimizers::{multistart, OptimizerConfig, StopReason};
use dfokit::problems::{make_filter_objective, FilterObjective, Objective};
use dfokit::statespace::{Matrix, StateSpace};
use dfokit::stationarity::{probe, Classification, ProbeConfig};

/// Status codes returned by every fallible entry point.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DfokitStatus {
    Ok = 0,
    /// A problem, filter, or point failed to parse or validate.
    ParseError = 2,
    /// The supplied point violates the problem's constraints.
    Infeasible = 3,
    /// A numerical kernel failed (instability, non-convergence).
    NumericalError = 4,
    /// Null pointer, bad length, or unknown name.
    InvalidArgument = 5,
    /// An internal invariant failed; details in `dfokit_last_error`.
    InternalError = 6,
}

/// Why an optimization run stopped.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DfokitStopReason {
    ToleranceF = 0,
    ToleranceX = 1,
    Budget = 2,
    NoImprovement = 3,
}

/// Stationarity verdict of the probe.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DfokitClassification {
    DescentFound = 0,
    ApproximatelyStationary = 1,
    Infeasible = 2,
}

/// Outcome of one optimization run.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct DfokitRunStats {
    pub final_value: f64,
    pub evaluations: u64,
    pub stop_reason: DfokitStopReason,
    /// Derived per-run seed actually used.
    pub seed: u64,
}

/// Filter evaluation report; `value` is +inf when the filter is infeasible.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct DfokitEvalReport {
    pub positive: bool,
    pub stable: bool,
    pub value: f64,
    /// Peak frequency in [0, pi]; NaN for H2 objectives.
    pub peak_omega: f64,
    /// Objective of the same filter truncated to its D-hat block.
    pub static_value: f64,
    /// Percent change from the truncation.
    pub truncation_pct: f64,
}

/// Opaque problem handle: a parsed synthesis problem plus its objective.
pub struct DfokitProblem {
    loaded: LoadedProblem,
    objective: FilterObjective,
}

thread_local! {
    static LAST_ERROR: std::cell::RefCell<CString> =
        std::cell::RefCell::new(CString::new("").unwrap());
}

fn set_error(msg: &str) {
    let clean = msg.replace('\0', " ");
    LAST_ERROR.with(|slot| {
        *slot.borrow_mut() = CString::new(clean).unwrap_or_default();
    });
}

fn status_for(e: &Error) -> DfokitStatus {
    match e {
        Error::Parse(_) | Error::Io { .. } | Error::Dimension(_) => DfokitStatus::ParseError,
        Error::InfeasibleStart => DfokitStatus::Infeasible,
        Error::Unstable { .. } | Error::Numerical(_) | Error::SingularResolvent { .. } => {
            DfokitStatus::NumericalError
        }
    }
}

fn guarded(f: impl FnOnce() -> DfokitStatus) -> DfokitStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(status) => status,
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic in dfokit".into());
            set_error(&msg);
            DfokitStatus::InternalError
        }
    }
}

/// Version string of the library; static storage, never freed.
#[no_mangle]
pub extern "C" fn dfokit_version() -> *const c_char {
    static VERSION: OnceLock<CString> = OnceLock::new();
    VERSION
        .get_or_init(|| CString::new(env!("CARGO_PKG_VERSION")).unwrap())
        .as_ptr()
}

/// Message for the most recent failure on this thread. The pointer stays
/// valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn dfokit_last_error() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ptr())
}

unsafe fn cstr<'a>(ptr: *const c_char) -> Option<&'a str> {
    if ptr.is_null() {
        return None;
    }
    CStr::from_ptr(ptr).to_str().ok()
}

fn build_handle(loaded: LoadedProblem) -> Result<Box<DfokitProblem>, Error> {
    let objective = make_filter_objective(&loaded.problem)?;
    Ok(Box::new(DfokitProblem { loaded, objective }))
}

/// Parses a problem from TOML text.
///
/// # Safety
/// `text` must be a NUL-terminated string and `out` a valid pointer; the
/// returned handle must be released with `dfokit_problem_free`.
#[no_mangle]
pub unsafe extern "C" fn dfokit_problem_from_str(
    text: *const c_char,
    out: *mut *mut DfokitProblem,
) -> DfokitStatus {
    guarded(|| {
        let (Some(text), false) = (cstr(text), out.is_null()) else {
            set_error("null or non-UTF8 argument");
            return DfokitStatus::InvalidArgument;
        };
        match cli::parse_problem_str(text).and_then(build_handle) {
            Ok(handle) => {
                *out = Box::into_raw(handle);
                DfokitStatus::Ok
            }
            Err(e) => {
                set_error(&e.to_string());
                status_for(&e)
            }
        }
    })
}

/// Loads a problem from a TOML file.
///
/// # Safety
/// As `dfokit_problem_from_str`, with `path` a NUL-terminated file path.
#[no_mangle]
pub unsafe extern "C" fn dfokit_problem_load(
    path: *const c_char,
    out: *mut *mut DfokitProblem,
) -> DfokitStatus {
    guarded(|| {
        let (Some(path), false) = (cstr(path), out.is_null()) else {
            set_error("null or non-UTF8 argument");
            return DfokitStatus::InvalidArgument;
        };
        match cli::load_problem(Path::new(path)).and_then(build_handle) {
            Ok(handle) => {
                *out = Box::into_raw(handle);
                DfokitStatus::Ok
            }
            Err(e) => {
                set_error(&e.to_string());
                status_for(&e)
            }
        }
    })
}

/// Releases a problem handle. Passing NULL is a no-op.
///
/// # Safety
/// `p` must come from a dfokit load call and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn dfokit_problem_free(p: *mut DfokitProblem) {
    if !p.is_null() {
        drop(Box::from_raw(p));
    }
}

/// Length of the decision vector for this problem.
///
/// # Safety
/// `p` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn dfokit_problem_dim(p: *const DfokitProblem) -> usize {
    if p.is_null() {
        return 0;
    }
    (*p).objective.dim()
}

/// Extreme-barrier objective value at `x`; +inf means infeasible.
///
/// # Safety
/// `p` live handle; `x` points to `len` doubles; `out` valid.
#[no_mangle]
pub unsafe extern "C" fn dfokit_objective_value(
    p: *const DfokitProblem,
    x: *const f64,
    len: usize,
    out: *mut f64,
) -> DfokitStatus {
    guarded(|| {
        if p.is_null() || x.is_null() || out.is_null() {
            set_error("null argument");
            return DfokitStatus::InvalidArgument;
        }
        let handle = &*p;
        if len != handle.objective.dim() {
            set_error("decision vector length mismatch");
            return DfokitStatus::InvalidArgument;
        }
        let slice = std::slice::from_raw_parts(x, len);
        *out = handle.objective.value(slice);
        DfokitStatus::Ok
    })
}

/// Full evaluation report for a decision vector, including the D-hat-only
/// truncation diagnostic.
///
/// # Safety
/// As `dfokit_objective_value`, with `out` pointing to a report struct.
#[no_mangle]
pub unsafe extern "C" fn dfokit_eval(
    p: *const DfokitProblem,
    x: *const f64,
    len: usize,
    out: *mut DfokitEvalReport,
) -> DfokitStatus {
    guarded(|| {
        if p.is_null() || x.is_null() || out.is_null() {
            set_error("null argument");
            return DfokitStatus::InvalidArgument;
        }
        let handle = &*p;
        if len != handle.objective.dim() {
            set_error("decision vector length mismatch");
            return DfokitStatus::InvalidArgument;
        }
        let slice = std::slice::from_raw_parts(x, len);
        match cli::eval_filter(&handle.loaded.problem, slice) {
            Ok(report) => {
                *out = DfokitEvalReport {
                    positive: report.positive,
                    stable: report.stable,
                    value: report.value.unwrap_or(f64::INFINITY),
                    peak_omega: report.peak_omega.unwrap_or(f64::NAN),
                    static_value: report.static_value.unwrap_or(f64::NAN),
                    truncation_pct: report.truncation_pct.unwrap_or(f64::NAN),
                };
                if report.value.is_some() {
                    DfokitStatus::Ok
                } else {
                    set_error("filter infeasible");
                    DfokitStatus::Infeasible
                }
            }
            Err(e) => {
                set_error(&e.to_string());
                status_for(&e)
            }
        }
    })
}

/// One optimization run. `method` is one of "nm", "nm-restart", "mds",
/// "mads", "cd". When `x0` is NULL a feasible start is sampled from the
/// master seed; otherwise `x0` must point to `x_len` doubles and be feasible.
/// The final point is written to `x_out` (`x_len` doubles).
///
/// # Safety
/// Pointers must be valid as described; `x_len` must equal the problem dim.
#[no_mangle]
pub unsafe extern "C" fn dfokit_synth(
    p: *const DfokitProblem,
    method: *const c_char,
    master_seed: u64,
    budget: usize,
    x0: *const f64,
    x_out: *mut f64,
    x_len: usize,
    stats: *mut DfokitRunStats,
) -> DfokitStatus {
    guarded(|| {
        if p.is_null() || x_out.is_null() || stats.is_null() {
            set_error("null argument");
            return DfokitStatus::InvalidArgument;
        }
        let Some(method) = cstr(method) else {
            set_error("null or non-UTF8 method");
            return DfokitStatus::InvalidArgument;
        };
        let handle = &*p;
        let dim = handle.objective.dim();
        if x_len != dim {
            set_error("x_len must equal the problem dimension");
            return DfokitStatus::InvalidArgument;
        }
        if budget == 0 {
            set_error("budget must be >= 1");
            return DfokitStatus::InvalidArgument;
        }
        let spec = match cli::parse_method(method, Some(&handle.loaded.problem), dim) {
            Ok(s) => s,
            Err(e) => {
                set_error(&e.to_string());
                return DfokitStatus::InvalidArgument;
            }
        };
        let start = if x0.is_null() {
            match cli::sample_feasible_start(
                &handle.loaded.problem,
                &handle.objective,
                master_seed,
                0,
            ) {
                Ok(s) => s,
                Err(e) => {
                    set_error(&e.to_string());
                    return status_for(&e);
                }
            }
        } else {
            let s = std::slice::from_raw_parts(x0, dim).to_vec();
            if !handle.objective.value(&s).is_finite() {
                set_error("supplied start is infeasible");
                return DfokitStatus::Infeasible;
            }
            s
        };
        let cfg = OptimizerConfig {
            max_evaluations: budget,
            ..Default::default()
        };
        let trace = multistart(&handle.objective, &[start], &spec, &cfg, master_seed)
            .pop()
            .expect("one run");
        if let Some(err) = &trace.error {
            set_error(err);
            return DfokitStatus::NumericalError;
        }
        std::slice::from_raw_parts_mut(x_out, dim).copy_from_slice(&trace.final_x);
        *stats = DfokitRunStats {
            final_value: trace.final_value,
            evaluations: trace.evaluations as u64,
            stop_reason: match trace.stop_reason {
                StopReason::ToleranceF => DfokitStopReason::ToleranceF,
                StopReason::ToleranceX => DfokitStopReason::ToleranceX,
                StopReason::Budget => DfokitStopReason::Budget,
                StopReason::NoImprovement => DfokitStopReason::NoImprovement,
            },
            seed: trace.seed,
        };
        DfokitStatus::Ok
    })
}

/// Finite-difference stationarity probe at `x` with default radii
/// (1e-2, 1e-4, 1e-6) and descent threshold -1e-3.
///
/// # Safety
/// `p` live handle; `x` points to `len` doubles; out-pointers valid.
#[no_mangle]
pub unsafe extern "C" fn dfokit_probe(
    p: *const DfokitProblem,
    x: *const f64,
    len: usize,
    n_directions: usize,
    seed: u64,
    out_min_estimate: *mut f64,
    out_classification: *mut DfokitClassification,
) -> DfokitStatus {
    guarded(|| {
        if p.is_null() || x.is_null() || out_min_estimate.is_null() || out_classification.is_null()
        {
            set_error("null argument");
            return DfokitStatus::InvalidArgument;
        }
        let handle = &*p;
        if len != handle.objective.dim() {
            set_error("decision vector length mismatch");
            return DfokitStatus::InvalidArgument;
        }
        let slice = std::slice::from_raw_parts(x, len);
        let cfg = ProbeConfig {
            n_directions,
            seed,
            ..Default::default()
        };
        match probe(&handle.objective, slice, &cfg) {
            Ok(report) => {
                *out_min_estimate = report.min_estimate.unwrap_or(f64::NAN);
                *out_classification = match report.classification {
                    Classification::DescentFound => DfokitClassification::DescentFound,
                    Classification::ApproximatelyStationary => {
                        DfokitClassification::ApproximatelyStationary
                    }
                    Classification::Infeasible => DfokitClassification::Infeasible,
                };
                DfokitStatus::Ok
            }
            Err(e) => {
                set_error(&e.to_string());
                status_for(&e)
            }
        }
    })
}

unsafe fn system_from_raw(
    a: *const f64,
    n: usize,
    b: *const f64,
    m: usize,
    c: *const f64,
    p_rows: usize,
    d: *const f64,
) -> Result<StateSpace, Error> {
    let take = |ptr: *const f64, rows: usize, cols: usize, name: &str| {
        if ptr.is_null() && rows * cols > 0 {
            return Err(Error::Dimension(format!("{name} is null")));
        }
        let data = if rows * cols == 0 {
            Vec::new()
        } else {
            std::slice::from_raw_parts(ptr, rows * cols).to_vec()
        };
        Matrix::new(rows, cols, data)
    };
    StateSpace::new(
        take(a, n, n, "a")?,
        take(b, n, m, "b")?,
        take(c, p_rows, n, "c")?,
        take(d, p_rows, m, "d")?,
    )
}

/// Discrete-time H-infinity norm of (A, B, C, D) with default evaluation
/// options; matrices are row-major, A is n x n, B n x m, C p x n, D p x m.
///
/// # Safety
/// Matrix pointers must cover the stated row-major extents.
#[no_mangle]
pub unsafe extern "C" fn dfokit_hinf_norm(
    a: *const f64,
    n: usize,
    b: *const f64,
    m: usize,
    c: *const f64,
    p_rows: usize,
    d: *const f64,
    out_value: *mut f64,
    out_peak_omega: *mut f64,
) -> DfokitStatus {
    guarded(|| {
        if out_value.is_null() || out_peak_omega.is_null() {
            set_error("null output pointer");
            return DfokitStatus::InvalidArgument;
        }
        let sys = match system_from_raw(a, n, b, m, c, p_rows, d) {
            Ok(s) => s,
            Err(e) => {
                set_error(&e.to_string());
                return DfokitStatus::InvalidArgument;
            }
        };
        match hinf_norm(&sys, &NormOptions::default()) {
            Ok(r) => {
                *out_value = r.value;
                *out_peak_omega = r.peak_omega;
                DfokitStatus::Ok
            }
            Err(e) => {
                set_error(&e.to_string());
                status_for(&e)
            }
        }
    })
}

/// Discrete-time H2 norm of (A, B, C, D); layout as `dfokit_hinf_norm`.
///
/// # Safety
/// Matrix pointers must cover the stated row-major extents.
#[no_mangle]
pub unsafe extern "C" fn dfokit_h2_norm(
    a: *const f64,
    n: usize,
    b: *const f64,
    m: usize,
    c: *const f64,
    p_rows: usize,
    d: *const f64,
    out_value: *mut f64,
) -> DfokitStatus {
    guarded(|| {
        if out_value.is_null() {
            set_error("null output pointer");
            return DfokitStatus::InvalidArgument;
        }
        let sys = match system_from_raw(a, n, b, m, c, p_rows, d) {
            Ok(s) => s,
            Err(e) => {
                set_error(&e.to_string());
                return DfokitStatus::InvalidArgument;
            }
        };
        match h2_norm(&sys) {
            Ok(v) => {
                *out_value = v;
                DfokitStatus::Ok
            }
            Err(e) => {
                set_error(&e.to_string());
                status_for(&e)
            }
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::ffi::CString;
    use std::ptr;

    fn problem_handle() -> *mut DfokitProblem {
        let text = CString::new(cli::write_synthetic_problem_file()).unwrap();
        let mut out: *mut DfokitProblem = ptr::null_mut();
        let status = unsafe { dfokit_problem_from_str(text.as_ptr(), &mut out) };
        assert_eq!(status, DfokitStatus::Ok);
        assert!(!out.is_null());
        out
    }

    #[test]
    fn load_eval_and_free() {
        let p = problem_handle();
        unsafe {
            assert_eq!(dfokit_problem_dim(p), 4);
            let x = [0.4f64, 0.3, 0.2, 0.1];
            let mut value = 0.0;
            assert_eq!(
                dfokit_objective_value(p, x.as_ptr(), 4, &mut value),
                DfokitStatus::Ok
            );
            assert!(value.is_finite() && value > 0.0);

            let bad = [0.4f64, -0.3, 0.2, 0.1];
            let mut inf_value = 0.0;
            assert_eq!(
                dfokit_objective_value(p, bad.as_ptr(), 4, &mut inf_value),
                DfokitStatus::Ok
            );
            assert!(inf_value.is_infinite());

            let mut report = DfokitEvalReport {
                positive: false,
                stable: false,
                value: 0.0,
                peak_omega: 0.0,
                static_value: 0.0,
                truncation_pct: 0.0,
            };
            assert_eq!(dfokit_eval(p, x.as_ptr(), 4, &mut report), DfokitStatus::Ok);
            assert!(report.positive && report.stable);
            assert!((report.value - value).abs() < 1e-15);
            assert_eq!(
                dfokit_eval(p, bad.as_ptr(), 4, &mut report),
                DfokitStatus::Infeasible
            );
            dfokit_problem_free(p);
        }
    }

    #[test]
    fn parse_error_reports_message() {
        let text = CString::new("id = \"x\"\n[plant\n").unwrap();
        let mut out: *mut DfokitProblem = ptr::null_mut();
        let status = unsafe { dfokit_problem_from_str(text.as_ptr(), &mut out) };
        assert_eq!(status, DfokitStatus::ParseError);
        let msg = unsafe { CStr::from_ptr(dfokit_last_error()) }
            .to_string_lossy()
            .to_string();
        assert!(msg.contains("line"), "message was: {msg}");
    }

    #[test]
    fn synth_runs_deterministically() {
        let p = problem_handle();
        unsafe {
            let method = CString::new("nm-restart").unwrap();
            let run = |seed: u64| {
                let mut x = [0.0f64; 4];
                let mut stats = DfokitRunStats {
                    final_value: 0.0,
                    evaluations: 0,
                    stop_reason: DfokitStopReason::Budget,
                    seed: 0,
                };
                let status = dfokit_synth(
                    p,
                    method.as_ptr(),
                    seed,
                    800,
                    ptr::null(),
                    x.as_mut_ptr(),
                    4,
                    &mut stats,
                );
                assert_eq!(status, DfokitStatus::Ok);
                (x, stats.final_value, stats.evaluations)
            };
            let (x1, f1, e1) = run(9);
            let (x2, f2, e2) = run(9);
            assert_eq!(x1, x2);
            assert_eq!(f1, f2);
            assert_eq!(e1, e2);
            assert!(f1.is_finite());
            dfokit_problem_free(p);
        }
    }

    #[test]
    fn norm_entry_points() {
        unsafe {
            // Scalar system a=0.5, b=c=1, d=0: Hinf 2.0 at omega 0, H2 sqrt(4/3).
            let a = [0.5f64];
            let b = [1.0f64];
            let c = [1.0f64];
            let d = [0.0f64];
            let mut value = 0.0;
            let mut peak = 0.0;
            assert_eq!(
                dfokit_hinf_norm(
                    a.as_ptr(),
                    1,
                    b.as_ptr(),
                    1,
                    c.as_ptr(),
                    1,
                    d.as_ptr(),
                    &mut value,
                    &mut peak
                ),
                DfokitStatus::Ok
            );
            assert!((value - 2.0).abs() < 1e-9);
            assert!(peak.abs() < 1e-6);
            let mut h2 = 0.0;
            assert_eq!(
                dfokit_h2_norm(a.as_ptr(), 1, b.as_ptr(), 1, c.as_ptr(), 1, d.as_ptr(), &mut h2),
                DfokitStatus::Ok
            );
            assert!((h2 - (4.0f64 / 3.0).sqrt()).abs() < 1e-10);

            // Unstable system is a numerical error.
            let a_bad = [1.0f64];
            assert_eq!(
                dfokit_hinf_norm(
                    a_bad.as_ptr(),
                    1,
                    b.as_ptr(),
                    1,
                    c.as_ptr(),
                    1,
                    d.as_ptr(),
                    &mut value,
                    &mut peak
                ),
                DfokitStatus::NumericalError
            );
        }
    }

    #[test]
    fn probe_through_ffi() {
        let p = problem_handle();
        unsafe {
            let x = [0.4f64, 0.3, 0.2, 0.1];
            let mut min_estimate = 0.0;
            let mut class = DfokitClassification::Infeasible;
            assert_eq!(
                dfokit_probe(p, x.as_ptr(), 4, 128, 3, &mut min_estimate, &mut class),
                DfokitStatus::Ok
            );
            assert!(min_estimate.is_finite());
            // A random interior point of this problem is not stationary.
            assert_eq!(class, DfokitClassification::DescentFound);
            dfokit_problem_free(p);
        }
    }

    #[test]
    fn null_arguments_rejected() {
        unsafe {
            let mut out: *mut DfokitProblem = ptr::null_mut();
            assert_eq!(
                dfokit_problem_from_str(ptr::null(), &mut out),
                DfokitStatus::InvalidArgument
            );
            let mut v = 0.0;
            assert_eq!(
                dfokit_objective_value(ptr::null(), ptr::null(), 0, &mut v),
                DfokitStatus::InvalidArgument
            );
            dfokit_problem_free(ptr::null_mut());
        }
    }

    #[test]
    fn version_is_non_empty() {
        let v = unsafe { CStr::from_ptr(dfokit_version()) };
        assert!(!v.to_bytes().is_empty());
    }
}
