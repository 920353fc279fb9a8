//! C ABI over the `lchs` estimator.
//!
//! Every fallible function returns an `LchsStatus`; on failure the message
//! is available from `lchs_last_error_message` on the same thread. Handles
//! are opaque and must be released with their `_free` function. Strings
//! returned as `char *` are owned by the caller and freed with
//! `lchs_string_free`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use lchs::budget::{equal_budget_with, optimize, BudgetOutcome, Method, OptimizeOptions};
use lchs::bounds::truncation_k;
use lchs::kernel::KernelParams;
use lchs::signpoly::degree_bound;
use lchs::specfun::{lambert_w0, lambert_w_m1};
use lchs::{Error, ProblemSpec};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LchsStatus {
    Ok = 0,
    Domain = 1,
    Overflow = 2,
    Infeasible = 3,
    Convergence = 4,
    Size = 5,
    Parse = 6,
    Io = 7,
    NullPointer = 8,
    Panic = 9,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LchsMethod {
    SolEpsAa = 0,
    SolEpsExp = 1,
}

/// Problem parameters, mirroring the Rust `ProblemSpec`.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LchsSpecParams {
    pub t: f64,
    pub alpha_a: f64,
    pub norm_l: f64,
    pub norm_u0: f64,
    pub norm_ut: f64,
    pub eps_total: f64,
    pub beta: f64,
    pub m_a: u32,
}

/// Scalar view of a cost report. `c_r` is split into 64-bit halves.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct LchsCostSummary {
    pub beta: f64,
    pub delta: f64,
    pub c_lchs: u64,
    pub qubitization_per_call: u64,
    pub c_a: u64,
    pub c_r_lo: u64,
    pub c_r_hi: u64,
    pub c_0: u64,
    pub ancilla_estimate: u32,
    pub success_prob_lower: f64,
    pub k_cut: f64,
    pub m_total: u64,
    pub log2_m: u32,
    pub c_l1: f64,
    pub eps_v: f64,
    pub eps_lchs: f64,
    pub excluded_queries: u64,
}

/// Opaque problem handle.
pub struct LchsSpec {
    spec: ProblemSpec,
}

/// Opaque result handle from `lchs_estimate` or `lchs_optimize`.
pub struct LchsReport {
    beta: f64,
    outcome: BudgetOutcome,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn status_of(e: &Error) -> LchsStatus {
    match e {
        Error::Domain(_) => LchsStatus::Domain,
        Error::Overflow(_) => LchsStatus::Overflow,
        Error::Infeasible(_) => LchsStatus::Infeasible,
        Error::Convergence(_) => LchsStatus::Convergence,
        Error::Size(_) => LchsStatus::Size,
        Error::Parse(_) => LchsStatus::Parse,
        Error::Io(_) => LchsStatus::Io,
    }
}

fn guard(f: impl FnOnce() -> Result<(), LchsStatus>) -> LchsStatus {
    set_error("");
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => LchsStatus::Ok,
        Ok(Err(s)) => s,
        Err(_) => {
            set_error("internal panic");
            LchsStatus::Panic
        }
    }
}

fn lift<T>(r: lchs::Result<T>) -> Result<T, LchsStatus> {
    r.map_err(|e| {
        set_error(&e.to_string());
        status_of(&e)
    })
}

fn null() -> LchsStatus {
    set_error("null pointer argument");
    LchsStatus::NullPointer
}

/// Message for the last failed call on this thread; empty after success.
/// The pointer stays valid until the next call into this library.
#[no_mangle]
pub extern "C" fn lchs_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn lchs_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Defaults: t = 1, α_A = ‖L‖ = ‖u₀‖ = ‖u(t)‖ = 1, ε = 1e-10, β = 0.75.
#[no_mangle]
pub extern "C" fn lchs_spec_params_default() -> LchsSpecParams {
    let s = ProblemSpec::default();
    LchsSpecParams {
        t: s.t,
        alpha_a: s.alpha_a,
        norm_l: s.norm_l,
        norm_u0: s.norm_u0,
        norm_ut: s.norm_ut,
        eps_total: s.eps_total,
        beta: s.beta,
        m_a: s.m_a,
    }
}

/// Validates `params` and writes a new handle to `*out`.
///
/// # Safety
/// `params` must point to a valid `LchsSpecParams`; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn lchs_spec_new(params: *const LchsSpecParams, out: *mut *mut LchsSpec) -> LchsStatus {
    if params.is_null() || out.is_null() {
        return null();
    }
    guard(|| {
        let p = *params;
        let spec = ProblemSpec {
            t: p.t,
            alpha_a: p.alpha_a,
            norm_l: p.norm_l,
            norm_u0: p.norm_u0,
            norm_ut: p.norm_ut,
            eps_total: p.eps_total,
            beta: p.beta,
            m_a: p.m_a,
        };
        lift(spec.validate())?;
        *out = Box::into_raw(Box::new(LchsSpec { spec }));
        Ok(())
    })
}

/// # Safety
/// `spec` must be null or a handle from `lchs_spec_new` not yet freed.
#[no_mangle]
pub unsafe extern "C" fn lchs_spec_free(spec: *mut LchsSpec) {
    if !spec.is_null() {
        drop(Box::from_raw(spec));
    }
}

/// Equal-budget estimate. `perfect_oracle` nonzero zeroes the oracle
/// errors; `tight_q` nonzero uses the tight Gauss-Legendre order.
///
/// # Safety
/// `spec` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn lchs_estimate(
    spec: *const LchsSpec,
    perfect_oracle: i32,
    tight_q: i32,
    out: *mut *mut LchsReport,
) -> LchsStatus {
    if spec.is_null() || out.is_null() {
        return null();
    }
    guard(|| {
        let s = &(*spec).spec;
        let outcome = lift(equal_budget_with(s, perfect_oracle != 0, tight_q != 0))?;
        *out = Box::into_raw(Box::new(LchsReport { beta: s.beta, outcome }));
        Ok(())
    })
}

/// Optimized budget and β; deterministic for a given seed.
///
/// # Safety
/// `spec` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn lchs_optimize(
    spec: *const LchsSpec,
    method: LchsMethod,
    eval_limit: u32,
    seed: u64,
    out: *mut *mut LchsReport,
) -> LchsStatus {
    if spec.is_null() || out.is_null() {
        return null();
    }
    guard(|| {
        let m = match method {
            LchsMethod::SolEpsAa => Method::SolAa,
            LchsMethod::SolEpsExp => Method::SolExp,
        };
        let opts = OptimizeOptions { eval_limit: eval_limit as usize, seed, tight_q: false };
        let r = lift(optimize(&(*spec).spec, m, &opts))?;
        *out = Box::into_raw(Box::new(LchsReport { beta: r.beta, outcome: r.outcome }));
        Ok(())
    })
}

/// # Safety
/// `report` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn lchs_report_summary(report: *const LchsReport, out: *mut LchsCostSummary) -> LchsStatus {
    if report.is_null() || out.is_null() {
        return null();
    }
    guard(|| {
        let rep = &*report;
        let r = &rep.outcome.report;
        *out = LchsCostSummary {
            beta: rep.beta,
            delta: r.delta,
            c_lchs: r.c_lchs,
            qubitization_per_call: r.qubitization_per_call,
            c_a: r.c_a,
            c_r_lo: r.c_r as u64,
            c_r_hi: (r.c_r >> 64) as u64,
            c_0: r.c_0,
            ancilla_estimate: r.ancilla_estimate,
            success_prob_lower: r.success_prob_lower,
            k_cut: r.k_cut,
            m_total: r.m_total,
            log2_m: r.log2_m,
            c_l1: r.c_l1,
            eps_v: r.eps_v,
            eps_lchs: r.eps_lchs,
            excluded_queries: r.excluded_queries,
        };
        Ok(())
    })
}

/// Full report (budget, plan header, costs, constraint check) as JSON.
/// Returns null on failure.
///
/// # Safety
/// `report` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn lchs_report_to_json(report: *const LchsReport) -> *mut c_char {
    if report.is_null() {
        null();
        return ptr::null_mut();
    }
    let mut s = ptr::null_mut();
    let st = guard(|| {
        let js = serde_json::to_string(&(*report).outcome).map_err(|e| {
            set_error(&e.to_string());
            LchsStatus::Parse
        })?;
        s = CString::new(js).map_err(|_| LchsStatus::Parse)?.into_raw();
        Ok(())
    });
    if st == LchsStatus::Ok {
        s
    } else {
        ptr::null_mut()
    }
}

/// # Safety
/// `s` must be null or a string returned by this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn lchs_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// # Safety
/// `report` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn lchs_report_free(report: *mut LchsReport) {
    if !report.is_null() {
        drop(Box::from_raw(report));
    }
}

unsafe fn scalar<T>(out: *mut T, f: impl FnOnce() -> lchs::Result<T>) -> LchsStatus {
    if out.is_null() {
        return null();
    }
    guard(|| {
        *out = lift(f())?;
        Ok(())
    })
}

/// Principal branch W0(x), x ≥ -1/e.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn lchs_lambert_w0(x: f64, out: *mut f64) -> LchsStatus {
    scalar(out, || lambert_w0(x))
}

/// Lower branch W-1(x), -1/e ≤ x < 0.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn lchs_lambert_wm1(x: f64, out: *mut f64) -> LchsStatus {
    scalar(out, || lambert_w_m1(x))
}

/// Truncation cutoff K for kernel parameter β and tolerance ε.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn lchs_truncation_k(beta: f64, eps: f64, out: *mut f64) -> LchsStatus {
    scalar(out, || truncation_k(&KernelParams::new(beta)?, eps).map(|r| r.k_cut))
}

/// Sign-polynomial degree for gap Δ and accuracy ε.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn lchs_degree_bound(delta: f64, eps: f64, out: *mut u64) -> LchsStatus {
    scalar(out, || degree_bound(delta, eps))
}

/// Human-readable name of a status code (static string).
#[no_mangle]
pub extern "C" fn lchs_status_name(status: LchsStatus) -> *const c_char {
    let s: &'static CStr = match status {
        LchsStatus::Ok => c"ok",
        LchsStatus::Domain => c"domain",
        LchsStatus::Overflow => c"overflow",
        LchsStatus::Infeasible => c"infeasible",
        LchsStatus::Convergence => c"convergence",
        LchsStatus::Size => c"size",
        LchsStatus::Parse => c"parse",
        LchsStatus::Io => c"io",
        LchsStatus::NullPointer => c"null_pointer",
        LchsStatus::Panic => c"panic",
    };
    s.as_ptr()
}
