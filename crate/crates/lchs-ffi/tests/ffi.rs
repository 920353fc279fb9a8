use std::ffi::CStr;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::ptr;

use lchs_ffi::*;

fn last_error() -> String {
    unsafe { CStr::from_ptr(lchs_last_error_message()) }.to_string_lossy().into_owned()
}

fn spec_with(f: impl FnOnce(&mut LchsSpecParams)) -> (LchsStatus, *mut LchsSpec) {
    let mut p = lchs_spec_params_default();
    f(&mut p);
    let mut h = ptr::null_mut();
    let st = unsafe { lchs_spec_new(&p, &mut h) };
    (st, h)
}

#[test]
fn estimate_round_trip() {
    let (st, spec) = spec_with(|p| p.t = 1e4);
    assert_eq!(st, LchsStatus::Ok);
    let mut rep = ptr::null_mut();
    assert_eq!(unsafe { lchs_estimate(spec, 1, 0, &mut rep) }, LchsStatus::Ok);
    let mut s = LchsCostSummary::default();
    assert_eq!(unsafe { lchs_report_summary(rep, &mut s) }, LchsStatus::Ok);
    assert_eq!(s.c_lchs, 423);
    assert_eq!(s.c_a, 6_917_579_991);
    assert_eq!(s.log2_m, 30);
    assert_eq!(s.beta, 0.75);
    let c_r = (s.c_r_hi as u128) << 64 | s.c_r_lo as u128;
    assert_eq!(c_r, s.m_total as u128 * s.c_a as u128);
    let js = unsafe { lchs_report_to_json(rep) };
    assert!(!js.is_null());
    let text = unsafe { CStr::from_ptr(js) }.to_str().unwrap().to_owned();
    let v: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert_eq!(v["report"]["c_a"], 6_917_579_991u64);
    unsafe {
        lchs_string_free(js);
        lchs_report_free(rep);
        lchs_spec_free(spec);
    }
}

#[test]
fn optimize_beats_equal() {
    let (_, spec) = spec_with(|p| p.t = 1e6);
    let mut eq = ptr::null_mut();
    let mut opt = ptr::null_mut();
    unsafe {
        assert_eq!(lchs_estimate(spec, 1, 0, &mut eq), LchsStatus::Ok);
        assert_eq!(lchs_optimize(spec, LchsMethod::SolEpsExp, 400, 1, &mut opt), LchsStatus::Ok);
        let mut a = LchsCostSummary::default();
        let mut b = LchsCostSummary::default();
        lchs_report_summary(eq, &mut a);
        lchs_report_summary(opt, &mut b);
        assert!(b.c_a <= a.c_a);
        assert!(b.beta > 0.4 && b.beta < 0.95);
        lchs_report_free(eq);
        lchs_report_free(opt);
        lchs_spec_free(spec);
    }
}

#[test]
fn error_codes_and_messages() {
    let (st, h) = spec_with(|p| p.eps_total = 2.0);
    assert_eq!(st, LchsStatus::Infeasible);
    assert!(h.is_null());
    assert!(last_error().contains("infeasible"));
    let (st, _) = spec_with(|p| p.beta = 1.0);
    assert_eq!(st, LchsStatus::Domain);
    let mut w = 0.0;
    assert_eq!(unsafe { lchs_lambert_w0(-1.0, &mut w) }, LchsStatus::Domain);
    assert!(!last_error().is_empty());
    assert_eq!(unsafe { lchs_lambert_w0(std::f64::consts::E, &mut w) }, LchsStatus::Ok);
    assert!((w - 1.0).abs() < 1e-15);
    assert!(last_error().is_empty());
    assert_eq!(unsafe { lchs_lambert_wm1(-0.1, ptr::null_mut()) }, LchsStatus::NullPointer);
    assert_eq!(unsafe { lchs_estimate(ptr::null(), 1, 0, &mut ptr::null_mut()) }, LchsStatus::NullPointer);
    unsafe {
        lchs_spec_free(ptr::null_mut());
        lchs_report_free(ptr::null_mut());
        lchs_string_free(ptr::null_mut());
    }
    let name = unsafe { CStr::from_ptr(lchs_status_name(LchsStatus::Infeasible)) };
    assert_eq!(name.to_str().unwrap(), "infeasible");
}

#[test]
fn scalar_wrappers() {
    let mut k = 0.0;
    assert_eq!(unsafe { lchs_truncation_k(0.75, 1.25e-11, &mut k) }, LchsStatus::Ok);
    assert!((k - 601.6126203126328).abs() < 1e-9);
    let mut n = 0u64;
    assert_eq!(unsafe { lchs_degree_bound(2.0, 0.2, &mut n) }, LchsStatus::Ok);
    assert_eq!(n, 35);
    let mut w = 0.0;
    assert_eq!(unsafe { lchs_lambert_wm1(-1.0 / std::f64::consts::E, &mut w) }, LchsStatus::Ok);
    assert!((w + 1.0).abs() < 1e-7);
    let v = unsafe { CStr::from_ptr(lchs_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}

fn header() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("include/lchs.h")
}

#[test]
fn header_declares_api() {
    let h = std::fs::read_to_string(header()).unwrap();
    for sym in [
        "typedef struct LchsSpec LchsSpec;",
        "typedef struct LchsReport LchsReport;",
        "LCHS_STATUS_INFEASIBLE = 3",
        "lchs_spec_new(",
        "lchs_estimate(",
        "lchs_optimize(",
        "lchs_report_summary(",
        "lchs_report_to_json(",
        "lchs_last_error_message(",
        "lchs_lambert_w0(",
        "lchs_degree_bound(",
    ] {
        assert!(h.contains(sym), "header lacks {sym}");
    }
}

const C_PROGRAM: &str = r#"
#include "lchs.h"
#include <stdio.h>
int main(void) {
    LchsSpecParams p = lchs_spec_params_default();
    p.t = 1e4;
    LchsSpec *spec = NULL;
    if (lchs_spec_new(&p, &spec) != LCHS_STATUS_OK) return 1;
    LchsReport *rep = NULL;
    if (lchs_estimate(spec, 1, 0, &rep) != LCHS_STATUS_OK) return 2;
    LchsCostSummary s;
    if (lchs_report_summary(rep, &s) != LCHS_STATUS_OK) return 3;
    printf("%llu %u\n", (unsigned long long)s.c_lchs, s.log2_m);
    lchs_report_free(rep);
    lchs_spec_free(spec);
    p.eps_total = 2.0;
    LchsStatus st = lchs_spec_new(&p, &spec);
    printf("%s\n", lchs_status_name(st));
    return 0;
}
"#;

/// Compiles and links a C client against the generated header and the
/// static library built alongside this test.
#[test]
fn c_client_links_and_runs() {
    let exe = std::env::current_exe().unwrap();
    let profile_dir = exe.parent().unwrap().parent().unwrap();
    let lib = profile_dir.join("liblchs_ffi.a");
    assert!(lib.exists(), "static library not found at {}", lib.display());
    let dir = tempfile_dir();
    let src = dir.join("client.c");
    std::fs::write(&src, C_PROGRAM).unwrap();
    let bin = dir.join("client");
    let status = Command::new("cc")
        .arg(&src)
        .arg("-I")
        .arg(header().parent().unwrap())
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&bin)
        .status()
        .expect("C compiler");
    assert!(status.success());
    let out = Command::new(&bin).output().unwrap();
    assert!(out.status.success());
    assert_eq!(String::from_utf8(out.stdout).unwrap(), "423 30\ninfeasible\n");
}

fn tempfile_dir() -> PathBuf {
    let d = Path::new(env!("CARGO_TARGET_TMPDIR")).join("ffi-c-client");
    std::fs::create_dir_all(&d).unwrap();
    d
}
