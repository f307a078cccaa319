//! Drives the C ABI end to end: handle lifecycles, status codes, JSON
//! round trips, and NULL tolerance.

use std::ffi::{CStr, CString};
use std::ptr;

use lppack_ffi::*;

#[test]
fn version_is_a_static_string() {
    let version = unsafe { CStr::from_ptr(lppack_version()) };
    assert_eq!(version.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}

#[test]
fn build_verify_extend_round_trip() {
    unsafe {
        let mut state: *mut LppackState = ptr::null_mut();
        let status = lppack_state_build(2.0, 1e-9, 3.0, 0.5, 200, 3, 10_000, 3, 7, &mut state);
        assert_eq!(status, LppackStatus::Ok);
        assert_eq!(lppack_state_depth(state), 3);
        assert_eq!(lppack_state_packing_count(state), 9);

        let mut min_excess = 0.0f64;
        assert_eq!(
            lppack_state_verify(state, &mut min_excess),
            LppackStatus::Ok
        );
        assert!(min_excess > 0.0);

        let mut deeper: *mut LppackState = ptr::null_mut();
        assert_eq!(lppack_state_extend(state, &mut deeper), LppackStatus::Ok);
        assert_eq!(lppack_state_depth(deeper), 4);
        // Persistent staging: the original handle is untouched.
        assert_eq!(lppack_state_depth(state), 3);

        let json = lppack_state_to_json(state);
        assert!(!json.is_null());
        let mut reloaded: *mut LppackState = ptr::null_mut();
        assert_eq!(
            lppack_state_from_json(json, &mut reloaded),
            LppackStatus::Ok
        );
        let d1 = lppack_state_digest(state);
        let d2 = lppack_state_digest(reloaded);
        assert_eq!(CStr::from_ptr(d1).to_bytes(), CStr::from_ptr(d2).to_bytes());

        lppack_string_free(json);
        lppack_string_free(d1);
        lppack_string_free(d2);
        lppack_state_free(reloaded);
        lppack_state_free(deeper);
        lppack_state_free(state);
    }
}

#[test]
fn point_arithmetic_and_json() {
    unsafe {
        let mut a: *mut LppackPoint = ptr::null_mut();
        let mut b: *mut LppackPoint = ptr::null_mut();
        assert_eq!(lppack_point_unit(1, 0, &mut a), LppackStatus::Ok);
        assert_eq!(lppack_point_unit(1, 1, &mut b), LppackStatus::Ok);

        let mut d = 0.0f64;
        assert_eq!(lppack_distance(a, b, 2.0, 1e-9, &mut d), LppackStatus::Ok);
        assert!((d - 2f64.powf(0.5)).abs() < 1e-15);

        assert_eq!(lppack_point_set(a, 1, 0, 3.0), LppackStatus::Ok);
        assert_eq!(lppack_point_set(a, 1, 2, 4.0), LppackStatus::Ok);
        let mut norm = 0.0f64;
        assert_eq!(lppack_p_norm(a, 2.0, 1e-9, &mut norm), LppackStatus::Ok);
        assert!((norm - 5.0).abs() < 1e-12);
        assert_eq!(lppack_point_get(a, 1, 2), 4.0);
        assert_eq!(lppack_point_get(a, 9, 9), 0.0);

        let json = lppack_point_to_json(a);
        let text = CStr::from_ptr(json).to_str().unwrap().to_owned();
        assert_eq!(text, r#"{"entries":{"s1i0":3.0,"s1i2":4.0}}"#);

        let c_json = CString::new(text).unwrap();
        let mut back: *mut LppackPoint = ptr::null_mut();
        assert_eq!(
            lppack_point_parse(c_json.as_ptr(), &mut back),
            LppackStatus::Ok
        );
        assert_eq!(lppack_point_get(back, 1, 0), 3.0);

        lppack_string_free(json);
        lppack_point_free(back);
        lppack_point_free(b);
        lppack_point_free(a);
    }
}

#[test]
fn covering_witness_through_the_abi() {
    unsafe {
        let mut state: *mut LppackState = ptr::null_mut();
        assert_eq!(
            lppack_state_build(2.0, 1e-9, 3.0, 0.5, 200, 3, 10_000, 3, 1, &mut state),
            LppackStatus::Ok
        );
        let mut x: *mut LppackPoint = ptr::null_mut();
        assert_eq!(lppack_point_zero(&mut x), LppackStatus::Ok);
        assert_eq!(lppack_point_set(x, 1, 0, 0.5), LppackStatus::Ok);

        let mut witness: *mut LppackPoint = ptr::null_mut();
        let mut d = 0.0f64;
        let status = lppack_state_covering_witness(state, x, 0.1, &mut witness, &mut d);
        assert_eq!(status, LppackStatus::Ok);
        assert!(d < 1.1);
        assert_eq!(lppack_point_get(witness, 1, 0), 1.0);

        lppack_point_free(witness);
        lppack_point_free(x);
        lppack_state_free(state);
    }
}

#[test]
fn delta_and_greedy_probes() {
    unsafe {
        let mut delta = 0.0f64;
        assert_eq!(
            lppack_delta_step(1.0, 0.5, 2.0, 1e-9, &mut delta),
            LppackStatus::Ok
        );
        assert!((delta - 3f64.sqrt()).abs() < 1e-12);
        assert_eq!(
            lppack_delta_step(-1.0, 0.5, 2.0, 1e-9, &mut delta),
            LppackStatus::InvalidArgument
        );

        let mut count = 0usize;
        let alpha = 2f64.powf(0.5) - 1e-6;
        assert_eq!(
            lppack_greedy_dispersed_count(2.0, 1e-9, 10, alpha, 100, 1, &mut count),
            LppackStatus::Ok
        );
        assert!(count >= 10);
        assert_eq!(
            lppack_greedy_dispersed_count(2.0, 1e-9, 10, 2.0, 1_000, 1, &mut count),
            LppackStatus::Ok
        );
        assert!(count <= 2);
    }
}

#[test]
fn errors_and_null_tolerance() {
    unsafe {
        let mut state: *mut LppackState = ptr::null_mut();
        // Invalid exponent.
        assert_eq!(
            lppack_state_build(0.5, 1e-9, 3.0, 0.5, 200, 3, 10_000, 3, 0, &mut state),
            LppackStatus::InvalidArgument
        );
        // Starved sampler.
        assert_eq!(
            lppack_state_build(2.0, 1e-9, 0.4, 0.5, 200, 3, 10_000, 2, 0, &mut state),
            LppackStatus::InsufficientDensity
        );
        // Depth-1 state has no packing pairs to audit.
        assert_eq!(
            lppack_state_build(2.0, 1e-9, 3.0, 0.5, 200, 3, 10_000, 1, 0, &mut state),
            LppackStatus::Ok
        );
        assert_eq!(
            lppack_state_verify(state, ptr::null_mut()),
            LppackStatus::VerificationFailure
        );
        lppack_state_free(state);

        // NULL handling everywhere.
        assert_eq!(
            lppack_state_verify(ptr::null(), ptr::null_mut()),
            LppackStatus::NullPointer
        );
        assert_eq!(lppack_state_depth(ptr::null()), 0);
        assert!(lppack_state_to_json(ptr::null()).is_null());
        assert!(lppack_point_to_json(ptr::null()).is_null());
        let mut out: *mut LppackPoint = ptr::null_mut();
        assert_eq!(
            lppack_point_parse(ptr::null(), &mut out),
            LppackStatus::NullPointer
        );
        let bad = CString::new("not json").unwrap();
        assert_eq!(
            lppack_point_parse(bad.as_ptr(), &mut out),
            LppackStatus::InvalidArgument
        );
        lppack_state_free(ptr::null_mut());
        lppack_point_free(ptr::null_mut());
        lppack_string_free(ptr::null_mut());
    }
}

#[test]
fn generated_header_declares_the_surface() {
    let header = std::fs::read_to_string(
        std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("include/lppack.h"),
    )
    .expect("header generated at build time");
    for symbol in [
        "typedef struct LppackState LppackState;",
        "typedef struct LppackPoint LppackPoint;",
        "LPPACK_STATUS_OK = 0",
        "LPPACK_STATUS_INSUFFICIENT_DENSITY = 2",
        "lppack_state_build",
        "lppack_state_covering_witness",
        "lppack_greedy_dispersed_count",
        "lppack_string_free",
    ] {
        assert!(header.contains(symbol), "header lacks {symbol}");
    }
}
