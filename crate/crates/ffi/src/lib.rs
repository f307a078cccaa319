//! C ABI for the packing/covering workbench: opaque handles, status
//! codes, and JSON bridges, so other languages can drive builds,
//! dispersion audits, covering witnesses, and the lower-bound probes.
//!
//! Ownership rules: every `*_build`/`*_parse`/`*_extend` output is owned
//! by the caller and must be released with the matching `*_free`; strings
//! returned as `char*` must be released with `lppack_string_free`. All
//! functions tolerate NULL inputs and report
//! `LPPACK_STATUS_NULL_POINTER` instead of crashing.

use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use lppack::{
    construction::SamplerConfig, delta_step, distance, greedy_dispersed_in_ball, CoordId, Error,
    PackingState, SpaceParams, SparsePoint,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Result of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LppackStatus {
    /// Success.
    Ok = 0,
    /// A verification or invariant failed (dispersion violation, broken
    /// precondition, undefined dispersion).
    VerificationFailure = 1,
    /// Sampling could not produce a survivor, or no covering witness
    /// exists at the current net density.
    InsufficientDensity = 2,
    /// Bad argument: invalid parameters, unparseable input, or I/O.
    InvalidArgument = 3,
    /// A required pointer was NULL.
    NullPointer = 4,
    /// Internal panic; indicates a bug.
    InternalError = 5,
}

/// Opaque staged packing state.
pub struct LppackState(PackingState);

/// Opaque sparse point.
pub struct LppackPoint(SparsePoint);

fn status_of(err: &Error) -> LppackStatus {
    match err {
        Error::UndefinedDispersion
        | Error::EmptyPointSet(_)
        | Error::InvariantViolation(_)
        | Error::DispersionViolation { .. }
        | Error::Precondition(_)
        | Error::WitnessVerification(_) => LppackStatus::VerificationFailure,
        Error::InsufficientDensity(_) => LppackStatus::InsufficientDensity,
        Error::InvalidParams(_) | Error::Io(_) | Error::Json(_) | Error::ParseLabel(_) => {
            LppackStatus::InvalidArgument
        }
    }
}

fn guarded<F: FnOnce() -> LppackStatus>(f: F) -> LppackStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(status) => status,
        Err(_) => LppackStatus::InternalError,
    }
}

fn to_c_string(s: String) -> *mut c_char {
    CString::new(s).map_or(ptr::null_mut(), CString::into_raw)
}

/// # Safety
/// `s` must be NULL or a NUL-terminated string valid for the call.
unsafe fn from_c_str<'a>(s: *const c_char) -> Option<&'a str> {
    if s.is_null() {
        return None;
    }
    CStr::from_ptr(s).to_str().ok()
}

/// Static library version string; do not free.
#[no_mangle]
pub extern "C" fn lppack_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

/// Builds a staged packing: `depth` stages with the given space and
/// sampler parameters. On success stores a new state in `out`.
///
/// # Safety
/// `out` must be a valid pointer to writable memory for one pointer.
#[no_mangle]
pub unsafe extern "C" fn lppack_state_build(
    p: f64,
    eta: f64,
    truncation_radius: f64,
    net_step: f64,
    max_points_per_stage: usize,
    max_support_size: usize,
    candidate_budget: usize,
    depth: usize,
    seed: u64,
    out: *mut *mut LppackState,
) -> LppackStatus {
    guarded(|| {
        if out.is_null() {
            return LppackStatus::NullPointer;
        }
        let params = match SpaceParams::with_eta(p, eta) {
            Ok(v) => v,
            Err(e) => return status_of(&e),
        };
        let sampler = SamplerConfig {
            truncation_radius,
            net_step,
            max_points_per_stage,
            max_support_size,
            candidate_budget,
        };
        if depth == 0 {
            return LppackStatus::InvalidArgument;
        }
        let mut state = match PackingState::init(params, sampler, seed) {
            Ok(v) => v,
            Err(e) => return status_of(&e),
        };
        for _ in 1..depth {
            state = match state.extend() {
                Ok(v) => v,
                Err(e) => return status_of(&e),
            };
        }
        *out = Box::into_raw(Box::new(LppackState(state)));
        LppackStatus::Ok
    })
}

/// Parses a state file produced by `lppack_state_to_json` or the CLI.
///
/// # Safety
/// `json` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn lppack_state_from_json(
    json: *const c_char,
    out: *mut *mut LppackState,
) -> LppackStatus {
    guarded(|| {
        if out.is_null() {
            return LppackStatus::NullPointer;
        }
        let Some(text) = from_c_str(json) else {
            return LppackStatus::NullPointer;
        };
        match PackingState::from_json_str(text) {
            Ok(state) => {
                *out = Box::into_raw(Box::new(LppackState(state)));
                LppackStatus::Ok
            }
            Err(e) => status_of(&e),
        }
    })
}

/// Serializes the state file JSON; free with `lppack_string_free`.
/// Returns NULL when `state` is NULL.
///
/// # Safety
/// `state` must be NULL or a live handle from this library.
#[no_mangle]
pub unsafe extern "C" fn lppack_state_to_json(state: *const LppackState) -> *mut c_char {
    match state.as_ref() {
        Some(state) => to_c_string(state.0.to_json_string()),
        None => ptr::null_mut(),
    }
}

/// One extension step; the input state is untouched and a new state is
/// stored in `out`.
///
/// # Safety
/// `state` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn lppack_state_extend(
    state: *const LppackState,
    out: *mut *mut LppackState,
) -> LppackStatus {
    guarded(|| {
        if out.is_null() {
            return LppackStatus::NullPointer;
        }
        let Some(state) = state.as_ref() else {
            return LppackStatus::NullPointer;
        };
        match state.0.extend() {
            Ok(next) => {
                *out = Box::into_raw(Box::new(LppackState(next)));
                LppackStatus::Ok
            }
            Err(e) => status_of(&e),
        }
    })
}

/// Number of stages; 0 when `state` is NULL.
///
/// # Safety
/// `state` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn lppack_state_depth(state: *const LppackState) -> usize {
    state.as_ref().map_or(0, |s| s.0.depth())
}

/// Total packing points across stages; 0 when `state` is NULL.
///
/// # Safety
/// `state` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn lppack_state_packing_count(state: *const LppackState) -> usize {
    state
        .as_ref()
        .map_or(0, |s| s.0.stages.iter().map(|st| st.packing.len()).sum())
}

/// Content digest (hex SHA-256); free with `lppack_string_free`.
///
/// # Safety
/// `state` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn lppack_state_digest(state: *const LppackState) -> *mut c_char {
    match state.as_ref() {
        Some(state) => to_c_string(state.0.digest()),
        None => ptr::null_mut(),
    }
}

/// Exact dispersion audit. Writes the minimum of `distance^p - 2` over
/// all packing pairs to `min_excess_out` when non-NULL. Returns
/// `VerificationFailure` when a pair violates dispersion or an identity
/// drifts, in which case `min_excess_out` is left untouched.
///
/// # Safety
/// `state` must be a live handle; `min_excess_out` NULL or writable.
#[no_mangle]
pub unsafe extern "C" fn lppack_state_verify(
    state: *const LppackState,
    min_excess_out: *mut f64,
) -> LppackStatus {
    guarded(|| {
        let Some(state) = state.as_ref() else {
            return LppackStatus::NullPointer;
        };
        match state.0.verify_dispersion() {
            Ok(report) => {
                if !min_excess_out.is_null() {
                    *min_excess_out = report.min_excess;
                }
                LppackStatus::Ok
            }
            Err(e) => status_of(&e),
        }
    })
}

/// Covering witness for `x` at tolerance `epsilon`. On success stores the
/// witness point in `witness_out` (caller frees) and, when non-NULL, the
/// recomputed distance in `distance_out`. `InsufficientDensity` is the
/// expected failure at coarse nets.
///
/// # Safety
/// `state` and `x` must be live handles; `witness_out` writable;
/// `distance_out` NULL or writable.
#[no_mangle]
pub unsafe extern "C" fn lppack_state_covering_witness(
    state: *const LppackState,
    x: *const LppackPoint,
    epsilon: f64,
    witness_out: *mut *mut LppackPoint,
    distance_out: *mut f64,
) -> LppackStatus {
    guarded(|| {
        if witness_out.is_null() {
            return LppackStatus::NullPointer;
        }
        let (Some(state), Some(x)) = (state.as_ref(), x.as_ref()) else {
            return LppackStatus::NullPointer;
        };
        match state.0.covering_witness(&x.0, epsilon) {
            Ok(witness) => {
                if !distance_out.is_null() {
                    *distance_out = witness.distance;
                }
                *witness_out = Box::into_raw(Box::new(LppackPoint(witness.point)));
                LppackStatus::Ok
            }
            Err(e) => status_of(&e),
        }
    })
}

/// Releases a state handle. NULL is a no-op.
///
/// # Safety
/// `state` must be NULL or an unreleased handle from this library.
#[no_mangle]
pub unsafe extern "C" fn lppack_state_free(state: *mut LppackState) {
    if !state.is_null() {
        drop(Box::from_raw(state));
    }
}

/// The origin point.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn lppack_point_zero(out: *mut *mut LppackPoint) -> LppackStatus {
    guarded(|| {
        if out.is_null() {
            return LppackStatus::NullPointer;
        }
        *out = Box::into_raw(Box::new(LppackPoint(SparsePoint::zero())));
        LppackStatus::Ok
    })
}

/// The unit vector on axis `s{stage}i{index}`; `stage` must be positive.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn lppack_point_unit(
    stage: u32,
    index: u32,
    out: *mut *mut LppackPoint,
) -> LppackStatus {
    guarded(|| {
        if out.is_null() {
            return LppackStatus::NullPointer;
        }
        match CoordId::new(stage, index) {
            Ok(coord) => {
                *out = Box::into_raw(Box::new(LppackPoint(SparsePoint::unit(coord))));
                LppackStatus::Ok
            }
            Err(e) => status_of(&e),
        }
    })
}

/// Sets one coordinate of a point in place; values below the support
/// threshold clear the entry.
///
/// # Safety
/// `point` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn lppack_point_set(
    point: *mut LppackPoint,
    stage: u32,
    index: u32,
    value: f64,
) -> LppackStatus {
    guarded(|| {
        let Some(point) = point.as_mut() else {
            return LppackStatus::NullPointer;
        };
        match CoordId::new(stage, index) {
            Ok(coord) => {
                point.0.set(coord, value);
                LppackStatus::Ok
            }
            Err(e) => status_of(&e),
        }
    })
}

/// Reads one coordinate (0 outside the support or on NULL).
///
/// # Safety
/// `point` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn lppack_point_get(
    point: *const LppackPoint,
    stage: u32,
    index: u32,
) -> f64 {
    match (point.as_ref(), CoordId::new(stage, index)) {
        (Some(point), Ok(coord)) => point.0.get(coord),
        _ => 0.0,
    }
}

/// Parses the point JSON form `{"entries": {"s1i0": 2.5}}`.
///
/// # Safety
/// `json` must be a NUL-terminated string; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn lppack_point_parse(
    json: *const c_char,
    out: *mut *mut LppackPoint,
) -> LppackStatus {
    guarded(|| {
        if out.is_null() {
            return LppackStatus::NullPointer;
        }
        let Some(text) = from_c_str(json) else {
            return LppackStatus::NullPointer;
        };
        match serde_json::from_str::<SparsePoint>(text) {
            Ok(point) => {
                *out = Box::into_raw(Box::new(LppackPoint(point)));
                LppackStatus::Ok
            }
            Err(_) => LppackStatus::InvalidArgument,
        }
    })
}

/// Serializes a point to its JSON form; free with `lppack_string_free`.
///
/// # Safety
/// `point` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn lppack_point_to_json(point: *const LppackPoint) -> *mut c_char {
    match point.as_ref() {
        Some(point) => match serde_json::to_string(&point.0) {
            Ok(json) => to_c_string(json),
            Err(_) => ptr::null_mut(),
        },
        None => ptr::null_mut(),
    }
}

/// Releases a point handle. NULL is a no-op.
///
/// # Safety
/// `point` must be NULL or an unreleased handle from this library.
#[no_mangle]
pub unsafe extern "C" fn lppack_point_free(point: *mut LppackPoint) {
    if !point.is_null() {
        drop(Box::from_raw(point));
    }
}

/// p-norm of a point under exponent `p` (margin `eta`).
///
/// # Safety
/// `point` must be a live handle; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn lppack_p_norm(
    point: *const LppackPoint,
    p: f64,
    eta: f64,
    out: *mut f64,
) -> LppackStatus {
    guarded(|| {
        if out.is_null() {
            return LppackStatus::NullPointer;
        }
        let Some(point) = point.as_ref() else {
            return LppackStatus::NullPointer;
        };
        match SpaceParams::with_eta(p, eta) {
            Ok(params) => {
                *out = point.0.p_norm(&params);
                LppackStatus::Ok
            }
            Err(e) => status_of(&e),
        }
    })
}

/// Distance between two points under exponent `p`.
///
/// # Safety
/// `a` and `b` must be live handles; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn lppack_distance(
    a: *const LppackPoint,
    b: *const LppackPoint,
    p: f64,
    eta: f64,
    out: *mut f64,
) -> LppackStatus {
    guarded(|| {
        if out.is_null() {
            return LppackStatus::NullPointer;
        }
        let (Some(a), Some(b)) = (a.as_ref(), b.as_ref()) else {
            return LppackStatus::NullPointer;
        };
        match SpaceParams::with_eta(p, eta) {
            Ok(params) => {
                *out = distance(&a.0, &b.0, &params);
                LppackStatus::Ok
            }
            Err(e) => status_of(&e),
        }
    })
}

/// Center-shift magnitude `((r + 2e)^p - r^p)^(1/p)` of the hole
/// expansion step.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn lppack_delta_step(
    r: f64,
    epsilon: f64,
    p: f64,
    eta: f64,
    out: *mut f64,
) -> LppackStatus {
    guarded(|| {
        if out.is_null() {
            return LppackStatus::NullPointer;
        }
        if r.is_nan() || r < 0.0 || epsilon.is_nan() || epsilon <= 0.0 {
            return LppackStatus::InvalidArgument;
        }
        match SpaceParams::with_eta(p, eta) {
            Ok(params) => {
                *out = delta_step(r, epsilon, &params);
                LppackStatus::Ok
            }
            Err(e) => status_of(&e),
        }
    })
}

/// Runs the greedy dispersed-set probe and stores the accepted count.
///
/// # Safety
/// `count_out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn lppack_greedy_dispersed_count(
    p: f64,
    eta: f64,
    dim: usize,
    alpha: f64,
    budget: usize,
    seed: u64,
    count_out: *mut usize,
) -> LppackStatus {
    guarded(|| {
        if count_out.is_null() {
            return LppackStatus::NullPointer;
        }
        if dim == 0 || alpha.is_nan() || alpha <= 0.0 {
            return LppackStatus::InvalidArgument;
        }
        match SpaceParams::with_eta(p, eta) {
            Ok(params) => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let accepted = greedy_dispersed_in_ball(&params, dim, alpha, budget, &mut rng);
                *count_out = accepted.len();
                LppackStatus::Ok
            }
            Err(e) => status_of(&e),
        }
    })
}

/// Releases a string returned by this library. NULL is a no-op.
///
/// # Safety
/// `s` must be NULL or an unreleased string from this library.
#[no_mangle]
pub unsafe extern "C" fn lppack_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}
