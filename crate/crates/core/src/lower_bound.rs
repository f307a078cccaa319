//! Executable form of the hole-expansion argument and an empirical prober
//! for the dispersed-set bound in the unit ball.
//!
//! A hole is a ball empty of packing points. Shifting its center by
//! `delta` along a coordinate axis that no point of the packing touches
//! grows the hole radius by `2 * epsilon` per step, and the growth is
//! re-verified by direct recomputation every time: for points near the old
//! center the fresh axis makes the p-th powers add exactly, for far points
//! the triangle inequality carries the bound. The infinite-set bound
//! itself is not provable here; `greedy_dispersed_in_ball` only measures
//! how quickly greedy packings of the unit ball stall.

use rand::Rng;
use rand_distr::{Distribution, Gamma};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::lp_space::{distance, distance_pow, CoordId, SpaceParams, SparsePoint};

/// Center-shift magnitude `((r + 2e)^p - r^p)^(1/p)`; positive for every
/// `r >= 0`, `e > 0`.
pub fn delta_step(r: f64, epsilon: f64, params: &SpaceParams) -> f64 {
    ((r + 2.0 * epsilon).powf(params.p) - r.powf(params.p)).powf(1.0 / params.p)
}

/// A verified hole: every point of the packing lies strictly farther than
/// `radius` from `center`. `near_set` holds the points within
/// `radius + delta + 2 * epsilon`, the ones the shift identity applies to.
#[derive(Debug, Clone, Serialize)]
pub struct HoleState {
    pub center: SparsePoint,
    pub radius: f64,
    pub epsilon: f64,
    pub delta: f64,
    pub near_set: Vec<SparsePoint>,
}

impl HoleState {
    /// Validates that the hole is genuine for `points` and computes the
    /// derived fields.
    pub fn new(
        center: SparsePoint,
        radius: f64,
        epsilon: f64,
        points: &[SparsePoint],
        params: &SpaceParams,
    ) -> Result<Self> {
        params.validate()?;
        if radius.is_nan() || radius < 0.0 {
            return Err(Error::InvalidParams(format!(
                "hole radius must be nonnegative, got {radius}"
            )));
        }
        if epsilon.is_nan() || epsilon <= 0.0 {
            return Err(Error::InvalidParams(format!(
                "hole epsilon must be positive, got {epsilon}"
            )));
        }
        for (i, x) in points.iter().enumerate() {
            let d = distance(x, &center, params);
            if d <= radius {
                return Err(Error::Precondition(format!(
                    "hole is not genuine: point {i} sits at distance {d} <= radius {radius}"
                )));
            }
        }
        let delta = delta_step(radius, epsilon, params);
        let reach = radius + delta + 2.0 * epsilon;
        let near_set = points
            .iter()
            .filter(|x| distance(x, &center, params) <= reach)
            .cloned()
            .collect();
        Ok(HoleState {
            center,
            radius,
            epsilon,
            delta,
            near_set,
        })
    }
}

/// One expansion step: shifts the hole center by `delta` along `fresh`
/// and grows the radius by `2 * epsilon`.
///
/// `fresh` must appear in no point's support and not in the center's. The
/// postcondition is re-verified point by point: near points through the
/// disjoint-support power identity, all points through a direct distance
/// recomputation against the new radius.
pub fn expand_hole(
    points: &[SparsePoint],
    hole: &HoleState,
    fresh: CoordId,
    params: &SpaceParams,
) -> Result<HoleState> {
    if hole.center.support().any(|c| c == fresh) {
        return Err(Error::Precondition(format!(
            "shift coordinate {fresh} already occurs in the hole center"
        )));
    }
    for (i, x) in points.iter().enumerate() {
        if x.support().any(|c| c == fresh) {
            return Err(Error::Precondition(format!(
                "shift coordinate {fresh} occurs in point {i}; it is not fresh"
            )));
        }
    }

    let reach = hole.radius + hole.delta + 2.0 * hole.epsilon;
    let new_radius = hole.radius + 2.0 * hole.epsilon;
    let new_center = hole.center.add(&SparsePoint::unit(fresh).scale(hole.delta));
    let delta_pow = hole.delta.powf(params.p);

    for (i, x) in points.iter().enumerate() {
        let d_old = distance(x, &hole.center, params);
        if d_old <= hole.radius {
            return Err(Error::Precondition(format!(
                "hole is not genuine: point {i} sits at distance {d_old} <= radius {}",
                hole.radius
            )));
        }
        let d_new_pow = distance_pow(x, &new_center, params);
        if d_old <= reach {
            // Near point: the fresh axis is disjoint from supp(x - c), so
            // the p-th powers must add exactly (up to rounding).
            let d_old_pow = distance_pow(x, &hole.center, params);
            let expected = d_old_pow + delta_pow;
            let tol = 1e-12 * (1.0 + expected.abs());
            if (d_new_pow - expected).abs() > tol {
                return Err(Error::InvariantViolation(format!(
                    "fresh-shift identity failed for point {i}: \
                     |x - c'|^p = {d_new_pow}, expected {expected}"
                )));
            }
        }
        let d_new = distance(x, &new_center, params);
        if d_new <= new_radius {
            return Err(Error::InvariantViolation(format!(
                "expanded hole not empty: point {i} at distance {d_new} <= {new_radius}"
            )));
        }
    }

    HoleState::new(new_center, new_radius, hole.epsilon, points, params)
}

/// Draws a point uniformly from the unit ball of the `coords`-spanned
/// subspace: signed exponential-power coordinates appropriate to `p`,
/// normalized to the sphere, then pushed inward by `u^(1/dim)`.
pub fn sample_in_unit_ball<R: Rng>(
    params: &SpaceParams,
    coords: &[CoordId],
    rng: &mut R,
) -> SparsePoint {
    let dim = coords.len();
    let gamma = Gamma::new(1.0 / params.p, 1.0).expect("p >= 1 gives a valid shape");
    loop {
        let mut values = Vec::with_capacity(dim);
        let mut norm_pow = 0.0;
        for _ in 0..dim {
            let magnitude = gamma.sample(rng).powf(1.0 / params.p);
            let sign = if rng.gen::<bool>() { 1.0 } else { -1.0 };
            let v = sign * magnitude;
            norm_pow += v.abs().powf(params.p);
            values.push(v);
        }
        if norm_pow <= 0.0 || !norm_pow.is_finite() {
            continue;
        }
        let norm = norm_pow.powf(1.0 / params.p);
        let radial = rng.gen::<f64>().powf(1.0 / dim as f64);
        let mut point = SparsePoint::zero();
        for (coord, v) in coords.iter().zip(values) {
            point.set(*coord, radial * v / norm);
        }
        return point;
    }
}

/// Greedily accumulates points of p-norm at most 1 in a `dim`-axis
/// subspace, each strictly farther than `alpha` (with the strictness
/// margin) from all points accepted before it. The canonical candidates
/// `+e_i` then `-e_i` are tried first and do not count against `budget`;
/// `budget` seeded uniform-in-ball draws follow. Acceptance order is the
/// return order.
pub fn greedy_dispersed_in_ball<R: Rng>(
    params: &SpaceParams,
    dim: usize,
    alpha: f64,
    budget: usize,
    rng: &mut R,
) -> Vec<SparsePoint> {
    let coords: Vec<CoordId> = (0..dim)
        .map(|i| CoordId::new(1, i as u32).expect("stage 1 is valid"))
        .collect();
    let mut accepted: Vec<SparsePoint> = Vec::new();
    let threshold = alpha + params.eta;

    let consider = |z: SparsePoint, accepted: &mut Vec<SparsePoint>| {
        if z.p_norm(params) > 1.0 + 1e-12 {
            return;
        }
        if accepted.iter().all(|a| distance(&z, a, params) > threshold) {
            accepted.push(z);
        }
    };

    for &coord in &coords {
        consider(SparsePoint::unit(coord), &mut accepted);
    }
    for &coord in &coords {
        consider(SparsePoint::unit(coord).scale(-1.0), &mut accepted);
    }
    for _ in 0..budget {
        let z = sample_in_unit_ball(params, &coords, rng);
        consider(z, &mut accepted);
    }
    accepted
}

/// Rejection-samples a finite dispersed set: at most `max_points` points
/// in a `dim`-axis subspace with norms in `(norm_floor, max_norm]` and
/// pairwise distances strictly above `min_separation`. Used to stage
/// hole-expansion experiments on sets that have a genuine hole at the
/// origin.
pub fn random_dispersed_set<R: Rng>(
    params: &SpaceParams,
    max_points: usize,
    dim: usize,
    max_norm: f64,
    min_separation: f64,
    rng: &mut R,
) -> Vec<SparsePoint> {
    let coords: Vec<CoordId> = (0..dim)
        .map(|i| CoordId::new(1, i as u32).expect("stage 1 is valid"))
        .collect();
    let norm_floor = 1e-6;
    let mut accepted: Vec<SparsePoint> = Vec::new();
    let attempts = 60 * max_points;
    for _ in 0..attempts {
        if accepted.len() >= max_points {
            break;
        }
        let z = sample_in_unit_ball(params, &coords, rng).scale(max_norm);
        if z.p_norm(params) <= norm_floor {
            continue;
        }
        if accepted
            .iter()
            .all(|a| distance(&z, a, params) > min_separation)
        {
            accepted.push(z);
        }
    }
    accepted
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn c(stage: u32, index: u32) -> CoordId {
        CoordId::new(stage, index).unwrap()
    }

    fn params(p: f64) -> SpaceParams {
        SpaceParams::new(p).unwrap()
    }

    #[test]
    fn delta_step_closed_forms() {
        let rel = |a: f64, b: f64| (a - b).abs() / b.abs().max(1.0);
        assert!(rel(delta_step(0.0, 0.5, &params(1.0)), 1.0) <= 1e-12);
        assert!(rel(delta_step(1.0, 0.5, &params(2.0)), 3f64.sqrt()) <= 1e-12);
        assert!((delta_step(1.0, 0.5, &params(2.0)) - 1.7320508).abs() < 1e-7);
        assert!(rel(delta_step(1.0, 0.5, &params(1.0)), 1.0) <= 1e-12);
        assert!(delta_step(0.3, 0.01, &params(1.5)) > 0.0);
    }

    #[test]
    fn expand_hole_matches_hand_computation() {
        // Two unit vectors, hole of radius 0.5 at the origin, epsilon 1/4:
        // delta = sqrt(1 - 0.25) and the shifted center sits at distance
        // sqrt(1.75) > 1 from both points.
        let p = params(2.0);
        let points = vec![SparsePoint::unit(c(1, 0)), SparsePoint::unit(c(1, 1))];
        let hole = HoleState::new(SparsePoint::zero(), 0.5, 0.25, &points, &p).unwrap();
        assert!((hole.delta - 0.75f64.sqrt()).abs() < 1e-12);
        let fresh = c(7, 0);
        let expanded = expand_hole(&points, &hole, fresh, &p).unwrap();
        assert_eq!(expanded.radius, 1.0);
        let d = distance(&points[0], &expanded.center, &p);
        assert!((d - 1.75f64.sqrt()).abs() < 1e-12);
        assert!((d - 1.3229).abs() < 1e-4);
        assert!(d > 1.0);
    }

    #[test]
    fn iterated_expansion_radius_is_exact_for_dyadic_epsilon() {
        let p = params(2.0);
        let points = vec![
            SparsePoint::unit(c(1, 0)).scale(2.0),
            SparsePoint::unit(c(1, 1)).scale(-3.0),
        ];
        let eps = 0.25;
        let mut hole = HoleState::new(SparsePoint::zero(), 0.0, eps, &points, &p).unwrap();
        for k in 1..=4 {
            hole = expand_hole(&points, &hole, c(9, k as u32), &p).unwrap();
            assert_eq!(hole.radius, 2.0 * k as f64 * eps);
        }
    }

    #[test]
    fn expand_hole_rejects_used_coordinates() {
        let p = params(2.0);
        let points = vec![SparsePoint::unit(c(1, 0))];
        let hole = HoleState::new(SparsePoint::zero(), 0.5, 0.25, &points, &p).unwrap();
        let err = expand_hole(&points, &hole, c(1, 0), &p).unwrap_err();
        assert!(matches!(err, Error::Precondition(_)));

        // A coordinate used by the center is equally unusable.
        let off_center = SparsePoint::unit(c(2, 0)).scale(0.1);
        let hole2 = HoleState::new(off_center, 0.05, 0.25, &points, &p).unwrap();
        let err2 = expand_hole(&points, &hole2, c(2, 0), &p).unwrap_err();
        assert!(matches!(err2, Error::Precondition(_)));
    }

    #[test]
    fn hole_must_be_genuine() {
        let p = params(2.0);
        let points = vec![SparsePoint::unit(c(1, 0)).scale(0.3)];
        let err = HoleState::new(SparsePoint::zero(), 0.5, 0.25, &points, &p).unwrap_err();
        assert!(matches!(err, Error::Precondition(_)));
    }

    #[test]
    fn expansion_never_fails_on_random_finite_sets() {
        for (i, p_val) in [1.0, 1.5, 2.0, 3.0].iter().enumerate() {
            let p = params(*p_val);
            let mut rng = ChaCha8Rng::seed_from_u64(100 + i as u64);
            let points = random_dispersed_set(&p, 40, 10, 4.0, 1.0, &mut rng);
            assert!(points.len() > 5);
            let mut hole = HoleState::new(SparsePoint::zero(), 0.0, 0.1, &points, &p).unwrap();
            for k in 0..5 {
                hole = expand_hole(&points, &hole, c(500, k), &p).unwrap();
            }
        }
    }

    #[test]
    fn greedy_accepts_all_canonical_vectors_below_the_bound() {
        for p_val in [1.0, 2.0, 3.0] {
            let p = params(p_val);
            let alpha = 2f64.powf(1.0 / p_val) - 1e-6;
            let dim = 12;
            let mut rng = ChaCha8Rng::seed_from_u64(1);
            let accepted = greedy_dispersed_in_ball(&p, dim, alpha, 50, &mut rng);
            assert!(
                accepted.len() >= dim,
                "p={p_val}: {} < {dim}",
                accepted.len()
            );
            // Post-hoc audit: genuinely dispersed, genuinely inside the ball.
            for (i, a) in accepted.iter().enumerate() {
                assert!(a.p_norm(&p) <= 1.0 + 1e-12);
                for b in accepted.iter().skip(i + 1) {
                    assert!(distance(a, b, &p) > alpha);
                }
            }
        }
    }

    #[test]
    fn greedy_at_the_diameter_stalls_immediately() {
        let p = params(2.0);
        for seed in [1u64, 2, 3] {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let accepted = greedy_dispersed_in_ball(&p, 8, 2.0, 2_000, &mut rng);
            assert!(accepted.len() <= 2, "seed {seed}: {}", accepted.len());
        }
    }

    #[test]
    fn greedy_count_is_monotone_in_alpha_for_fixed_seed() {
        let p = params(2.0);
        let mut counts = Vec::new();
        for alpha in [1.0, 1.2, 2f64.sqrt(), 1.5, 1.7, 2.0] {
            let mut rng = ChaCha8Rng::seed_from_u64(77);
            counts.push(greedy_dispersed_in_ball(&p, 10, alpha, 3_000, &mut rng).len());
        }
        for w in counts.windows(2) {
            assert!(w[0] >= w[1], "counts not monotone: {counts:?}");
        }
    }

    #[test]
    fn ball_samples_stay_inside_and_vary() {
        let p = params(1.5);
        let coords: Vec<CoordId> = (0..6).map(|i| c(1, i)).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut norms = Vec::new();
        for _ in 0..200 {
            let z = sample_in_unit_ball(&p, &coords, &mut rng);
            let n = z.p_norm(&p);
            assert!(n <= 1.0 + 1e-12);
            norms.push(n);
        }
        let spread = norms.iter().cloned().fold(f64::MIN, f64::max)
            - norms.iter().cloned().fold(f64::MAX, f64::min);
        assert!(spread > 0.2);
    }
}
