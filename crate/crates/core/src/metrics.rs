//! Packing and covering functionals for finite point sets.
//!
//! The packing radius of a set is half its minimum pairwise distance. The
//! covering radius of the whole space is not computable, so it is estimated
//! from below over a supplied test region and always reported as
//! "empirical". `gamma_estimate` rescales a set to a 1-packing at the
//! margin and reports the empirical covering radius of the rescaled pair,
//! which estimates the simultaneous packing-and-covering ratio.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lp_space::{distance, SpaceParams, SparsePoint};

/// Dispersion, packing and empirical covering radii of a point set,
/// normalized so the set is a 1-packing at the margin.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub min_pairwise_distance: f64,
    /// Exactly `min_pairwise_distance / 2`.
    pub packing_radius: f64,
    /// Max-min distance over the test region; a lower estimate of the
    /// true covering radius.
    pub empirical_covering_radius: f64,
    /// `empirical_covering_radius / packing_radius`.
    pub gamma_ratio: f64,
    pub num_test_points: usize,
    /// The test point realizing the empirical covering radius.
    pub worst_test_point: SparsePoint,
}

/// Minimum pairwise distance over all unordered pairs.
///
/// Fewer than two points is an error so the caller has to make the
/// "no dispersion" case explicit rather than silently read an infinity.
pub fn min_pairwise_distance(points: &[SparsePoint], params: &SpaceParams) -> Result<f64> {
    if points.len() < 2 {
        return Err(Error::UndefinedDispersion);
    }
    let mut min = f64::INFINITY;
    for i in 0..points.len() {
        for j in (i + 1)..points.len() {
            let d = distance(&points[i], &points[j], params);
            if d < min {
                min = d;
            }
        }
    }
    Ok(min)
}

/// Max over test points of the distance to the nearest set point, together
/// with the maximizing test point (first maximizer wins on ties).
///
/// This is the covering radius restricted to the region `test`; the true
/// covering radius dominates it.
pub fn covering_radius_empirical(
    points: &[SparsePoint],
    test: &[SparsePoint],
    params: &SpaceParams,
) -> Result<(f64, SparsePoint)> {
    if points.is_empty() {
        return Err(Error::EmptyPointSet(
            "covering radius needs a nonempty point set",
        ));
    }
    if test.is_empty() {
        return Err(Error::EmptyPointSet(
            "covering radius needs a nonempty test region",
        ));
    }
    let mut worst = f64::NEG_INFINITY;
    let mut worst_point = &test[0];
    for t in test {
        let mut nearest = f64::INFINITY;
        for q in points {
            let d = distance(t, q, params);
            if d < nearest {
                nearest = d;
            }
        }
        if nearest > worst {
            worst = nearest;
            worst_point = t;
        }
    }
    Ok((worst, worst_point.clone()))
}

/// Rescales `points` by `2 / min_pairwise_distance` so the set becomes a
/// 1-packing at the margin, rescales `test` identically, and reports the
/// empirical covering radius of the rescaled pair. The `gamma_ratio` field
/// is that radius divided by the rescaled packing radius.
pub fn gamma_estimate(
    points: &[SparsePoint],
    test: &[SparsePoint],
    params: &SpaceParams,
) -> Result<MetricsReport> {
    let min_dist = min_pairwise_distance(points, params)?;
    if min_dist <= 0.0 {
        return Err(Error::InvalidParams(
            "gamma estimate needs distinct points (zero minimum pairwise distance)".into(),
        ));
    }
    let s = 2.0 / min_dist;
    let scaled_points: Vec<SparsePoint> = points.iter().map(|x| x.scale(s)).collect();
    let scaled_test: Vec<SparsePoint> = test.iter().map(|x| x.scale(s)).collect();

    let scaled_min = min_pairwise_distance(&scaled_points, params)?;
    let packing_radius = scaled_min / 2.0;
    let (covering, worst) = covering_radius_empirical(&scaled_points, &scaled_test, params)?;

    Ok(MetricsReport {
        min_pairwise_distance: scaled_min,
        packing_radius,
        empirical_covering_radius: covering,
        gamma_ratio: covering / packing_radius,
        num_test_points: test.len(),
        worst_test_point: worst,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lp_space::CoordId;

    fn c(stage: u32, index: u32) -> CoordId {
        CoordId::new(stage, index).unwrap()
    }

    fn params(p: f64) -> SpaceParams {
        SpaceParams::new(p).unwrap()
    }

    #[test]
    fn min_pairwise_disjoint_units() {
        let p = params(2.0);
        let points = vec![SparsePoint::unit(c(1, 0)), SparsePoint::unit(c(1, 1))];
        let d = min_pairwise_distance(&points, &p).unwrap();
        assert_eq!(d, 2f64.powf(0.5));
    }

    #[test]
    fn min_pairwise_l1() {
        let p = params(1.0);
        let points = vec![
            SparsePoint::zero(),
            SparsePoint::from_entries([(c(1, 0), 3.0)]),
        ];
        assert_eq!(min_pairwise_distance(&points, &p).unwrap(), 3.0);
    }

    #[test]
    fn min_pairwise_needs_two_points() {
        let p = params(2.0);
        let err = min_pairwise_distance(&[SparsePoint::zero()], &p).unwrap_err();
        assert!(matches!(err, Error::UndefinedDispersion));
    }

    #[test]
    fn covering_midpoint_of_two_points() {
        let p = params(2.0);
        let e = SparsePoint::unit(c(1, 0));
        let points = vec![e.scale(-2.0), e.scale(2.0)];
        let test = vec![SparsePoint::zero()];
        let (r, worst) = covering_radius_empirical(&points, &test, &p).unwrap();
        assert_eq!(r, 2.0);
        assert!(worst.is_zero());
    }

    #[test]
    fn covering_test_point_inside_set() {
        let p = params(2.0);
        let e = SparsePoint::unit(c(1, 0));
        let singleton = [e.clone()];
        let (r, worst) = covering_radius_empirical(&singleton, &singleton, &p).unwrap();
        assert_eq!(r, 0.0);
        assert_eq!(worst, e);
    }

    #[test]
    fn covering_rejects_empty_inputs() {
        let p = params(2.0);
        let e = SparsePoint::unit(c(1, 0));
        let singleton = [e];
        assert!(covering_radius_empirical(&[], &singleton, &p).is_err());
        assert!(covering_radius_empirical(&singleton, &[], &p).is_err());
    }

    /// Independent straight-line oracle for the 41-point grid case: plain
    /// nested loops, literal arithmetic, same mandated summation order.
    #[test]
    fn covering_matches_grid_oracle_bitwise() {
        let p = params(2.0);
        let ea = SparsePoint::unit(c(1, 0));
        let eb = SparsePoint::unit(c(1, 1));
        let points = vec![ea, eb];
        let test: Vec<SparsePoint> = (0..41)
            .map(|k| SparsePoint::from_entries([(c(1, 0), -2.0 + 0.1 * k as f64)]))
            .collect();

        // Oracle: coordinates of each test point are (t, 0) over axes
        // (s1i0, s1i1); distances to e_a = (1,0) and e_b = (0,1) computed
        // term by term in ascending axis order.
        let mut oracle_worst = f64::NEG_INFINITY;
        for k in 0..41 {
            let t = -2.0 + 0.1 * k as f64;
            let d_a = ((t - 1.0f64).abs().powf(2.0)).powf(0.5);
            let d_b = ((t - 0.0f64).abs().powf(2.0) + 1.0f64.powf(2.0)).powf(0.5);
            let nearest = if d_a < d_b { d_a } else { d_b };
            if nearest > oracle_worst {
                oracle_worst = nearest;
            }
        }

        let (r, worst) = covering_radius_empirical(&points, &test, &p).unwrap();
        assert_eq!(r, oracle_worst);
        assert!((r - 5f64.powf(0.5)).abs() < 1e-12);
        assert_eq!(worst.get(c(1, 0)), -2.0);
    }

    #[test]
    fn gamma_perfect_one_dimensional_tiling() {
        let p = params(1.0);
        let e = SparsePoint::unit(c(1, 0));
        let points = vec![e.scale(-1.0), e.clone()];
        let test = vec![SparsePoint::zero()];
        let report = gamma_estimate(&points, &test, &p).unwrap();
        assert_eq!(report.gamma_ratio, 1.0);
        assert_eq!(report.packing_radius, 1.0);
        assert_eq!(report.min_pairwise_distance, 2.0);
    }

    #[test]
    fn gamma_invariant_under_prescaling() {
        let p = params(2.0);
        let points = vec![
            SparsePoint::from_entries([(c(1, 0), 1.0), (c(1, 1), -0.5)]),
            SparsePoint::from_entries([(c(1, 1), 2.0)]),
            SparsePoint::from_entries([(c(1, 0), -1.5), (c(1, 2), 0.25)]),
        ];
        let test = vec![
            SparsePoint::from_entries([(c(1, 0), 0.7), (c(1, 2), -1.0)]),
            SparsePoint::zero(),
        ];
        let base = gamma_estimate(&points, &test, &p).unwrap();
        for scale in [0.1, 3.0, 17.0] {
            let sp: Vec<SparsePoint> = points.iter().map(|x| x.scale(scale)).collect();
            let st: Vec<SparsePoint> = test.iter().map(|x| x.scale(scale)).collect();
            let scaled = gamma_estimate(&sp, &st, &p).unwrap();
            let rel = (scaled.gamma_ratio - base.gamma_ratio).abs() / base.gamma_ratio;
            assert!(
                rel <= 1e-12,
                "gamma drifted by {rel} under prescale {scale}"
            );
        }
    }

    #[test]
    fn report_fields_are_consistent() {
        let p = params(2.0);
        let points = vec![
            SparsePoint::unit(c(1, 0)),
            SparsePoint::unit(c(1, 1)),
            SparsePoint::zero(),
        ];
        let test = vec![SparsePoint::from_entries([(c(1, 0), -0.4), (c(1, 1), 0.3)])];
        let report = gamma_estimate(&points, &test, &p).unwrap();
        assert_eq!(report.packing_radius, report.min_pairwise_distance / 2.0);
        assert_eq!(
            report.gamma_ratio,
            report.empirical_covering_radius / report.packing_radius
        );
        assert!(report.empirical_covering_radius >= 0.0);
        assert_eq!(report.num_test_points, 1);
    }
}
