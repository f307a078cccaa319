//! The staged packing construction at finite truncation.
//!
//! Stage 1 holds the origin as its only dense point and an empty packing.
//! Each extension mints one fresh coordinate axis per dense point of the
//! latest stage, lifts those points by a unit step along their own axis to
//! form the next packing set, and then samples a finite stand-in for a
//! dense subset of the complement of the unit balls around all packing
//! points so far. Dispersion of the resulting packing does not depend on
//! how well the sampler approximates density, and is re-verified exactly;
//! covering quality does depend on it and is only measured.

use std::collections::BTreeMap;
use std::collections::BTreeSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::digest::digest_bytes;
use crate::error::{Error, Result};
use crate::lp_space::{distance, distance_pow, CoordId, SpaceParams, SparsePoint};

/// Finite stand-in parameters for "a countable dense subset": candidates
/// are drawn from the ball of radius `truncation_radius`, on a value grid
/// of pitch `net_step`, with at most `max_support_size` nonzero axes, and
/// at most `max_points_per_stage` survivors are kept per stage. Density is
/// a tunable, not a guarantee.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SamplerConfig {
    pub truncation_radius: f64,
    pub net_step: f64,
    pub max_points_per_stage: usize,
    pub max_support_size: usize,
    pub candidate_budget: usize,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        SamplerConfig {
            truncation_radius: 3.0,
            net_step: 0.5,
            max_points_per_stage: 200,
            max_support_size: 3,
            candidate_budget: 10_000,
        }
    }
}

impl SamplerConfig {
    pub fn validate(&self) -> Result<()> {
        if !self.truncation_radius.is_finite() || self.truncation_radius <= 0.0 {
            return Err(Error::InvalidParams(format!(
                "truncation radius must be positive, got {}",
                self.truncation_radius
            )));
        }
        if !self.net_step.is_finite() || self.net_step <= 0.0 {
            return Err(Error::InvalidParams(format!(
                "net step must be positive, got {}",
                self.net_step
            )));
        }
        if self.max_points_per_stage == 0 {
            return Err(Error::InvalidParams(
                "max points per stage must be positive".into(),
            ));
        }
        if self.max_support_size == 0 {
            return Err(Error::InvalidParams(
                "max support size must be positive".into(),
            ));
        }
        if self.candidate_budget == 0 {
            return Err(Error::InvalidParams(
                "candidate budget must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// One stage: the dense sample `D_n` and the packing set `P_n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Stage {
    pub dense: Vec<SparsePoint>,
    pub packing: Vec<SparsePoint>,
}

/// Staged record of the construction: parameters, seed, the per-stage
/// dense and packing sets, and the registry mapping each minted axis to
/// the dense point it was minted for.
#[derive(Debug, Clone, PartialEq)]
pub struct PackingState {
    pub params: SpaceParams,
    pub sampler: SamplerConfig,
    pub seed: u64,
    pub stages: Vec<Stage>,
    coord_registry: BTreeMap<CoordId, SparsePoint>,
}

/// Exact dispersion audit over all packing pairs, with the per-pair case
/// decomposition: same-stage pairs must satisfy
/// `d^p = |x-y|^p + 2`, cross-stage pairs `d^p = 1 + |x+e_x-y|^p`.
#[derive(Debug, Clone, Serialize)]
pub struct DispersionReport {
    pub num_packing_points: usize,
    pub num_pairs: usize,
    /// Minimum over pairs of `distance^p - 2`; positive means dispersed.
    pub min_excess: f64,
    pub num_same_stage_pairs: usize,
    pub num_cross_stage_pairs: usize,
    pub max_same_stage_defect: f64,
    pub max_cross_stage_defect: f64,
}

/// Tolerance on the exact case identities; they hold to rounding error,
/// never to discretization error.
pub const CASE_IDENTITY_TOL: f64 = 1e-9;

/// A covering witness together with how it was found.
#[derive(Debug, Clone, Serialize)]
pub struct CoveringWitness {
    pub point: SparsePoint,
    /// Recomputed `|x - point|`, always `< 1 + epsilon`.
    pub distance: f64,
    /// Truncation stage the proof walk used.
    pub stage: usize,
    /// True when an existing packing point was within 1 of the truncation;
    /// false when a dense point had to be lifted.
    pub via_packing_ball: bool,
}

impl PackingState {
    /// Stage 1: the dense set holds only the origin, the packing is empty.
    pub fn init(params: SpaceParams, sampler: SamplerConfig, seed: u64) -> Result<Self> {
        params.validate()?;
        sampler.validate()?;
        let state = PackingState {
            params,
            sampler,
            seed,
            stages: vec![Stage {
                dense: vec![SparsePoint::zero()],
                packing: Vec::new(),
            }],
            coord_registry: BTreeMap::new(),
        };
        state.check_invariants()?;
        Ok(state)
    }

    /// Raw constructor from already-built stages; rebuilds the coordinate
    /// registry but does not re-check invariants. Used by deserialization
    /// and by tests that need to craft deliberately broken states.
    pub fn from_parts(
        params: SpaceParams,
        sampler: SamplerConfig,
        seed: u64,
        stages: Vec<Stage>,
    ) -> Self {
        let mut coord_registry = BTreeMap::new();
        let depth = stages.len();
        for s in 1..depth {
            for (k, point) in stages[s - 1].dense.iter().enumerate() {
                let coord = CoordId::new(s as u32, k as u32).expect("stage >= 1");
                coord_registry.insert(coord, point.clone());
            }
        }
        PackingState {
            params,
            sampler,
            seed,
            stages,
            coord_registry,
        }
    }

    /// Number of stages built so far.
    pub fn depth(&self) -> usize {
        self.stages.len()
    }

    /// Axis registry: every minted coordinate and the dense point it was
    /// minted for.
    pub fn coord_registry(&self) -> &BTreeMap<CoordId, SparsePoint> {
        &self.coord_registry
    }

    /// All packing points in stage order (stable).
    pub fn all_packing_points(&self) -> Vec<SparsePoint> {
        self.stages
            .iter()
            .flat_map(|stage| stage.packing.iter().cloned())
            .collect()
    }

    fn packing_refs(&self) -> Vec<&SparsePoint> {
        self.stages
            .iter()
            .flat_map(|stage| stage.packing.iter())
            .collect()
    }

    /// Packing points with provenance: (stage number, index within stage,
    /// packing point, dense source point).
    fn packing_with_sources(&self) -> Vec<(usize, usize, &SparsePoint, &SparsePoint)> {
        let mut out = Vec::new();
        for (i, stage) in self.stages.iter().enumerate() {
            let stage_number = i + 1;
            for (k, q) in stage.packing.iter().enumerate() {
                // P_s is the lift of D_{s-1}.
                let source = &self.stages[i - 1].dense[k];
                out.push((stage_number, k, q, source));
            }
        }
        out
    }

    /// One extension step: mints a fresh axis per dense point of the last
    /// stage, forms the next packing set, samples the next dense set, and
    /// re-checks every structural invariant before returning.
    pub fn extend(&self) -> Result<Self> {
        let n = self.stages.len();
        let minted_stage = n as u32;
        let last_dense = &self.stages[n - 1].dense;

        let mut coord_registry = self.coord_registry.clone();
        let mut packing = Vec::with_capacity(last_dense.len());
        for (k, x) in last_dense.iter().enumerate() {
            let coord = CoordId::new(minted_stage, k as u32)?;
            if coord_registry.contains_key(&coord) {
                return Err(Error::InvariantViolation(format!(
                    "coordinate {coord} minted twice"
                )));
            }
            coord_registry.insert(coord, x.clone());
            packing.push(x.add(&SparsePoint::unit(coord)));
        }

        let mut stages = self.stages.clone();
        stages.push(Stage {
            dense: Vec::new(),
            packing,
        });
        let mut next = PackingState {
            params: self.params,
            sampler: self.sampler,
            seed: self.seed,
            stages,
            coord_registry,
        };

        // One RNG stream per stage so the state is a pure function of
        // (params, sampler, seed, depth) regardless of call history.
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream((n + 1) as u64);
        let dense = next.sample_complement(&mut rng);
        if dense.is_empty() {
            return Err(Error::InsufficientDensity(format!(
                "no candidate for stage {} survived rejection within budget {}; \
                 adjust truncation radius, net step, or stage cap",
                n + 1,
                self.sampler.candidate_budget
            )));
        }
        next.stages.last_mut().expect("just pushed").dense = dense;
        next.check_invariants()?;
        Ok(next)
    }

    /// Samples dense-set candidates for the latest stage: deterministic
    /// grid points on every single minted axis first, then seeded random
    /// candidates with support of bounded size, values on the `net_step`
    /// grid inside the ball of radius `truncation_radius`. Candidates
    /// within `1 + eta` of any packing point are rejected; survivors are
    /// deduplicated against every earlier dense set and returned in
    /// deterministic seeded order, at most `max_points_per_stage` of them.
    pub fn sample_complement<R: Rng>(&self, rng: &mut R) -> Vec<SparsePoint> {
        let coords: Vec<CoordId> = self.coord_registry.keys().copied().collect();
        if coords.is_empty() {
            return Vec::new();
        }
        let packing_all = self.packing_refs();
        let mut seen: BTreeSet<String> = self
            .stages
            .iter()
            .flat_map(|stage| stage.dense.iter().map(|z| z.canonical_key()))
            .collect();

        let cap = self.sampler.max_points_per_stage;
        let radius = self.sampler.truncation_radius;
        let step = self.sampler.net_step;
        let k_max = (radius / step + 1e-9).floor() as i64;
        let exclusion = 1.0 + self.params.eta;
        let mut survivors: Vec<SparsePoint> = Vec::new();

        let clear_of_packing = |z: &SparsePoint| {
            packing_all
                .iter()
                .all(|q| distance(z, q, &self.params) > exclusion)
        };

        // Deterministic per-axis grids, round-robin over axes by grid
        // magnitude so truncation spreads evenly across axes. The grids
        // claim at most half the stage cap; the rest is left to sparse
        // random candidates, keeping the net diverse in support.
        let axis_cap = cap.div_ceil(2);
        'grid: for k in 1..=k_max {
            for sign in [-1i64, 1] {
                for &coord in &coords {
                    if survivors.len() >= axis_cap {
                        break 'grid;
                    }
                    let z = SparsePoint::from_entries([(coord, (sign * k) as f64 * step)]);
                    if clear_of_packing(&z) && seen.insert(z.canonical_key()) {
                        survivors.push(z);
                    }
                }
            }
        }

        // Seeded rejection sampling with sparse support.
        let support_cap = self.sampler.max_support_size.min(coords.len());
        for _ in 0..self.sampler.candidate_budget {
            if survivors.len() >= cap {
                break;
            }
            let support_size = rng.gen_range(1..=support_cap);
            let mut chosen: Vec<usize> = Vec::with_capacity(support_size);
            while chosen.len() < support_size {
                let idx = rng.gen_range(0..coords.len());
                if !chosen.contains(&idx) {
                    chosen.push(idx);
                }
            }
            let mut z = SparsePoint::zero();
            for idx in chosen {
                let j = rng.gen_range(-k_max..=k_max);
                z.set(coords[idx], j as f64 * step);
            }
            if z.is_zero() {
                continue;
            }
            if z.p_norm(&self.params) > radius * (1.0 + 1e-12) {
                continue;
            }
            if clear_of_packing(&z) && seen.insert(z.canonical_key()) {
                survivors.push(z);
            }
        }
        survivors
    }

    /// Re-checks every structural invariant of the staged record. Cheap
    /// relative to sampling; run after every extension.
    pub fn check_invariants(&self) -> Result<()> {
        let depth = self.stages.len();
        if depth == 0 {
            return Err(Error::InvariantViolation("no stages".into()));
        }
        let first = &self.stages[0];
        if first.dense.len() != 1 || !first.dense[0].is_zero() {
            return Err(Error::InvariantViolation(
                "stage 1 dense set must be exactly the origin".into(),
            ));
        }
        if !first.packing.is_empty() {
            return Err(Error::InvariantViolation(
                "stage 1 packing must be empty".into(),
            ));
        }

        // Registry covers exactly the minted axes: one per dense point of
        // stages 1..depth-1, each mapping back to its minting point.
        let mut expected_registry_len = 0usize;
        for s in 1..depth {
            for (k, point) in self.stages[s - 1].dense.iter().enumerate() {
                expected_registry_len += 1;
                let coord = CoordId::new(s as u32, k as u32)?;
                match self.coord_registry.get(&coord) {
                    Some(owner) if owner == point => {}
                    _ => {
                        return Err(Error::InvariantViolation(format!(
                            "registry entry for {coord} missing or inconsistent"
                        )));
                    }
                }
            }
        }
        if self.coord_registry.len() != expected_registry_len {
            return Err(Error::InvariantViolation(
                "registry holds axes that were never minted".into(),
            ));
        }

        let exclusion = 1.0 + self.params.eta;
        for s in 2..=depth {
            let stage = &self.stages[s - 1];
            let prev_dense = &self.stages[s - 2].dense;
            if stage.packing.len() != prev_dense.len() {
                return Err(Error::InvariantViolation(format!(
                    "stage {s} packing size {} differs from stage {} dense size {}",
                    stage.packing.len(),
                    s - 1,
                    prev_dense.len()
                )));
            }
            for (k, q) in stage.packing.iter().enumerate() {
                let coord = CoordId::new((s - 1) as u32, k as u32)?;
                let expected = prev_dense[k].add(&SparsePoint::unit(coord));
                if *q != expected {
                    return Err(Error::InvariantViolation(format!(
                        "stage {s} packing point {k} is not its dense source lifted by {coord}"
                    )));
                }
            }
            for (k, z) in stage.dense.iter().enumerate() {
                if let Some(max_stage) = z.max_stage() {
                    if max_stage as usize >= s {
                        return Err(Error::InvariantViolation(format!(
                            "stage {s} dense point {k} uses a coordinate of stage {max_stage}"
                        )));
                    }
                }
                for coord in z.support() {
                    if !self.coord_registry.contains_key(&coord) {
                        return Err(Error::InvariantViolation(format!(
                            "stage {s} dense point {k} uses unminted coordinate {coord}"
                        )));
                    }
                }
                // Exclusion from the unit balls of all packing points of
                // stages <= s, with the quantified strictness margin.
                for (t, other) in self.stages[..s].iter().enumerate() {
                    for q in &other.packing {
                        let d = distance(z, q, &self.params);
                        if d <= exclusion {
                            return Err(Error::InvariantViolation(format!(
                                "stage {s} dense point {k} lies within {d} <= 1 + eta \
                                 of a stage {} packing point",
                                t + 1
                            )));
                        }
                    }
                }
            }
        }

        // Dense sets are pairwise disjoint across stages.
        let mut keys = BTreeSet::new();
        for (i, stage) in self.stages.iter().enumerate() {
            for z in &stage.dense {
                if !keys.insert(z.canonical_key()) {
                    return Err(Error::InvariantViolation(format!(
                        "dense point repeated across stages (stage {})",
                        i + 1
                    )));
                }
            }
        }
        Ok(())
    }

    /// Exact dispersion audit: computes `distance^p` over every unordered
    /// packing pair, classifies each pair by stage equality, and checks
    /// the corresponding support-disjointness identity. Fails with the
    /// offending pair when any `distance^p <= 2`, and with an invariant
    /// violation when an identity drifts beyond rounding.
    pub fn verify_dispersion(&self) -> Result<DispersionReport> {
        let points = self.packing_with_sources();
        if points.len() < 2 {
            return Err(Error::UndefinedDispersion);
        }
        let mut min_excess = f64::INFINITY;
        let mut worst: Option<(SparsePoint, SparsePoint, f64)> = None;
        let mut same_pairs = 0usize;
        let mut cross_pairs = 0usize;
        let mut max_same_defect = 0.0f64;
        let mut max_cross_defect = 0.0f64;

        for i in 0..points.len() {
            for j in (i + 1)..points.len() {
                let (stage_a, _, q_a, x_a) = points[i];
                let (stage_b, _, q_b, x_b) = points[j];
                debug_assert!(stage_a <= stage_b);
                let d_pow = distance_pow(q_a, q_b, &self.params);

                if stage_a == stage_b {
                    same_pairs += 1;
                    let expected = distance_pow(x_a, x_b, &self.params) + 2.0;
                    let defect = (d_pow - expected).abs();
                    if defect > max_same_defect {
                        max_same_defect = defect;
                    }
                } else {
                    cross_pairs += 1;
                    let expected = 1.0 + distance_pow(q_a, x_b, &self.params);
                    let defect = (d_pow - expected).abs();
                    if defect > max_cross_defect {
                        max_cross_defect = defect;
                    }
                }

                let excess = d_pow - 2.0;
                if excess < min_excess {
                    min_excess = excess;
                    worst = Some((q_a.clone(), q_b.clone(), d_pow));
                }
            }
        }

        // A dispersion violation outranks identity drift: both point at the
        // same broken pair, and the caller needs the pair named.
        if min_excess <= 0.0 {
            let (a, b, dist_pow) = worst.expect("at least one pair");
            return Err(Error::DispersionViolation {
                a: Box::new(a),
                b: Box::new(b),
                dist_pow,
            });
        }
        if max_same_defect > CASE_IDENTITY_TOL || max_cross_defect > CASE_IDENTITY_TOL {
            return Err(Error::InvariantViolation(format!(
                "case identity defect beyond tolerance: same-stage {max_same_defect}, \
                 cross-stage {max_cross_defect}"
            )));
        }
        Ok(DispersionReport {
            num_packing_points: points.len(),
            num_pairs: points.len() * (points.len() - 1) / 2,
            min_excess,
            num_same_stage_pairs: same_pairs,
            num_cross_stage_pairs: cross_pairs,
            max_same_stage_defect: max_same_defect,
            max_cross_stage_defect: max_cross_defect,
        })
    }

    /// Walks the covering argument for a concrete point. Starting from the
    /// deepest stage prefix and descending while the truncation error stays
    /// below `epsilon / 2`: return a packing point of stages up to `n`
    /// whose unit ball contains the truncation if one exists, otherwise
    /// lift the nearest qualifying dense point `z` of stage `n` by the
    /// unit vector on `z`'s mint axis `(n, k)`. For the deepest stage that
    /// axis is the one the next extension deterministically mints, so the
    /// lift is a packing point of the extended construction either way.
    /// The returned point is re-verified to lie within `1 + epsilon` of
    /// `x` before it is returned.
    ///
    /// Failure is an expected outcome at coarse net resolution and is
    /// reported as `InsufficientDensity`; the caller treats its rate as a
    /// measured quantity.
    pub fn covering_witness(&self, x: &SparsePoint, epsilon: f64) -> Result<CoveringWitness> {
        if epsilon.is_nan() || epsilon <= 0.0 {
            return Err(Error::Precondition(format!(
                "witness tolerance must be positive, got {epsilon}"
            )));
        }
        for coord in x.support() {
            if !self.coord_registry.contains_key(&coord) {
                return Err(Error::Precondition(format!(
                    "point uses coordinate {coord} outside the minted universe"
                )));
            }
        }
        let depth = self.stages.len();
        let threshold_pow = (1.0 + epsilon / 2.0).powf(self.params.p) - 1.0;

        for n in (1..=depth).rev() {
            let truncation = x.restrict_to_stages_below(n as u32);
            let truncation_error = distance(x, &truncation, &self.params);
            if truncation_error >= epsilon / 2.0 {
                // Smaller prefixes only truncate more.
                break;
            }

            // Inside some unit ball of the packing of stages up to n?
            let mut best: Option<(&SparsePoint, f64)> = None;
            for stage in &self.stages[..n] {
                for q in &stage.packing {
                    let d = distance(&truncation, q, &self.params);
                    if best.is_none_or(|(_, bd)| d < bd) {
                        best = Some((q, d));
                    }
                }
            }
            if let Some((q, d)) = best {
                if d <= 1.0 {
                    return self.finish_witness(x, q.clone(), epsilon, n, true);
                }
            }

            // Otherwise lift the nearest close-enough dense point of
            // stage n along its own mint axis.
            let mut best: Option<(usize, f64)> = None;
            for (k, z) in self.stages[n - 1].dense.iter().enumerate() {
                let d_pow = distance_pow(&truncation, z, &self.params);
                if d_pow < threshold_pow && best.is_none_or(|(_, bd)| d_pow < bd) {
                    best = Some((k, d_pow));
                }
            }
            if let Some((k, _)) = best {
                let coord = CoordId::new(n as u32, k as u32)?;
                let lifted = self.stages[n - 1].dense[k].add(&SparsePoint::unit(coord));
                return self.finish_witness(x, lifted, epsilon, n, false);
            }
        }
        Err(Error::InsufficientDensity(
            "no covering witness at this net density; refine net_step, raise the stage cap, \
             or build more stages"
                .into(),
        ))
    }

    fn finish_witness(
        &self,
        x: &SparsePoint,
        witness: SparsePoint,
        epsilon: f64,
        stage: usize,
        via_packing_ball: bool,
    ) -> Result<CoveringWitness> {
        let d = distance(x, &witness, &self.params);
        if d.is_nan() || d >= 1.0 + epsilon {
            return Err(Error::WitnessVerification(format!(
                "candidate witness at distance {d} >= 1 + {epsilon}"
            )));
        }
        Ok(CoveringWitness {
            point: witness,
            distance: d,
            stage,
            via_packing_ball,
        })
    }

    /// Content digest of (params, sampler, seed, stages); a pure function
    /// of (params, sampler, seed, depth) for states built through
    /// `init`/`extend`.
    pub fn digest(&self) -> String {
        let file = StateFile {
            params: self.params,
            sampler: self.sampler,
            seed: self.seed,
            stages: self.stages.clone(),
            digest: String::new(),
        };
        digest_bytes(
            serde_json::to_string(&file)
                .expect("state serialization is infallible")
                .as_bytes(),
        )
    }

    /// State-file JSON with the content digest embedded.
    pub fn to_json_string(&self) -> String {
        let file = StateFile {
            params: self.params,
            sampler: self.sampler,
            seed: self.seed,
            stages: self.stages.clone(),
            digest: self.digest(),
        };
        serde_json::to_string_pretty(&file).expect("state serialization is infallible")
    }

    /// Parses a state file. Structure is validated; mathematical
    /// invariants are not re-checked here, so `verify` can audit files
    /// that were edited after the fact.
    pub fn from_json_str(json: &str) -> Result<Self> {
        let file: StateFile = serde_json::from_str(json)?;
        file.params.validate()?;
        file.sampler.validate()?;
        Ok(PackingState::from_parts(
            file.params,
            file.sampler,
            file.seed,
            file.stages,
        ))
    }
}

#[derive(Serialize, Deserialize)]
struct StateFile {
    params: SpaceParams,
    sampler: SamplerConfig,
    seed: u64,
    stages: Vec<Stage>,
    digest: String,
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(stage: u32, index: u32) -> CoordId {
        CoordId::new(stage, index).unwrap()
    }

    fn p2() -> SpaceParams {
        SpaceParams::new(2.0).unwrap()
    }

    fn build(p: f64, depth: usize, seed: u64) -> PackingState {
        let mut state =
            PackingState::init(SpaceParams::new(p).unwrap(), SamplerConfig::default(), seed)
                .unwrap();
        for _ in 1..depth {
            state = state.extend().unwrap();
        }
        state
    }

    #[test]
    fn init_matches_stage_one_shape() {
        let state = PackingState::init(p2(), SamplerConfig::default(), 0).unwrap();
        assert_eq!(state.depth(), 1);
        assert_eq!(state.stages[0].dense.len(), 1);
        assert!(state.stages[0].dense[0].is_zero());
        assert!(state.stages[0].packing.is_empty());
        assert!(state.all_packing_points().is_empty());
    }

    #[test]
    fn first_extension_lifts_origin_to_unit_vector() {
        let state = build(2.0, 2, 0);
        assert_eq!(state.stages[1].packing.len(), 1);
        assert_eq!(state.stages[1].packing[0], SparsePoint::unit(c(1, 0)));
        assert_eq!(state.all_packing_points(), vec![SparsePoint::unit(c(1, 0))]);
    }

    #[test]
    fn stage_two_dense_values_lie_in_the_complement_interval() {
        // 1-D specialization: the only minted axis is s1i0, so every
        // dense survivor is c*e with |c - 1| > 1 and |c| <= 3.
        let state = build(2.0, 2, 7);
        assert!(!state.stages[1].dense.is_empty());
        for z in &state.stages[1].dense {
            assert_eq!(z.support_size(), 1);
            let value = z.get(c(1, 0));
            assert!(
                (-3.0..0.0).contains(&value) || (2.0..=3.0).contains(&value),
                "dense value {value} escapes [-3,0) and (2,3]"
            );
            assert!((value - 1.0).abs() > 1.0);
        }
        // Default half-unit grid on [-3,3]: exactly 8 survivors.
        assert_eq!(state.stages[1].dense.len(), 8);
    }

    #[test]
    fn packing_size_equals_previous_dense_size() {
        let state = build(2.0, 4, 3);
        for s in 1..state.depth() {
            assert_eq!(
                state.stages[s].packing.len(),
                state.stages[s - 1].dense.len()
            );
        }
    }

    #[test]
    fn lifted_point_distance_matches_hand_computation() {
        // 2.5*e is one of the default stage-2 dense survivors; its lift
        // q = 2.5*e + e' satisfies |q - e|^2 = 1.5^2 + 1 = 3.25.
        let state = build(2.0, 3, 11);
        let target = SparsePoint::from_entries([(c(1, 0), 2.5)]);
        let k = state.stages[1]
            .dense
            .iter()
            .position(|z| *z == target)
            .expect("2.5*e survives the default grid");
        let lift = &state.stages[2].packing[k];
        let d = distance(lift, &SparsePoint::unit(c(1, 0)), &p2());
        assert!((d - 3.25f64.powf(0.5)).abs() < 1e-12);
        assert!((d - 1.80278).abs() < 1e-5);
        assert!(d > 2f64.powf(0.5));
    }

    #[test]
    fn dispersion_holds_on_built_states() {
        for (p, seed) in [(1.0, 1u64), (1.5, 2), (2.0, 3), (3.0, 4)] {
            let state = build(p, 4, seed);
            let report = state.verify_dispersion().unwrap();
            assert!(report.min_excess > 0.0, "p={p} seed={seed}");
            assert_eq!(
                report.num_pairs,
                report.num_same_stage_pairs + report.num_cross_stage_pairs
            );
            assert!(report.max_same_stage_defect <= CASE_IDENTITY_TOL);
            assert!(report.max_cross_stage_defect <= CASE_IDENTITY_TOL);
        }
    }

    #[test]
    fn same_stage_pairs_satisfy_the_power_identity() {
        let state = build(2.0, 3, 5);
        let dense = &state.stages[1].dense;
        let packing = &state.stages[2].packing;
        assert!(packing.len() >= 2);
        for i in 0..packing.len() {
            for j in (i + 1)..packing.len() {
                let d_pow = distance_pow(&packing[i], &packing[j], &state.params);
                let expected = distance_pow(&dense[i], &dense[j], &state.params) + 2.0;
                assert!((d_pow - expected).abs() <= 1e-9);
            }
        }
    }

    #[test]
    fn handcrafted_illegal_state_is_detected() {
        // Placing 0.5*e into the stage-2 dense set puts its lift at
        // squared distance 0.25 + 1 = 1.25 < 2 from e.
        let params = p2();
        let e = SparsePoint::unit(c(1, 0));
        let bad_dense = SparsePoint::from_entries([(c(1, 0), 0.5)]);
        let stages = vec![
            Stage {
                dense: vec![SparsePoint::zero()],
                packing: vec![],
            },
            Stage {
                dense: vec![bad_dense.clone()],
                packing: vec![e.clone()],
            },
            Stage {
                dense: vec![],
                packing: vec![bad_dense.add(&SparsePoint::unit(c(2, 0)))],
            },
        ];
        let state = PackingState::from_parts(params, SamplerConfig::default(), 0, stages);
        match state.verify_dispersion() {
            Err(Error::DispersionViolation { dist_pow, .. }) => {
                assert!((dist_pow - 1.25).abs() < 1e-12);
            }
            other => panic!("expected dispersion violation, got {other:?}"),
        }
        assert!(state.check_invariants().is_err());
    }

    #[test]
    fn sample_complement_respects_both_filters() {
        let state = build(2.0, 3, 9);
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let sampled = state.sample_complement(&mut rng);
        assert!(!sampled.is_empty());
        let packing = state.all_packing_points();
        for z in &sampled {
            for q in &packing {
                assert!(distance(z, q, &state.params) > 1.0 + state.params.eta);
            }
            for coord in z.support() {
                assert!(state.coord_registry().contains_key(&coord));
            }
        }

        let mut rng2 = ChaCha8Rng::seed_from_u64(42);
        let again = state.sample_complement(&mut rng2);
        assert_eq!(sampled, again);
    }

    #[test]
    fn digest_depends_only_on_inputs_and_depth() {
        let a = build(2.0, 3, 7);
        let b = build(2.0, 3, 7);
        assert_eq!(a.digest(), b.digest());
        let c = build(2.0, 3, 8);
        assert_ne!(a.digest(), c.digest());
    }

    #[test]
    fn state_json_round_trips() {
        let state = build(1.5, 3, 13);
        let json = state.to_json_string();
        let back = PackingState::from_json_str(&json).unwrap();
        assert_eq!(back, state);
        assert_eq!(back.digest(), state.digest());
        back.check_invariants().unwrap();
    }

    #[test]
    fn witness_returns_nearby_packing_point() {
        // x = 0.5*e already sits inside the unit ball of e.
        let state = build(2.0, 2, 1);
        let x = SparsePoint::from_entries([(c(1, 0), 0.5)]);
        let w = state.covering_witness(&x, 0.1).unwrap();
        assert_eq!(w.point, SparsePoint::unit(c(1, 0)));
        assert!(w.via_packing_ball);
        assert_eq!(w.distance, 0.5);
    }

    #[test]
    fn witness_for_dense_point_is_its_own_lift() {
        // At depth 2 the mint axis of a stage-2 dense point is the one the
        // next extension would create; at depth 3 the lift already exists
        // as a packing point. Both walks return the same point, at
        // distance exactly 1.
        for depth in [2usize, 3] {
            let state = build(2.0, depth, 1);
            let z = state.stages[1].dense[0].clone();
            let w = state.covering_witness(&z, 0.3).unwrap();
            let expected = z.add(&SparsePoint::unit(c(2, 0)));
            assert_eq!(w.point, expected, "depth {depth}");
            assert!((w.distance - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn witness_matches_grid_oracle_for_outlying_point() {
        // x = 2.7*e with a quarter-unit net: the witness must be a lifted
        // dense point with 1 + (2.7 - c)^2 < (1 + 0.25)^2, where c runs
        // over the stage-2 dense grid.
        let sampler = SamplerConfig {
            net_step: 0.25,
            ..SamplerConfig::default()
        };
        let mut state = PackingState::init(p2(), sampler, 3).unwrap();
        state = state.extend().unwrap();
        let x = SparsePoint::from_entries([(c(1, 0), 2.7)]);
        let w = state.covering_witness(&x, 0.5).unwrap();
        assert!(!w.via_packing_ball);
        let d = distance(&x, &w.point, &state.params);
        assert!(d * d < 2.25);

        // Independent enumeration of the grid survivors.
        let qualifying: Vec<f64> = state.stages[1]
            .dense
            .iter()
            .map(|z| z.get(c(1, 0)))
            .filter(|cv| (2.7 - cv).abs().powf(2.0) < (1.25f64).powf(2.0) - 1.0)
            .collect();
        assert!(!qualifying.is_empty());
        let returned_c = w.point.get(c(1, 0));
        assert!(qualifying.contains(&returned_c));
        // The lift rides the nearest grid survivor's own mint axis.
        let nearest = qualifying
            .iter()
            .cloned()
            .min_by(|a, b| (2.7 - a).abs().partial_cmp(&(2.7 - b).abs()).unwrap())
            .unwrap();
        assert_eq!(returned_c, nearest);
    }

    #[test]
    fn witness_rejects_unminted_coordinates() {
        let state = build(2.0, 2, 1);
        let x = SparsePoint::from_entries([(c(9, 0), 1.0)]);
        assert!(matches!(
            state.covering_witness(&x, 0.5),
            Err(Error::Precondition(_))
        ));
        let y = SparsePoint::from_entries([(c(1, 0), 0.5)]);
        assert!(matches!(
            state.covering_witness(&y, 0.0),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn insufficient_density_when_truncation_radius_stifles_sampling() {
        let sampler = SamplerConfig {
            truncation_radius: 0.4,
            ..SamplerConfig::default()
        };
        let state = PackingState::init(p2(), sampler, 0).unwrap();
        match state.extend() {
            Err(Error::InsufficientDensity(_)) => {}
            other => panic!("expected insufficient density, got {other:?}"),
        }
    }
}
