//! Finite-truncation workbench for simultaneous packing and covering in
//! sequence spaces with a runtime p-norm.
//!
//! The library builds staged packings over a growing, point-indexed
//! coordinate universe, verifies their dispersion exactly, measures
//! empirical covering behavior, runs the hole-expansion lower-bound
//! procedure, and probes how greedy dispersed sets in the unit ball stall.
//! Everything is seeded and deterministic: equal configurations produce
//! byte-identical artifacts.

pub mod cli;
pub mod construction;
pub mod digest;
pub mod error;
pub mod lower_bound;
pub mod lp_space;
pub mod metrics;

pub use construction::{CoveringWitness, DispersionReport, PackingState, SamplerConfig, Stage};
pub use error::{Error, Result};
pub use lower_bound::{delta_step, expand_hole, greedy_dispersed_in_ball, HoleState};
pub use lp_space::{distance, distance_pow, CoordId, SpaceParams, SparsePoint};
pub use metrics::{
    covering_radius_empirical, gamma_estimate, min_pairwise_distance, MetricsReport,
};
