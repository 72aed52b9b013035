//! Exact simulation of critical birth-death clades conditioned on the
//! number of extant species.
//!
//! Species live for a unit exponential time and give birth at rate 1. A
//! clade founded by one species and observed with exactly `n` extant
//! species has a time of origin with density `n t^{n-1} / (1+t)^{n+1}`;
//! given the origin `t`, the divergence depths between neighbouring extant
//! species are i.i.d. with density `(1 + 1/t)(1 + s)^{-2}` on `(0, t)`.
//!
//! The crate provides
//!
//! * [`rng`]: reproducible `(seed, stream id)` uniform streams,
//! * [`dist`]: inverse-CDF samplers for the model's elementary laws,
//! * [`tree`]: complete trees, lineage point processes and trajectories,
//! * [`contour`]: the tree/contour bijection and excursion samplers,
//! * [`sampler`]: exact samplers for lineage and complete trees,
//! * [`local`]: windows onto the local limit objects,
//! * [`stats`]: per-tree summary statistics,
//! * [`summary`]: streaming summaries for trees too large to store,
//! * [`laws`]: reference distributions and their limits,
//! * [`gof`]: Kolmogorov-Smirnov and chi-square tests.
//!
//! The crate is `no_std` (with `alloc`) when the default `std` feature is
//! disabled.

#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod contour;
pub mod dist;
pub mod error;
pub mod gof;
pub mod laws;
pub mod local;
pub mod quad;
pub mod rng;
pub mod sampler;
pub mod stats;
pub mod summary;
pub mod tree;

pub use contour::{
    contour_to_tree, count_crossings, sample_conditioned_segment, sample_erw_excursion,
    tree_to_contour, ContourPath, ContourSink, ErwSegmentSpec,
};
pub use dist::ModelParams;
pub use error::{Error, Result};
pub use laws::{LawKind, ReferenceLaw};
pub use local::{Centering, LocalTree, LocalWindowConfig};
pub use rng::RandomStream;
pub use sampler::{
    sample_complete_tree, sample_forward_rejection, sample_lineage_tree, LineageSample,
};
pub use stats::{compute_report, ReplicateReport};
pub use tree::{
    extract_lineage_tree, lineage_count_at, population_trajectory, CompleteTree,
    LineagePointProcess, PopulationTrajectory, Species,
};
