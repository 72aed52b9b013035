//! Exact samplers for lineage trees and complete trees, and the forward
//! rejection oracle.
//!
//! A complete tree with `n` extant species and origin `t` has a contour
//! that upcrosses height `t` exactly `n` times. Splitting the walk at the
//! first upcrossing and at each later downcrossing of `t` gives independent
//! pieces: a rise to `t`, then `n - 1` excursions hanging below `t`, then a
//! final descent from `t` to 0. Everything above `t` lies after the present
//! and is never generated.

use alloc::vec::Vec;
use core::ops::ControlFlow;

use crate::contour::{
    contour_to_tree, excursion_below_into, reflect, rise_to_into, ContourPath, ContourSink,
};
use crate::dist::{sample_divergence_depth, sample_exponential, sample_origin_time};
use crate::error::{positive, Error, Result};
use crate::rng::RandomStream;
use crate::tree::{CompleteTree, LineagePointProcess, Species};

/// A lineage tree together with the origin time it was drawn under.
#[derive(Clone, Debug, PartialEq)]
pub struct LineageSample {
    pub origin: f64,
    pub marks: LineagePointProcess,
}

fn resolve_origin(n: usize, t: Option<f64>, stream: &mut RandomStream) -> Result<f64> {
    match t {
        Some(t) => positive("t", t),
        None => Ok(sample_origin_time(n, stream)),
    }
}

/// Draws the lineage tree on `n` extant species as `n - 1` independent
/// divergence depths; the origin is drawn from its posterior when absent.
pub fn sample_lineage_tree(n: usize, t: Option<f64>, stream: &mut RandomStream) -> Result<LineageSample> {
    if n < 2 {
        return Err(Error::TooFewExtant {
            required: 2,
            found: n,
        });
    }
    let origin = resolve_origin(n, t, stream)?;
    let mut depths = Vec::with_capacity(n - 1);
    for _ in 1..n {
        depths.push(sample_divergence_depth(origin, stream)?);
    }
    Ok(LineageSample {
        origin,
        marks: LineagePointProcess::new(depths)?,
    })
}

/// Writes the contour of a complete tree with `n` extant species and origin
/// `t` into `sink`, vertex by vertex.
pub fn sample_complete_contour_into<S: ContourSink + ?Sized>(
    n: usize,
    t: f64,
    stream: &mut RandomStream,
    sink: &mut S,
) -> Result<ControlFlow<()>> {
    if n < 1 {
        return Err(Error::TooFewExtant {
            required: 1,
            found: n,
        });
    }
    positive("t", t)?;
    Ok(assemble(n, t, stream, sink))
}

fn assemble<S: ContourSink + ?Sized>(
    n: usize,
    t: f64,
    stream: &mut RandomStream,
    sink: &mut S,
) -> ControlFlow<()> {
    sink.vertex(0.0)?;
    rise_to_into(t, stream, &mut |v| sink.vertex(v))?;
    for _ in 1..n {
        excursion_below_into(t, stream, &mut |v| sink.vertex(reflect(t, v)))?;
        sink.vertex(t)?;
    }
    rise_to_into(t, stream, &mut |v| sink.vertex(reflect(t, v)))
}

/// Draws a complete tree with `n` extant species; the origin is drawn from
/// its posterior when `t` is absent.
pub fn sample_complete_tree(n: usize, t: Option<f64>, stream: &mut RandomStream) -> Result<CompleteTree> {
    if n < 1 {
        return Err(Error::TooFewExtant {
            required: 1,
            found: n,
        });
    }
    let origin = resolve_origin(n, t, stream)?;
    let mut vertices = Vec::new();
    let _ = assemble(n, origin, stream, &mut vertices);
    contour_to_tree(&ContourPath::from_vertices(vertices)?, origin)
}

/// Simulates the unconditioned process from one founder for time `horizon`.
///
/// Returns `None` as soon as more than `max_extant` species reach the
/// horizon, which lets rejection samplers abandon hopeless attempts early.
pub fn simulate_forward(
    horizon: f64,
    stream: &mut RandomStream,
    max_extant: Option<usize>,
) -> Option<CompleteTree> {
    let mut species: Vec<Species> = Vec::new();
    // (parent, birth height), later births on top
    let mut pending: Vec<(Option<usize>, f64)> = alloc::vec![(None, 0.0)];
    let mut extant = 0usize;
    while let Some((parent, birth)) = pending.pop() {
        let idx = species.len();
        let end = birth + sample_exponential(stream);
        let alive = end >= horizon;
        let death = if alive { horizon } else { end };
        if alive {
            extant += 1;
            if max_extant.is_some_and(|cap| extant > cap) {
                return None;
            }
        }
        species.push(Species {
            parent,
            birth,
            death,
            extant: alive,
        });
        let mut b = birth + sample_exponential(stream);
        while b < death {
            pending.push((Some(idx), b));
            b += sample_exponential(stream);
        }
    }
    Some(CompleteTree::from_parts_unchecked(horizon, species))
}

/// An accepted forward simulation and the number of attempts it took.
#[derive(Clone, Debug, PartialEq)]
pub struct RejectionSample {
    pub tree: CompleteTree,
    pub attempts: u64,
}

/// Default attempt budget for [`sample_forward_rejection`].
pub const DEFAULT_REJECTION_BUDGET: u64 = 10_000_000;

/// Conditions forward simulations on exactly `n` species at time `t` by
/// rejection. `n = 0` is allowed and yields clades extinct by `t`.
pub fn sample_forward_rejection(
    n: usize,
    t: f64,
    stream: &mut RandomStream,
    max_attempts: u64,
) -> Result<RejectionSample> {
    positive("t", t)?;
    for attempt in 1..=max_attempts {
        if let Some(tree) = simulate_forward(t, stream, Some(n)) {
            if tree.extant_count() == n {
                return Ok(RejectionSample {
                    tree,
                    attempts: attempt,
                });
            }
        }
    }
    Err(Error::BudgetExhausted {
        attempts: max_attempts,
    })
}
