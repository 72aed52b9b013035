//! Streaming summaries of contours.
//!
//! Conditioned trees have heavy-tailed sizes: with the origin drawn from its
//! posterior, the number of species exceeds `k` with probability of order
//! `n / sqrt(k)`. These sinks read a contour as it is generated and keep only
//! what a statistic needs, so a replicate costs time proportional to its
//! size but almost no memory.

use alloc::vec::Vec;
use core::ops::ControlFlow;

use crate::contour::ContourSink;

/// Species counts, lineage depths and the most recent event of a contour,
/// read relative to the present at height `level`.
#[derive(Clone, Debug)]
pub struct ContourSummary {
    level: f64,
    index: u64,
    peaks: u64,
    at_level: u64,
    last_event: f64,
    low: f64,
    seen_tip: bool,
    depths: Vec<f64>,
}

impl ContourSummary {
    pub fn new(level: f64) -> Self {
        Self {
            level,
            index: 0,
            peaks: 0,
            at_level: 0,
            last_event: 0.0,
            low: f64::INFINITY,
            seen_tip: false,
            depths: Vec::new(),
        }
    }

    /// Number of species (local maxima).
    pub fn species(&self) -> u64 {
        self.peaks
    }

    /// Number of species alive at the present.
    pub fn extant(&self) -> u64 {
        self.at_level
    }

    pub fn extinct(&self) -> u64 {
        self.peaks - self.at_level
    }

    /// Births plus deaths, the founding birth included.
    pub fn jump_count(&self) -> u64 {
        self.peaks + self.extinct()
    }

    /// Time before present of the most recent birth or death.
    pub fn first_jump_time(&self) -> f64 {
        self.level - self.last_event
    }

    /// Divergence depths between consecutive extant species.
    pub fn depths(&self) -> &[f64] {
        &self.depths
    }

    pub fn t_mrca(&self) -> Option<f64> {
        self.depths.iter().copied().reduce(f64::max)
    }
}

impl ContourSink for ContourSummary {
    #[inline]
    fn vertex(&mut self, h: f64) -> ControlFlow<()> {
        if self.index % 2 == 1 {
            self.peaks += 1;
            if h == self.level {
                self.at_level += 1;
                if self.seen_tip {
                    self.depths.push(self.level - self.low);
                }
                self.seen_tip = true;
                self.low = f64::INFINITY;
            } else {
                self.last_event = self.last_event.max(h);
            }
        } else {
            self.low = self.low.min(h);
            self.last_event = self.last_event.max(h);
        }
        self.index += 1;
        ControlFlow::Continue(())
    }
}

/// Tracks the maximum number of coexisting species, stopping the walk once
/// it is certified to reach `cap`.
///
/// Each rise from `a` to `b` is one species alive on `(a, b]`, so the
/// population at any height is at least the number of recorded rises that
/// cover it. The maximum cover is recomputed whenever the number of rises
/// doubles, which keeps the amortised cost logarithmic per vertex.
#[derive(Clone, Debug)]
pub struct PopulationCertifier {
    cap: u64,
    rises: Vec<(f64, f64)>,
    prev: f64,
    index: u64,
    next_check: usize,
    certified: bool,
}

impl PopulationCertifier {
    pub fn new(cap: u64) -> Self {
        Self {
            cap,
            rises: Vec::new(),
            prev: 0.0,
            index: 0,
            next_check: 64,
            certified: false,
        }
    }

    /// Whether the population reached the cap among the rises seen. Once
    /// the walk has been stopped by the sink this is always true.
    pub fn certified(&self) -> bool {
        self.certified || max_cover(&self.rises) >= self.cap
    }

    /// Maximum population of the rises seen so far. Exact once the whole
    /// contour has been read; otherwise a lower bound that is at least the
    /// cap whenever [`certified`](Self::certified) holds.
    pub fn max_population(&self) -> u64 {
        max_cover(&self.rises)
    }
}

impl ContourSink for PopulationCertifier {
    fn vertex(&mut self, h: f64) -> ControlFlow<()> {
        if self.index % 2 == 1 {
            self.rises.push((self.prev, h));
            if self.rises.len() >= self.next_check {
                self.next_check *= 2;
                if max_cover(&self.rises) >= self.cap {
                    self.certified = true;
                    return ControlFlow::Break(());
                }
            }
        }
        self.prev = h;
        self.index += 1;
        ControlFlow::Continue(())
    }
}

/// Largest number of half-open intervals `(a, b]` sharing a point.
fn max_cover(intervals: &[(f64, f64)]) -> u64 {
    let mut events: Vec<(f64, i8)> = Vec::with_capacity(2 * intervals.len());
    for &(a, b) in intervals {
        events.push((a, 1));
        events.push((b, -1));
    }
    // closing ends first at equal heights: (a, x] and (x, b] never overlap
    events.sort_unstable_by(|x, y| x.0.total_cmp(&y.0).then(x.1.cmp(&y.1)));
    let (mut cur, mut best) = (0i64, 0i64);
    for (_, d) in events {
        cur += d as i64;
        best = best.max(cur);
    }
    best as u64
}

/// Forwards vertices to `inner` until `limit` have been passed, then stops
/// the walk.
///
/// Tree sizes at a fixed number of extant species have infinite mean, so
/// Monte Carlo over whole trees needs a budget; stopped replicates are
/// treated as censored.
#[derive(Debug, Clone)]
pub struct VertexBudget<S> {
    pub inner: S,
    limit: u64,
    seen: u64,
}

impl<S: ContourSink> VertexBudget<S> {
    pub fn new(inner: S, limit: u64) -> Self {
        Self {
            inner,
            limit,
            seen: 0,
        }
    }

    /// Whether the walk was cut short by the budget.
    pub fn exhausted(&self) -> bool {
        self.seen > self.limit
    }

    pub fn vertices_seen(&self) -> u64 {
        self.seen.min(self.limit)
    }
}

impl<S: ContourSink> ContourSink for VertexBudget<S> {
    #[inline]
    fn vertex(&mut self, h: f64) -> ControlFlow<()> {
        self.seen += 1;
        if self.seen > self.limit {
            return ControlFlow::Break(());
        }
        self.inner.vertex(h)
    }
}

/// Feeds every vertex to both sinks; stops when either one stops.
impl<A: ContourSink, B: ContourSink> ContourSink for (A, B) {
    #[inline]
    fn vertex(&mut self, h: f64) -> ControlFlow<()> {
        let a = self.0.vertex(h);
        let b = self.1.vertex(h);
        if a.is_break() || b.is_break() {
            ControlFlow::Break(())
        } else {
            ControlFlow::Continue(())
        }
    }
}
