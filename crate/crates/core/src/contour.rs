//! Contour paths of planar trees and the excursion samplers built on them.
//!
//! The contour of a planar tree is the unit-speed walk around it, so the
//! walk's height always equals the time elapsed since the origin. A path is
//! stored as its vertex heights `[0, M_1, m_1, M_2, ..., m_{k-1}, M_k, 0]`:
//! local maxima are deaths (or the present, for extant species) and local
//! minima are the births of every species except the root. Segment lengths
//! are differences of consecutive vertices and are computed on demand.
//!
//! The random-walk samplers write vertices into a [`ContourSink`], which
//! lets callers summarise paths that are far too long to store.

use alloc::vec::Vec;
use core::ops::ControlFlow;

use crate::dist::sample_exponential;
use crate::error::{positive, Error, Result};
use crate::rng::RandomStream;
use crate::tree::{CompleteTree, Species};

/// Receiver of contour vertices, in walk order.
pub trait ContourSink {
    /// Accepts the next vertex height; `Break` stops the sampler early.
    fn vertex(&mut self, height: f64) -> ControlFlow<()>;
}

impl ContourSink for Vec<f64> {
    #[inline]
    fn vertex(&mut self, height: f64) -> ControlFlow<()> {
        self.push(height);
        ControlFlow::Continue(())
    }
}

impl<S: ContourSink + ?Sized> ContourSink for &mut S {
    #[inline]
    fn vertex(&mut self, height: f64) -> ControlFlow<()> {
        (**self).vertex(height)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ContourPath {
    vertices: Vec<f64>,
}

impl ContourPath {
    /// Validates a vertex list as an excursion with alternating extrema.
    pub fn from_vertices(vertices: Vec<f64>) -> Result<Self> {
        let bad = |index, reason| Err(Error::NotAnExcursion { index, reason });
        let len = vertices.len();
        if len < 3 || len % 2 == 0 {
            return bad(len, "an excursion has an odd number (at least 3) of vertices");
        }
        if vertices[0] != 0.0 || vertices[len - 1] != 0.0 {
            return bad(0, "an excursion starts and ends at height 0");
        }
        for i in 1..len - 1 {
            let (prev, v, next) = (vertices[i - 1], vertices[i], vertices[i + 1]);
            if !v.is_finite() {
                return bad(i, "heights must be finite");
            }
            if i % 2 == 1 {
                if !(v > prev && v > next) {
                    return bad(i, "expected a local maximum");
                }
            } else if !(v < prev && v < next && v > 0.0) {
                return bad(i, "expected a positive local minimum");
            }
        }
        Ok(Self { vertices })
    }

    /// Builds a path from alternating rise/fall lengths, starting with a rise.
    ///
    /// Summation error in the closing height is tolerated up to `1e-9` times
    /// the total length; the final fall is then adjusted to land on 0.
    pub fn from_segments(segments: &[f64]) -> Result<Self> {
        if segments.len() < 2 || segments.len() % 2 == 1 {
            return Err(Error::NotAnExcursion {
                index: segments.len(),
                reason: "segments must alternate rise and fall, ending with a fall",
            });
        }
        let mut vertices = Vec::with_capacity(segments.len() + 1);
        let mut h = 0.0;
        let mut total = 0.0;
        vertices.push(0.0);
        for (i, &len) in segments.iter().enumerate() {
            if !(len > 0.0 && len.is_finite()) {
                return Err(Error::NotAnExcursion {
                    index: i,
                    reason: "segment lengths must be positive",
                });
            }
            total += len;
            h += if i % 2 == 0 { len } else { -len };
            vertices.push(h);
        }
        let last = vertices.len() - 1;
        if h.abs() >= 1e-9 * total {
            return Err(Error::NotAnExcursion {
                index: last,
                reason: "path does not return to height 0",
            });
        }
        vertices[last] = 0.0;
        Self::from_vertices(vertices)
    }

    pub fn vertices(&self) -> &[f64] {
        &self.vertices
    }

    pub fn into_vertices(self) -> Vec<f64> {
        self.vertices
    }

    /// Alternating rise and fall lengths.
    pub fn segments(&self) -> Vec<f64> {
        self.vertices.windows(2).map(|w| (w[1] - w[0]).abs()).collect()
    }

    /// Number of local maxima, i.e. species in the encoded tree.
    pub fn peak_count(&self) -> usize {
        self.vertices.len() / 2
    }

    pub fn max_height(&self) -> f64 {
        self.vertices.iter().copied().fold(0.0, f64::max)
    }

    /// Total walk length.
    pub fn length(&self) -> f64 {
        self.vertices.windows(2).map(|w| (w[1] - w[0]).abs()).sum()
    }

    /// Walk position of the first upcrossing of level `t`.
    pub fn first_upcrossing(&self, t: f64) -> Option<f64> {
        let mut u = 0.0;
        for w in self.vertices.windows(2) {
            if w[0] < t && t <= w[1] {
                return Some(u + (t - w[0]));
            }
            u += (w[1] - w[0]).abs();
        }
        None
    }

    /// Walk position of the last downcrossing of level `t`.
    pub fn last_downcrossing(&self, t: f64) -> Option<f64> {
        let mut u = self.length();
        for w in self.vertices.windows(2).rev() {
            u -= (w[1] - w[0]).abs();
            if w[1] < t && t <= w[0] {
                return Some(u + (w[0] - t));
            }
        }
        None
    }
}

/// Counts upcrossings and downcrossings of level `t`.
///
/// A rise from `a` to `b` upcrosses `t` when `a < t <= b`, so a maximum
/// lying exactly on `t` counts; this makes the count at the present equal
/// the number of extant species.
pub fn count_crossings(path: &ContourPath, t: f64) -> (usize, usize) {
    let (mut up, mut down) = (0, 0);
    for (i, w) in path.vertices.windows(2).enumerate() {
        if i % 2 == 0 {
            if w[0] < t && t <= w[1] {
                up += 1;
            }
        } else if w[1] < t && t <= w[0] {
            down += 1;
        }
    }
    (up, down)
}

/// Encodes a tree by its depth-first contour.
pub fn tree_to_contour(tree: &CompleteTree) -> ContourPath {
    let species = tree.species();
    let mut vertices = Vec::with_capacity(2 * species.len() + 1);
    vertices.push(0.0);
    for (i, sp) in species.iter().enumerate() {
        if i > 0 {
            vertices.push(sp.birth);
        }
        vertices.push(sp.death);
    }
    vertices.push(0.0);
    ContourPath { vertices }
}

/// Decodes a contour into the tree it walks around.
///
/// Maxima equal to `origin` are extant species. Each minimum is the birth
/// of a new species, whose parent is the deepest species on the current
/// ancestral path that was born below that minimum.
pub fn contour_to_tree(path: &ContourPath, origin: f64) -> Result<CompleteTree> {
    positive("origin", origin)?;
    let v = &path.vertices;
    let count = path.peak_count();
    let mut species = Vec::with_capacity(count);
    let mut stack: Vec<usize> = Vec::new();
    for k in 0..count {
        let birth = if k == 0 { 0.0 } else { v[2 * k] };
        let death = v[2 * k + 1];
        if death > origin {
            return Err(Error::NotAnExcursion {
                index: 2 * k + 1,
                reason: "maximum lies above the present",
            });
        }
        while stack.last().is_some_and(|&p| species_birth(&species, p) >= birth) {
            stack.pop();
        }
        let parent = stack.last().copied();
        if k > 0 && parent.is_none() {
            return Err(Error::NotAnExcursion {
                index: 2 * k,
                reason: "minimum at or below the root's birth",
            });
        }
        species.push(Species {
            parent,
            birth,
            death,
            extant: death == origin,
        });
        stack.push(k);
    }
    Ok(CompleteTree::from_parts_unchecked(origin, species))
}

fn species_birth(species: &[Species], i: usize) -> f64 {
    species[i].birth
}

/// Samples an excursion of the walk with unit exponential rises and falls,
/// stopped at the first fall that would go below 0 (that fall is clamped).
pub fn sample_erw_excursion(stream: &mut RandomStream) -> ContourPath {
    let mut vertices = Vec::new();
    let _ = sample_erw_excursion_into(stream, &mut vertices);
    ContourPath { vertices }
}

/// Streaming form of [`sample_erw_excursion`].
pub fn sample_erw_excursion_into<S: ContourSink + ?Sized>(
    stream: &mut RandomStream,
    sink: &mut S,
) -> ControlFlow<()> {
    sink.vertex(0.0)?;
    let mut h = 0.0;
    loop {
        h += sample_exponential(stream);
        sink.vertex(h)?;
        let fall = sample_exponential(stream);
        if fall >= h {
            return sink.vertex(0.0);
        }
        h -= fall;
        sink.vertex(h)?;
    }
}

/// One unconditioned attempt: does the walk from 0 reach `t` before going
/// below 0? Succeeds with probability `1/(1+t)`.
pub fn erw_reaches_level(t: f64, stream: &mut RandomStream) -> bool {
    let mut h = 0.0;
    loop {
        h += sample_exponential(stream);
        if h >= t {
            return true;
        }
        let fall = sample_exponential(stream);
        if fall >= h {
            return false;
        }
        h -= fall;
    }
}

/// Kind of conditioned contour fragment.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ErwSegmentSpec {
    /// A complete unconditioned excursion.
    FreeExcursion,
    /// An excursion whose maximum stays below `t`.
    ExcursionBelow(f64),
    /// A path from 0 conditioned to reach `t` before going below 0,
    /// stopped on reaching `t`.
    RiseTo(f64),
    /// A path from `t` conditioned to reach 0 before returning above `t`.
    FallFrom(f64),
}

impl ErwSegmentSpec {
    pub fn level(&self) -> Option<f64> {
        match *self {
            ErwSegmentSpec::FreeExcursion => None,
            ErwSegmentSpec::ExcursionBelow(t)
            | ErwSegmentSpec::RiseTo(t)
            | ErwSegmentSpec::FallFrom(t) => Some(t),
        }
    }
}

/// Samples a conditioned fragment and returns its vertex heights.
///
/// * `ExcursionBelow(t)`: `[0, M_1, m_1, ..., M_k, 0]` with every `M_i < t`.
/// * `RiseTo(t)`: `[0, M_1, m_1, ..., m_{k-1}, t]`, the last rise clamped
///   at `t` and every minimum positive.
/// * `FallFrom(t)`: `[t, m_1, M_1, ..., M_{k-1}, 0]`. By the strong Markov
///   property at the last downcrossing, this is the reflection `t - x` of a
///   `RiseTo(t)` fragment, which is how it is generated. Its law coincides
///   with the time reversal of `RiseTo(t)`.
pub fn sample_conditioned_segment(spec: ErwSegmentSpec, stream: &mut RandomStream) -> Result<Vec<f64>> {
    if let Some(t) = spec.level() {
        positive("t", t)?;
    }
    let mut out = Vec::new();
    match spec {
        ErwSegmentSpec::FreeExcursion => {
            let _ = sample_erw_excursion_into(stream, &mut out);
        }
        ErwSegmentSpec::ExcursionBelow(t) => {
            out.push(0.0);
            excursion_below(t, stream, &mut out);
            out.push(0.0);
        }
        ErwSegmentSpec::RiseTo(t) => {
            out.push(0.0);
            let _ = rise_to_into(t, stream, &mut |v| {
                out.push(v);
                ControlFlow::Continue(())
            });
        }
        ErwSegmentSpec::FallFrom(t) => {
            out.push(t);
            let _ = rise_to_into(t, stream, &mut |v| {
                out.push(reflect(t, v));
                ControlFlow::Continue(())
            });
        }
    }
    Ok(out)
}

/// A conditioned fragment drawn by plain rejection, with the number of
/// unconditioned attempts it took.
#[derive(Debug, Clone, PartialEq)]
pub struct RejectionSegment {
    pub vertices: Vec<f64>,
    pub attempts: u64,
}

/// Draws a conditioned fragment by rejecting unconditioned excursions.
///
/// Every attempt is abandoned as soon as its fate is known, so failures
/// cost `O(t)` vertices on average. `FallFrom(t)` is the time reversal of a
/// rejection-sampled `RiseTo(t)`. This is the slow reference for
/// [`sample_conditioned_segment`]; the acceptance rates are `t/(1+t)` below
/// the level and `1/(1+t)` for reaching it.
pub fn sample_segment_by_rejection(
    spec: ErwSegmentSpec,
    stream: &mut RandomStream,
    max_attempts: u64,
) -> Result<RejectionSegment> {
    let t = match spec.level() {
        Some(t) => positive("t", t)?,
        None => f64::INFINITY,
    };
    let want_reach = matches!(spec, ErwSegmentSpec::RiseTo(_) | ErwSegmentSpec::FallFrom(_));
    let mut attempt = StopAtLevel {
        level: t,
        vertices: Vec::new(),
        reached: false,
    };
    for attempts in 1..=max_attempts {
        attempt.vertices.clear();
        attempt.reached = false;
        let _ = sample_erw_excursion_into(stream, &mut attempt);
        if attempt.reached == want_reach {
            let mut vertices = core::mem::take(&mut attempt.vertices);
            if let ErwSegmentSpec::FallFrom(_) = spec {
                vertices.reverse();
            }
            return Ok(RejectionSegment { vertices, attempts });
        }
    }
    Err(Error::BudgetExhausted {
        attempts: max_attempts,
    })
}

struct StopAtLevel {
    level: f64,
    vertices: Vec<f64>,
    reached: bool,
}

impl ContourSink for StopAtLevel {
    fn vertex(&mut self, h: f64) -> ControlFlow<()> {
        if h >= self.level {
            self.vertices.push(self.level);
            self.reached = true;
            return ControlFlow::Break(());
        }
        self.vertices.push(h);
        ControlFlow::Continue(())
    }
}

/// `t - x`, nudged below `t` when rounding would land on `t` itself.
///
/// Reflected minima of a fragment must stay strictly below the present, or
/// they would be read back as extant species.
#[inline]
pub(crate) fn reflect(t: f64, x: f64) -> f64 {
    let y = t - x;
    if y >= t && x > 0.0 {
        f64::from_bits(t.to_bits() - 1)
    } else {
        y
    }
}

/// Draws from the density `e^{-y} (1 + c - y) / c` on `(0, c)`.
///
/// Proposal: a unit exponential truncated to `(0, c)`, accepted with
/// probability `(1 + c - y)/(1 + c)`. The acceptance rate never drops below
/// 0.77.
fn tilted_truncated(c: f64, stream: &mut RandomStream) -> f64 {
    let scale = libm::expm1(-c);
    loop {
        let y = -libm::log1p(stream.uniform() * scale);
        if y < c && stream.uniform() * (1.0 + c) < 1.0 + c - y {
            return y;
        }
    }
}

/// Draws from `w Exp(1) + (1 - w) Gamma(2, 1)`.
#[inline]
fn exp_gamma_mixture(w: f64, stream: &mut RandomStream) -> f64 {
    let y = sample_exponential(stream);
    if stream.uniform() < w {
        y
    } else {
        y + sample_exponential(stream)
    }
}

/// Appends the interior vertices `M_1, m_1, ..., M_k` of an excursion whose
/// maximum stays below `t`.
///
/// The walk is conditioned by its h-transform. From a minimum `x`, the
/// chance of ending before reaching `t` is `(t - x)/(1 + t)` and from a
/// maximum `M < t` it is `(1 + t - M)/(1 + t)`. Tilting the exponential
/// steps by these gives a rise with density `e^{-y}(1 + c - y)/c` on
/// `(0, c)`, `c = t - x`, and a fall drawn from the mixture of `Exp(1)` and
/// `Gamma(2, 1)` with weights `(t - M)/(1 + t - M)` and `1/(1 + t - M)`,
/// the excursion ending when the fall exceeds `M`. No step is ever
/// rejected, so nothing needs buffering.
pub(crate) fn excursion_below(t: f64, stream: &mut RandomStream, out: &mut Vec<f64>) {
    let _ = excursion_below_into(t, stream, &mut |v| {
        out.push(v);
        ControlFlow::Continue(())
    });
}

pub(crate) fn excursion_below_into(
    t: f64,
    stream: &mut RandomStream,
    emit: &mut dyn FnMut(f64) -> ControlFlow<()>,
) -> ControlFlow<()> {
    let mut x = 0.0;
    loop {
        let top = x + tilted_truncated(t - x, stream);
        if top >= t {
            // rounding at the boundary; the exact law puts no mass here
            continue;
        }
        emit(top)?;
        let fall = exp_gamma_mixture((t - top) / (1.0 + t - top), stream);
        if fall >= top {
            return ControlFlow::Continue(());
        }
        x = top - fall;
        emit(x)?;
    }
}

/// Emits the vertices after the starting 0 of a walk conditioned to reach
/// `t` before going below 0, ending with `t` itself.
///
/// The walk is conditioned by its h-transform: from a minimum `x` the
/// chance of reaching `t` first is `(1 + x)/(1 + t)`, and from a maximum
/// `M < t` it is `M/(1 + t)`. The tilted rise is `Exp(1)` with probability
/// `x/(1 + x)` and `Gamma(2, 1)` otherwise, stopping at `t` if it gets
/// there; the tilted fall has density `e^{-y}(1 + M - y)/M` on `(0, M)`.
pub(crate) fn rise_to_into(
    t: f64,
    stream: &mut RandomStream,
    emit: &mut dyn FnMut(f64) -> ControlFlow<()>,
) -> ControlFlow<()> {
    let mut x = 0.0;
    loop {
        let top = x + exp_gamma_mixture(x / (1.0 + x), stream);
        if top >= t {
            return emit(t);
        }
        emit(top)?;
        let fall = tilted_truncated(top, stream);
        if fall >= top {
            // rounding at the boundary; the exact law puts no mass here
            x = top;
            continue;
        }
        x = top - fall;
        emit(x)?;
    }
}
