//! Complete trees, lineage point processes and population trajectories.
//!
//! A [`CompleteTree`] stores species in depth-first order: each species is
//! followed by the subtrees of its children, latest-born child first. This
//! is the order in which the contour walk meets them, so the tree and its
//! contour share indices.
//!
//! Internally every time is a *height*: the time elapsed since the origin,
//! so the root is born at height 0 and the present sits at height
//! `origin`. Heights are what the contour encodes, and keeping them as the
//! stored coordinate makes the tree/contour round trip exact to the bit.
//! Times before present are available through accessors.

use alloc::vec::Vec;

use crate::error::{Error, Result};

/// One species of a complete tree. Times are heights above the origin.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Species {
    pub parent: Option<usize>,
    pub birth: f64,
    /// Height of the death, or the origin time for extant species.
    pub death: f64,
    pub extant: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CompleteTree {
    species: Vec<Species>,
    origin: f64,
}

impl CompleteTree {
    /// Builds and validates a tree from depth-first ordered species.
    pub fn new(origin: f64, species: Vec<Species>) -> Result<Self> {
        let tree = Self { species, origin };
        tree.validate()?;
        Ok(tree)
    }

    pub(crate) fn from_parts_unchecked(origin: f64, species: Vec<Species>) -> Self {
        Self { species, origin }
    }

    fn validate(&self) -> Result<()> {
        let bad = |node, reason| Err(Error::InvalidTree { node, reason });
        if !(self.origin > 0.0 && self.origin.is_finite()) {
            return bad(0, "origin time must be positive");
        }
        let Some(root) = self.species.first() else {
            return bad(0, "tree has no species");
        };
        if root.parent.is_some() || root.birth != 0.0 {
            return bad(0, "root must be parentless and born at the origin");
        }
        // (species, birth of its most recently listed child)
        let mut path: Vec<(usize, f64)> = Vec::new();
        for (i, sp) in self.species.iter().enumerate() {
            if sp.extant {
                if sp.death != self.origin {
                    return bad(i, "extant species must live until the present");
                }
            } else if !(sp.death > sp.birth && sp.death < self.origin) {
                return bad(i, "death must follow birth and precede the present");
            }
            if i > 0 {
                let Some(parent) = sp.parent else {
                    return bad(i, "only the root may lack a parent");
                };
                while path.last().is_some_and(|&(p, _)| p != parent) {
                    path.pop();
                }
                let Some(top) = path.last_mut() else {
                    return bad(i, "species is not in depth-first order");
                };
                let p = &self.species[parent];
                if !(sp.birth > p.birth && sp.birth < p.death) {
                    return bad(i, "birth lies outside the parent's lifetime");
                }
                if sp.birth >= top.1 {
                    return bad(i, "siblings must be listed latest-born first");
                }
                top.1 = sp.birth;
            }
            path.push((i, f64::INFINITY));
        }
        Ok(())
    }

    pub fn species(&self) -> &[Species] {
        &self.species
    }

    pub fn len(&self) -> usize {
        self.species.len()
    }

    pub fn is_empty(&self) -> bool {
        self.species.is_empty()
    }

    /// Time of origin, which is also the height of the present.
    pub fn origin(&self) -> f64 {
        self.origin
    }

    /// Birth of species `i`, measured backwards from the present.
    pub fn birth_time(&self, i: usize) -> f64 {
        self.origin - self.species[i].birth
    }

    /// Death of species `i` measured backwards from the present; 0 if extant.
    pub fn death_time(&self, i: usize) -> f64 {
        let sp = &self.species[i];
        if sp.extant {
            0.0
        } else {
            self.origin - sp.death
        }
    }

    pub fn extant_count(&self) -> usize {
        self.species.iter().filter(|s| s.extant).count()
    }

    pub fn extinct_count(&self) -> usize {
        self.len() - self.extant_count()
    }

    /// Children of species `i`, latest-born first.
    pub fn children(&self, i: usize) -> Vec<usize> {
        self.species
            .iter()
            .enumerate()
            .skip(i + 1)
            .filter(|(_, s)| s.parent == Some(i))
            .map(|(j, _)| j)
            .collect()
    }

    /// Rank of species `i` among its siblings by birth, 0 for the earliest.
    /// In the planar drawing later-born siblings sit further right.
    pub fn child_rank(&self, i: usize) -> usize {
        match self.species[i].parent {
            None => 0,
            Some(p) => {
                let b = self.species[i].birth;
                self.children(p)
                    .into_iter()
                    .filter(|&c| self.species[c].birth < b)
                    .count()
            }
        }
    }

    /// Marks every species that is extant or has an extant descendant.
    pub fn has_extant_descendant(&self) -> Vec<bool> {
        let mut flag: Vec<bool> = self.species.iter().map(|s| s.extant).collect();
        for i in (1..self.len()).rev() {
            if flag[i] {
                let p = self.species[i].parent.expect("validated");
                flag[p] = true;
            }
        }
        flag
    }
}

/// Marks `(i + 1/2, h_i)` of a lineage tree: the divergence depth between
/// extant species `i` and `i + 1` in planar order.
#[derive(Clone, Debug, PartialEq)]
pub struct LineagePointProcess {
    depths: Vec<f64>,
}

impl LineagePointProcess {
    pub fn new(depths: Vec<f64>) -> Result<Self> {
        for (i, &h) in depths.iter().enumerate() {
            if !(h > 0.0 && h.is_finite()) {
                return Err(Error::InvalidTree {
                    node: i,
                    reason: "divergence depths must be positive",
                });
            }
        }
        Ok(Self { depths })
    }

    /// Number of extant species.
    pub fn n(&self) -> usize {
        self.depths.len() + 1
    }

    pub fn depths(&self) -> &[f64] {
        &self.depths
    }

    pub fn into_depths(self) -> Vec<f64> {
        self.depths
    }

    /// Time of the most recent common ancestor, `None` for a single species.
    pub fn t_mrca(&self) -> Option<f64> {
        self.depths.iter().copied().reduce(f64::max)
    }
}

/// Number of distinct ancestral lineages at time `s` before present.
pub fn lineage_count_at(marks: &LineagePointProcess, s: f64) -> usize {
    1 + marks.depths.iter().filter(|&&h| h > s).count()
}

/// Reduces a complete tree to the lineage tree of its extant species.
///
/// Between two consecutive extant tips in depth-first order the contour
/// dips to the lowest birth among the species listed after the first tip up
/// to and including the second; that birth is their divergence.
pub fn extract_lineage_tree(tree: &CompleteTree) -> Result<LineagePointProcess> {
    let n = tree.extant_count();
    if n < 2 {
        return Err(Error::TooFewExtant {
            required: 2,
            found: n,
        });
    }
    let mut depths = Vec::with_capacity(n - 1);
    let mut seen_tip = false;
    let mut low = f64::INFINITY;
    for sp in tree.species() {
        low = low.min(sp.birth);
        if sp.extant {
            if seen_tip {
                depths.push(tree.origin() - low);
            }
            seen_tip = true;
            low = f64::INFINITY;
        }
    }
    Ok(LineagePointProcess { depths })
}

/// Species count as a step function of time before present.
#[derive(Clone, Debug, PartialEq)]
pub struct PopulationTrajectory {
    jump_times: Vec<f64>,
    counts: Vec<u64>,
}

impl PopulationTrajectory {
    /// Jump instants, decreasing from the origin towards the present.
    pub fn jump_times(&self) -> &[f64] {
        &self.jump_times
    }

    /// Count just after each jump (reading towards the present).
    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    /// Total number of ±1 jumps, the founding birth included.
    pub fn jump_count(&self) -> usize {
        self.jump_times.len()
    }

    pub fn terminal_count(&self) -> u64 {
        self.counts.last().copied().unwrap_or(0)
    }

    pub fn max_count(&self) -> u64 {
        self.counts.iter().copied().max().unwrap_or(0)
    }

    /// Species alive at time `s` before present (right after any jump at `s`).
    pub fn count_at(&self, s: f64) -> u64 {
        match self.jump_times.iter().rposition(|&j| j >= s) {
            Some(k) => self.counts[k],
            None => 0,
        }
    }
}

/// Merges births and deaths into the population step function.
///
/// Simultaneous events are ordered by species index, births before deaths.
pub fn population_trajectory(tree: &CompleteTree) -> PopulationTrajectory {
    let mut events: Vec<(f64, u8, usize)> = Vec::with_capacity(2 * tree.len());
    for (i, sp) in tree.species().iter().enumerate() {
        events.push((sp.birth, 0, i));
        if !sp.extant {
            events.push((sp.death, 1, i));
        }
    }
    events.sort_unstable_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
    let mut count: u64 = 0;
    let mut jump_times = Vec::with_capacity(events.len());
    let mut counts = Vec::with_capacity(events.len());
    for (h, kind, _) in events {
        if kind == 0 {
            count += 1;
        } else {
            count -= 1;
        }
        jump_times.push(tree.origin() - h);
        counts.push(count);
    }
    PopulationTrajectory { jump_times, counts }
}
