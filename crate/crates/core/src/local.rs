//! Windows onto the local limits of large trees.
//!
//! Seen from a typical extant species, the lineage tree converges to an
//! infinite sequence of marks `(i + 1/2, η_i)`, `i ∈ Z`, with i.i.d. depths
//! of density `(1 + s)^{-2}`. Seen from a typical species, the complete tree
//! converges to a tree with an infinite ancestral spine: each ancestor's age
//! at the birth of the next spine member and its remaining lifetime after it
//! are independent unit exponentials, every spine member has further
//! children at rate 1 during its life, and every such child founds an
//! independent critical clade. Both objects are infinite; these samplers
//! return finite windows.
//!
//! Local trees use forward time with the reference instant at 0. Spine
//! ancestors are generated until one is born before `-cutoff`, whatever the
//! window; side clades are only generated inside the window.

use alloc::vec::Vec;

use crate::dist::{excursion_height_quantile, sample_exponential};
use crate::error::{positive, Error, Result};
use crate::rng::RandomStream;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LocalWindowConfig {
    lineage_window: usize,
    sigma: f64,
    cutoff: f64,
}

impl LocalWindowConfig {
    pub fn new(lineage_window: usize, sigma: f64, cutoff: f64) -> Result<Self> {
        if lineage_window == 0 {
            return Err(Error::InvalidParameter {
                name: "lineage_window",
                value: 0.0,
            });
        }
        positive("sigma", sigma)?;
        positive("cutoff", cutoff)?;
        if cutoff < sigma {
            return Err(Error::InvalidParameter {
                name: "cutoff",
                value: cutoff,
            });
        }
        Ok(Self {
            lineage_window,
            sigma,
            cutoff,
        })
    }

    pub fn lineage_window(&self) -> usize {
        self.lineage_window
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn cutoff(&self) -> f64 {
        self.cutoff
    }
}

/// Marks `η_{-W}, ..., η_{W-1}` around lineage 0; entry `j` is the mark at
/// position `j - W + 1/2`. Depths beyond the cutoff are clamped to it.
#[derive(Clone, Debug, PartialEq)]
pub struct LocalLineageWindow {
    pub depths: Vec<f64>,
    /// Number of depths clamped at the cutoff.
    pub truncated: usize,
}

pub fn sample_local_lineage_window(config: &LocalWindowConfig, stream: &mut RandomStream) -> LocalLineageWindow {
    let mut truncated = 0;
    let depths = (0..2 * config.lineage_window)
        .map(|_| {
            let eta = excursion_height_quantile(stream.uniform());
            if eta > config.cutoff {
                truncated += 1;
                config.cutoff
            } else {
                eta
            }
        })
        .collect();
    LocalLineageWindow { depths, truncated }
}

/// Which species the local tree is centred on.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Centering {
    /// A typical species, born at time 0; window `[-σ, σ]`.
    Species,
    /// A typical extant species, the present at time 0; window `[-σ, 0]`.
    ExtantSpecies,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Role {
    Distinguished,
    /// Spine ancestor, 1 for the parent.
    Ancestor(u32),
    Other,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LocalSpecies {
    pub parent: Option<usize>,
    pub birth: f64,
    /// Death time, or the window's end if `censored`.
    pub death: f64,
    /// Still alive at the end of the window (extant, for the extant-centred
    /// variant).
    pub censored: bool,
    pub role: Role,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LocalTree {
    /// Distinguished species first, then the spine ancestors in order, then
    /// the side clades (parents before children).
    pub species: Vec<LocalSpecies>,
    pub window: (f64, f64),
    /// Number of spine ancestors generated before the cutoff stopped it.
    pub ancestors: usize,
}

impl LocalTree {
    pub fn distinguished(&self) -> &LocalSpecies {
        &self.species[0]
    }

    /// Spine ancestors, parent first.
    pub fn spine(&self) -> &[LocalSpecies] {
        &self.species[1..=self.ancestors]
    }

    /// Marks species that are censored or have a censored descendant.
    pub fn reaches_window_end(&self) -> Vec<bool> {
        let mut flag: Vec<bool> = self.species.iter().map(|s| s.censored).collect();
        for i in (1..self.species.len()).rev() {
            if flag[i] {
                if let Some(p) = self.species[i].parent {
                    flag[p] = true;
                }
            }
        }
        flag
    }
}

/// Hard cap on spine length; the cutoff is reached long before it.
const MAX_SPINE: usize = 1_000_000;

pub fn sample_local_complete_tree(
    config: &LocalWindowConfig,
    centering: Centering,
    stream: &mut RandomStream,
) -> LocalTree {
    let sigma = config.sigma;
    let (lo, hi) = match centering {
        Centering::Species => (-sigma, sigma),
        Centering::ExtantSpecies => (-sigma, 0.0),
    };
    let mut species = Vec::new();
    let (birth, death, censored) = match centering {
        Centering::Species => {
            let d = sample_exponential(stream);
            if d >= hi {
                (0.0, hi, true)
            } else {
                (0.0, d, false)
            }
        }
        Centering::ExtantSpecies => (-sample_exponential(stream), 0.0, true),
    };
    species.push(LocalSpecies {
        parent: None,
        birth,
        death,
        censored,
        role: Role::Distinguished,
    });
    let mut child_birth = birth;
    let mut k = 0u32;
    while child_birth >= -config.cutoff && (k as usize) < MAX_SPINE {
        k += 1;
        let b = child_birth - sample_exponential(stream);
        let end = child_birth + sample_exponential(stream);
        let idx = species.len();
        species[idx - 1].parent = Some(idx);
        species.push(LocalSpecies {
            parent: None,
            birth: b,
            death: end.min(hi),
            censored: end >= hi,
            role: Role::Ancestor(k),
        });
        child_birth = b;
    }
    let ancestors = k as usize;
    for i in 0..=ancestors {
        let sp = species[i];
        let start = sp.birth.max(lo);
        let mut t = start + sample_exponential(stream);
        while t < sp.death {
            grow_clade(i, t, hi, stream, &mut species);
            t += sample_exponential(stream);
        }
    }
    LocalTree {
        species,
        window: (lo, hi),
        ancestors,
    }
}

/// Appends an unconditioned clade founded at time `birth` by a child of
/// `parent`, run until `horizon`.
fn grow_clade(parent: usize, birth: f64, horizon: f64, stream: &mut RandomStream, out: &mut Vec<LocalSpecies>) {
    let mut pending = alloc::vec![(parent, birth)];
    while let Some((p, b)) = pending.pop() {
        let idx = out.len();
        let end = b + sample_exponential(stream);
        let censored = end >= horizon;
        let death = if censored { horizon } else { end };
        out.push(LocalSpecies {
            parent: Some(p),
            birth: b,
            death,
            censored,
            role: Role::Other,
        });
        let mut t = b + sample_exponential(stream);
        while t < death {
            pending.push((idx, t));
            t += sample_exponential(stream);
        }
    }
}
