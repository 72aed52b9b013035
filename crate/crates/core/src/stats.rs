//! Summary statistics of complete trees.

use crate::dist::{sample_divergence_depth, sample_poisson};
use crate::error::{positive, Error, Result};
use crate::rng::RandomStream;
use crate::tree::{population_trajectory, CompleteTree};

/// Statistics of one sampled clade. Times are in model units.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ReplicateReport {
    /// Number of extant species.
    pub n: usize,
    /// Time of origin.
    pub t_or: f64,
    /// Time of the most recent common ancestor of the extant species.
    pub t_mrca: Option<f64>,
    /// Species alive just after the most recent common ancestor's
    /// divergence, both daughter lineages included.
    pub n_mrca: Option<u64>,
    /// Extinct species.
    pub n_ext: u64,
    /// Extinct species with at least one extant descendant.
    pub n_anc: u64,
    /// Largest number of coexisting species.
    pub max_pop: u64,
    /// Births plus deaths, the founding birth included.
    pub jumps: u64,
}

/// Computes every statistic of a complete tree.
///
/// The MRCA count is read just after the divergence, so both daughter
/// lineages of the MRCA contribute; with this reading the count is the sum
/// of two independent geometric variables given the origin and MRCA times.
pub fn compute_report(tree: &CompleteTree) -> Result<ReplicateReport> {
    let n = tree.extant_count();
    if n == 0 {
        return Err(Error::TooFewExtant {
            required: 1,
            found: 0,
        });
    }
    let species = tree.species();
    // deepest birth between consecutive extant species, as a height
    let mut divergence: Option<f64> = None;
    let mut low = f64::INFINITY;
    let mut seen_tip = false;
    for sp in species {
        low = low.min(sp.birth);
        if sp.extant {
            if seen_tip {
                divergence = Some(divergence.map_or(low, |d: f64| d.min(low)));
            }
            seen_tip = true;
            low = f64::INFINITY;
        }
    }
    let n_mrca = divergence.map(|h| {
        species
            .iter()
            .filter(|sp| sp.birth <= h && sp.death > h)
            .count() as u64
    });
    let ancestral = tree.has_extant_descendant();
    let n_anc = species
        .iter()
        .zip(&ancestral)
        .filter(|(sp, &anc)| anc && !sp.extant)
        .count() as u64;
    let trajectory = population_trajectory(tree);
    let n_ext = tree.extinct_count() as u64;
    let jumps = trajectory.jump_count() as u64;
    assert_eq!(2 * n_ext + n as u64, jumps, "extinct count identity");
    Ok(ReplicateReport {
        n,
        t_or: tree.origin(),
        t_mrca: divergence.map(|h| tree.origin() - h),
        n_mrca,
        n_ext,
        n_anc,
        max_pop: trajectory.max_count(),
        jumps,
    })
}

/// Mean number of ancestor levels along a lineage of depth `x`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LevelIntensity {
    /// Mean `x`: a rate-1 Poisson process of ancestor changes along the
    /// lineage.
    Unit,
    /// Mean `x - ln(1 + x)`. Along the lineage of an extant species at
    /// distance `u` below its top, the ancestor changes at rate
    /// `u / (1 + u)`; this is the law observed in simulated trees.
    Conditioned,
}

impl LevelIntensity {
    pub fn mean(self, x: f64) -> f64 {
        match self {
            LevelIntensity::Unit => x,
            LevelIntensity::Conditioned => x - libm::log1p(x),
        }
    }
}

/// Draws the number of extinct ancestors of the extant species directly as
/// `X_1 + ... + X_n`, where `X_1` counts the ancestors of the first extant
/// species back to the origin and `X_i` those of species `i` back to its
/// divergence from species `i - 1`, each Poisson given its depth.
pub fn ancestor_count_representation(
    n: usize,
    t: f64,
    intensity: LevelIntensity,
    stream: &mut RandomStream,
) -> Result<u64> {
    if n < 1 {
        return Err(Error::TooFewExtant {
            required: 1,
            found: 0,
        });
    }
    positive("t", t)?;
    let mut total = sample_poisson(intensity.mean(t), stream);
    for _ in 1..n {
        let h = sample_divergence_depth(t, stream)?;
        total += sample_poisson(intensity.mean(h), stream);
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tree::Species;

    fn sp(parent: Option<usize>, birth: f64, death: f64, extant: bool) -> Species {
        Species {
            parent,
            birth,
            death,
            extant,
        }
    }

    #[test]
    fn two_extant_species_with_root_alive() {
        let tree = CompleteTree::new(
            2.0,
            alloc::vec![sp(None, 0.0, 2.0, true), sp(Some(0), 0.5, 2.0, true)],
        )
        .unwrap();
        let r = compute_report(&tree).unwrap();
        assert_eq!(r.n_ext, 0);
        assert_eq!(r.n_anc, 0);
        assert_eq!(r.t_mrca, Some(1.5));
        assert_eq!(r.n_mrca, Some(2));
        assert_eq!(r.jumps, 2);
    }

    #[test]
    fn extinct_root_is_an_ancestor() {
        let tree = CompleteTree::new(
            2.0,
            alloc::vec![
                sp(None, 0.0, 1.0, false),
                sp(Some(0), 0.8, 2.0, true),
                sp(Some(0), 0.5, 2.0, true),
                sp(Some(0), 0.2, 0.4, false),
            ],
        )
        .unwrap();
        let r = compute_report(&tree).unwrap();
        assert_eq!(r.n_ext, 2);
        assert_eq!(r.n_anc, 1);
        assert_eq!(r.jumps, 6);
        assert_eq!(r.max_pop, 3);
        // just after the divergence at height 0.5: root, species 2, and
        // species 3 is already dead
        assert_eq!(r.n_mrca, Some(2));
    }

    #[test]
    fn level_intensity_means() {
        assert_eq!(LevelIntensity::Unit.mean(2.0), 2.0);
        assert!((LevelIntensity::Conditioned.mean(1.0) - (1.0 - 2f64.ln())).abs() < 1e-15);
    }
}
