use cladesim_core::gof::ks_statistic;
use cladesim_core::local::{sample_local_complete_tree, sample_local_lineage_window, Role};
use cladesim_core::{Centering, LocalWindowConfig, RandomStream, ReferenceLaw};
use proptest::prelude::*;

#[test]
fn config_rejects_bad_parameters() {
    assert!(LocalWindowConfig::new(0, 1.0, 10.0).is_err());
    assert!(LocalWindowConfig::new(3, 0.0, 10.0).is_err());
    assert!(LocalWindowConfig::new(3, 1.0, -1.0).is_err());
    assert!(LocalWindowConfig::new(3, 1.0, 10.0).is_ok());
}

#[test]
fn window_depths_follow_the_excursion_height_law() {
    let cfg = LocalWindowConfig::new(5, 1.0, 1e9).unwrap();
    let mut s = RandomStream::new(1, 0);
    let mut xs = Vec::new();
    for _ in 0..4000 {
        let w = sample_local_lineage_window(&cfg, &mut s);
        assert_eq!(w.depths.len(), 10);
        xs.extend(w.depths);
    }
    assert!(ks_statistic(&xs, |x| ReferenceLaw::ExcursionHeight.cdf(x)).unwrap() < 0.015);
}

#[test]
fn cutoff_clamps_and_counts() {
    let cfg = LocalWindowConfig::new(50, 1.0, 1.0).unwrap();
    let w = sample_local_lineage_window(&cfg, &mut RandomStream::new(2, 0));
    assert!(w.depths.iter().all(|&d| d <= 1.0));
    assert_eq!(w.truncated, w.depths.iter().filter(|&&d| d == 1.0).count());
    assert!(w.truncated > 20 && w.truncated < 80);
}

#[test]
fn spine_gaps_are_unit_exponential() {
    let cfg = LocalWindowConfig::new(1, 1.0, 30.0).unwrap();
    let mut s = RandomStream::new(3, 0);
    let mut gaps = Vec::new();
    for _ in 0..2000 {
        let tree = sample_local_complete_tree(&cfg, Centering::ExtantSpecies, &mut s);
        let mut prev = tree.distinguished().birth;
        for a in tree.spine() {
            gaps.push(prev - a.birth);
            prev = a.birth;
        }
    }
    let law = ReferenceLaw::Exponential { rate: 1.0 };
    assert!(ks_statistic(&gaps, |x| law.cdf(x)).unwrap() < 0.01);
}

#[test]
fn typical_species_lifetime_is_exponential() {
    let cfg = LocalWindowConfig::new(1, 8.0, 10.0).unwrap();
    let mut s = RandomStream::new(4, 0);
    let lifetimes: Vec<f64> = (0..20_000)
        .map(|_| {
            let t = sample_local_complete_tree(&cfg, Centering::Species, &mut s);
            t.distinguished().death - t.distinguished().birth
        })
        .collect();
    let law = ReferenceLaw::Exponential { rate: 1.0 };
    assert!(ks_statistic(&lifetimes, |x| law.cdf(x)).unwrap() < 0.015);
}

fn check_structure(tree: &cladesim_core::LocalTree) -> Result<(), TestCaseError> {
    let (lo, hi) = tree.window;
    prop_assert_eq!(tree.distinguished().role, Role::Distinguished);
    for (k, a) in tree.spine().iter().enumerate() {
        prop_assert_eq!(a.role, Role::Ancestor(k as u32 + 1));
    }
    for (i, sp) in tree.species.iter().enumerate() {
        prop_assert!(sp.death <= hi);
        if sp.censored {
            prop_assert_eq!(sp.death, hi);
        }
        match sp.role {
            Role::Distinguished | Role::Ancestor(_) => {
                if i < tree.ancestors {
                    prop_assert_eq!(sp.parent, Some(i + 1));
                }
            }
            Role::Other => {
                let p = sp.parent.expect("side species have parents");
                prop_assert!(p < i);
                let parent = &tree.species[p];
                prop_assert!(sp.birth >= parent.birth.max(lo) && sp.birth < parent.death);
                prop_assert!(sp.death > sp.birth);
            }
        }
    }
    Ok(())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn local_trees_are_well_formed(seed in any::<u64>(), sigma in 0.1f64..3.0, extant in any::<bool>()) {
        let cfg = LocalWindowConfig::new(1, sigma, 10.0).unwrap();
        let centering = if extant { Centering::ExtantSpecies } else { Centering::Species };
        let tree = sample_local_complete_tree(&cfg, centering, &mut RandomStream::new(seed, 0));
        check_structure(&tree)?;
        if extant {
            prop_assert!(tree.distinguished().censored);
            prop_assert_eq!(tree.window, (-sigma, 0.0));
        } else {
            prop_assert_eq!(tree.window, (-sigma, sigma));
        }
        let reach = tree.reaches_window_end();
        prop_assert!(reach[0] || !tree.distinguished().censored);
        for (i, sp) in tree.species.iter().enumerate() {
            if let (Role::Other, Some(p)) = (sp.role, sp.parent) {
                prop_assert!(!reach[i] || reach[p]);
            }
        }
    }
}
