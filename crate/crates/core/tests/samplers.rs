use cladesim_core::contour::tree_to_contour;
use cladesim_core::dist::{divergence_depth_cdf, divergence_depth_survival, origin_time_cdf};
use cladesim_core::gof::{chi_square_homogeneity, chi_square_test, ks_bounds, ks_statistic, Bracket};
use cladesim_core::sampler::*;
use cladesim_core::stats::compute_report;
use cladesim_core::summary::{ContourSummary, PopulationCertifier, VertexBudget};
use cladesim_core::tree::{extract_lineage_tree, lineage_count_at, population_trajectory};
use cladesim_core::{Error, RandomStream};
use proptest::prelude::*;

fn binomial_pmf(m: u64, p: f64, k: u64) -> f64 {
    let mut c = 1.0;
    for i in 0..k {
        c *= (m - i) as f64 / (i + 1) as f64;
    }
    c * p.powi(k as i32) * (1.0 - p).powi((m - k) as i32)
}

#[test]
fn lineage_count_is_one_plus_binomial() {
    let (n, t, s) = (6usize, 6.0, 1.0);
    let p = divergence_depth_survival(t, s);
    assert!((p - (t - 1.0) / (2.0 * t)).abs() < 1e-15);
    let mut stream = RandomStream::new(31, 0);
    let mut observed = vec![0u64; n];
    for _ in 0..10_000 {
        let sample = sample_lineage_tree(n, Some(t), &mut stream).unwrap();
        observed[lineage_count_at(&sample.marks, s) - 1] += 1;
    }
    let expected: Vec<f64> = (0..n as u64).map(|k| 1e4 * binomial_pmf(n as u64 - 1, p, k)).collect();
    let out = chi_square_test(&observed, &expected, 1e-3).unwrap();
    assert!(out.passed, "{out:?}");
}

#[test]
fn lineage_sampler_draws_the_origin_from_its_posterior() {
    let mut s = RandomStream::new(32, 0);
    let origins: Vec<f64> = (0..20_000)
        .map(|_| sample_lineage_tree(4, None, &mut s).unwrap().origin)
        .collect();
    assert!(ks_statistic(&origins, |t| origin_time_cdf(4, t)).unwrap() < 0.015);
}

#[test]
fn forward_rejection_acceptance_rates() {
    let mut s = RandomStream::new(33, 0);
    let mut hits = [0u32; 2];
    let attempts = 100_000;
    for _ in 0..attempts {
        match simulate_forward(1.0, &mut s, Some(2)).map(|t| t.extant_count()) {
            Some(0) => hits[0] += 1,
            Some(2) => hits[1] += 1,
            _ => {}
        }
    }
    let p0 = hits[0] as f64 / attempts as f64;
    let p2 = hits[1] as f64 / attempts as f64;
    assert!((p2 - 0.125).abs() < 0.003, "P(N=2) {p2}");
    assert!((p0 - 0.5).abs() < 0.005, "P(N=0) {p0}");

    let mut total = 0;
    for _ in 0..2000 {
        let r = sample_forward_rejection(0, 1.0, &mut s, DEFAULT_REJECTION_BUDGET).unwrap();
        assert_eq!(r.tree.extant_count(), 0);
        total += r.attempts;
    }
    let rate = 2000.0 / total as f64;
    assert!((rate - 0.5).abs() < 0.03, "rate {rate}");
    assert!(sample_forward_rejection(2, 0.0, &mut s, 10).is_err());
}

fn bin_t_mrca(x: f64) -> usize {
    [0.25, 0.5, 0.75, 1.0, 1.25].iter().take_while(|&&b| x > b).count()
}

#[test]
fn contour_sampler_matches_forward_rejection() {
    let (n, t) = (3usize, 1.5);
    let reps = 10_000;
    let mut s = RandomStream::new(34, 0);
    let mut a = vec![0u64; 6 * 4];
    let mut b = vec![0u64; 6 * 4];
    for _ in 0..reps {
        let r = compute_report(&sample_complete_tree(n, Some(t), &mut s).unwrap()).unwrap();
        a[bin_t_mrca(r.t_mrca.unwrap()) * 4 + (r.n_ext as usize).min(3)] += 1;
        let f = sample_forward_rejection(n, t, &mut s, DEFAULT_REJECTION_BUDGET).unwrap();
        let r = compute_report(&f.tree).unwrap();
        b[bin_t_mrca(r.t_mrca.unwrap()) * 4 + (r.n_ext as usize).min(3)] += 1;
    }
    let out = chi_square_homogeneity(&a, &b, 1e-3).unwrap();
    assert!(out.passed, "{out:?}");
}

#[test]
fn extracted_depths_follow_the_divergence_law() {
    let (n, t) = (4usize, 3.0);
    let mut s = RandomStream::new(35, 0);
    let mut depths = Vec::new();
    for _ in 0..5000 {
        let tree = sample_complete_tree(n, Some(t), &mut s).unwrap();
        depths.extend_from_slice(extract_lineage_tree(&tree).unwrap().depths());
    }
    assert!(ks_statistic(&depths, |x| divergence_depth_cdf(t, x)).unwrap() < 0.015);
}

#[test]
fn streaming_summary_agrees_with_the_materialised_tree() {
    for seed in 0..200u64 {
        let (n, t) = (1 + (seed % 6) as usize, 0.5 + (seed % 9) as f64);
        let tree = sample_complete_tree(n, Some(t), &mut RandomStream::new(seed, 7)).unwrap();
        let mut summary = ContourSummary::new(t);
        let mut cert = PopulationCertifier::new(u64::MAX);
        let mut both = (&mut summary, &mut cert);
        let flow = sample_complete_contour_into(n, t, &mut RandomStream::new(seed, 7), &mut both).unwrap();
        assert!(flow.is_continue());
        let report = compute_report(&tree).unwrap();
        assert_eq!(summary.species() as usize, tree.len());
        assert_eq!(summary.extant() as usize, n);
        assert_eq!(summary.extinct(), report.n_ext);
        assert_eq!(summary.jump_count(), report.jumps);
        assert_eq!(cert.max_population(), report.max_pop);
        if n >= 2 {
            let marks = extract_lineage_tree(&tree).unwrap();
            assert_eq!(summary.depths(), marks.depths());
            assert_eq!(summary.t_mrca(), report.t_mrca);
        }
        let traj = population_trajectory(&tree);
        assert_eq!(summary.first_jump_time(), traj.jump_times().last().copied().unwrap_or(t).min(t));
    }
}

#[test]
fn certifier_stops_once_the_cap_is_reached() {
    let mut s = RandomStream::new(36, 0);
    let (mut stopped, mut reached) = (0, 0);
    for _ in 0..2000 {
        let mut cert = PopulationCertifier::new(4);
        let flow = sample_complete_contour_into(2, 5.0, &mut s, &mut cert).unwrap();
        if flow.is_break() {
            stopped += 1;
            assert!(cert.certified());
        }
        if cert.certified() {
            reached += 1;
            assert!(cert.max_population() >= 4);
        } else {
            assert!(cert.max_population() < 4);
        }
    }
    assert!(reached >= stopped && reached > 0);
}

#[test]
fn vertex_budget_censors_long_walks() {
    let mut s = RandomStream::new(37, 0);
    let mut budget = VertexBudget::new(Vec::new(), 10);
    let flow = sample_complete_contour_into(3, 50.0, &mut s, &mut budget).unwrap();
    assert!(flow.is_break() && budget.exhausted());
    assert_eq!(budget.inner.len(), 10);
    assert_eq!(budget.vertices_seen(), 10);
    let mut roomy = VertexBudget::new(Vec::new(), u64::MAX);
    let _ = sample_complete_contour_into(1, 0.1, &mut s, &mut roomy).unwrap();
    assert!(!roomy.exhausted());
}

#[test]
fn invalid_arguments() {
    let mut s = RandomStream::new(38, 0);
    assert_eq!(
        sample_complete_tree(0, Some(1.0), &mut s).unwrap_err(),
        Error::TooFewExtant {
            required: 1,
            found: 0
        }
    );
    assert!(sample_complete_tree(2, Some(-1.0), &mut s).is_err());
    let mut sink = Vec::new();
    assert!(sample_complete_contour_into(2, f64::NAN, &mut s, &mut sink).is_err());
}

/// A uniformly chosen species of a large clade looks like the distinguished
/// species of the local limit: its lifetime and its parent's age at its
/// birth are unit exponentials.
#[test]
fn uniform_species_of_a_large_clade() {
    let mut s = RandomStream::new(39, 0);
    let (mut life, mut parent_age) = (Vec::new(), Vec::new());
    while life.len() < 4000 {
        let tree = sample_complete_tree(30, Some(30.0), &mut s).unwrap();
        let k = (s.uniform() * tree.len() as f64) as usize;
        let sp = tree.species()[k];
        if let Some(p) = sp.parent {
            parent_age.push(sp.birth - tree.species()[p].birth);
        }
        // away from the present the lifetime is seen up to a horizon of 5
        if sp.birth <= tree.origin() - 5.0 {
            let l = sp.death - sp.birth;
            life.push(if l >= 5.0 { Bracket::at_least(5.0) } else { Bracket::exact(l) });
        }
    }
    let exp_cdf = |x: f64| -f64::exp_m1(-x.max(0.0));
    let b = ks_bounds(&life, exp_cdf).unwrap();
    assert!(b.upper < 0.04, "lifetime {b:?}");
    assert!(ks_statistic(&parent_age, exp_cdf).unwrap() < 0.04);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn sampling_is_deterministic(seed in any::<u64>(), id in any::<u64>(), n in 1usize..6, t in 0.1f64..30.0) {
        let a = sample_complete_tree(n, Some(t), &mut RandomStream::new(seed, id)).unwrap();
        let b = sample_complete_tree(n, Some(t), &mut RandomStream::new(seed, id)).unwrap();
        prop_assert_eq!(tree_to_contour(&a), tree_to_contour(&b));
    }
}
