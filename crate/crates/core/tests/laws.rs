use cladesim_core::gof::ks_statistic;
use cladesim_core::laws::{geometric_pn, hitting_time_pmf, lambda_ts, local_rates, mrca_conditional_cdf, pdf_mass};
use cladesim_core::{sample_lineage_tree, RandomStream, ReferenceLaw};
use proptest::prelude::*;

const LAWS: [ReferenceLaw; 9] = [
    ReferenceLaw::InverseExponential,
    ReferenceLaw::OriginTime { n: 3 },
    ReferenceLaw::MrcaLimit,
    ReferenceLaw::MrcaExact { n: 3 },
    ReferenceLaw::NmrcaLimit,
    ReferenceLaw::FirstPassage { scale: 0.5 },
    ReferenceLaw::DivergenceDepth { t: 2.0 },
    ReferenceLaw::ExcursionHeight,
    ReferenceLaw::Exponential { rate: 2.0 },
];

#[test]
fn densities_integrate_to_one() {
    for law in LAWS {
        if let Some(m) = pdf_mass(&law) {
            assert!((m - 1.0).abs() < 1e-6, "{}: mass {m}", law.name());
        }
    }
}

#[test]
fn cdf_derivative_is_the_density() {
    for law in LAWS {
        for x in [0.3, 0.9, 1.7] {
            let Some(p) = law.pdf(x) else { continue };
            let h = 1e-5;
            let d = (law.cdf(x + h) - law.cdf(x - h)) / (2.0 * h);
            assert!((d - p).abs() < 1e-5 * (1.0 + p), "{} at {x}: {d} vs {p}", law.name());
        }
    }
}

#[test]
fn exact_mrca_law_matches_lineage_samples() {
    let law = ReferenceLaw::MrcaExact { n: 3 };
    let mut s = RandomStream::new(8, 0);
    let xs: Vec<f64> = (0..20_000)
        .map(|_| sample_lineage_tree(3, None, &mut s).unwrap().marks.t_mrca().unwrap())
        .collect();
    assert!(ks_statistic(&xs, |x| law.cdf(x)).unwrap() < 0.015);
}

#[test]
fn exact_mrca_law_approaches_its_limit() {
    let limit = ReferenceLaw::MrcaLimit;
    let n = 400usize;
    let exact = ReferenceLaw::MrcaExact { n };
    for x in [0.2, 0.5, 1.0, 3.0] {
        assert!((exact.cdf(x * n as f64) - limit.cdf(x)).abs() < 5e-3, "x = {x}");
    }
}

#[test]
fn hitting_pmf_sums_to_one_and_has_the_right_mean_tail() {
    for n in [1u64, 2, 5] {
        let total: f64 = (0..200_000).map(|d| hitting_time_pmf(n, d)).sum();
        // tail mass beyond d is about n sqrt(2/(pi d))
        let tail = n as f64 * (2.0 / (std::f64::consts::PI * 200_000.0)).sqrt();
        assert!((total + tail - 1.0).abs() < 1e-3, "n = {n}: {total}");
    }
    assert_eq!(hitting_time_pmf(1, 1), 0.5);
    assert_eq!(hitting_time_pmf(2, 3), 0.0);
    assert_eq!(hitting_time_pmf(0, 0), 1.0);
}

#[test]
fn n_times_geometric_parameter_tends_to_lambda() {
    let (t, s) = (3.0, 1.2);
    for n in [1e3, 1e4, 1e5] {
        let p = geometric_pn(n * t, n * s);
        assert!((n * p - lambda_ts(t, s)).abs() < 2.0 / n.sqrt(), "n = {n}");
    }
}

#[test]
fn local_rates_at_depth_one() {
    let r = local_rates(1.0, 3);
    assert_eq!(r.density, 0.5);
    assert_eq!(r.merge_rate, 1.0);
    assert_eq!(r.branch_rate, 1.0);
    assert_eq!(local_rates(1.0, 1).branch_rate, 0.0);
}

proptest! {
    #[test]
    fn cdfs_are_monotone_in_unit_interval(a in 0.0f64..50.0, b in 0.0f64..50.0) {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        for law in LAWS {
            let (fl, fh) = (law.cdf(lo), law.cdf(hi));
            prop_assert!((0.0..=1.0).contains(&fl) && (0.0..=1.0).contains(&fh), "{}", law.name());
            prop_assert!(fl <= fh + 1e-12, "{}: F({lo}) = {fl} > F({hi}) = {fh}", law.name());
        }
    }

    #[test]
    fn conditional_mrca_cdf_is_a_cdf_on_zero_t(t in 0.1f64..20.0, u in 0.0f64..1.0) {
        let s = u * t;
        let f = mrca_conditional_cdf(t, s);
        prop_assert!((0.0..=1.0).contains(&f));
        prop_assert_eq!(mrca_conditional_cdf(t, t), 1.0);
        prop_assert_eq!(mrca_conditional_cdf(t, 0.0), 0.0);
    }
}
