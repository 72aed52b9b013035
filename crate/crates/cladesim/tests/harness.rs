use cladesim::harness::{run_indexed, run_replicates, Execution, SamplerSpec, VerificationSummary};
use cladesim::records::{reports_to_csv, ReportRecord};
use cladesim::suites::{run_suite, suite_number, SuiteConfig, SUITES};
use cladesim_core::dist::{population_pmf, sample_exponential, sample_origin_time};
use cladesim_core::gof::{chi_square_test, ks_statistic};
use cladesim_core::laws::ie1_law;
use cladesim_core::sampler::simulate_forward;

fn csv(reps: u64, seed: u64, execution: Execution) -> String {
    let reports = run_replicates(SamplerSpec { n: 3, t: Some(1.5) }, reps, seed, execution).unwrap();
    let records: Vec<ReportRecord> = reports.iter().map(|r| ReportRecord::from_report(r, 1.0)).collect();
    reports_to_csv(&records)
}

#[test]
fn parallel_and_serial_runs_agree_byte_for_byte() {
    let a = csv(300, 17, Execution::Parallel);
    assert_eq!(a, csv(300, 17, Execution::Serial));
    assert_eq!(a, csv(300, 17, Execution::Parallel));
    assert_ne!(a, csv(300, 18, Execution::Parallel));
}

#[test]
fn replicate_i_does_not_depend_on_the_replicate_count() {
    let short = run_replicates(SamplerSpec { n: 2, t: None }, 10, 4, Execution::Parallel).unwrap();
    let long = run_replicates(SamplerSpec { n: 2, t: None }, 50, 4, Execution::Parallel).unwrap();
    assert_eq!(short[..], long[..10]);
}

#[test]
fn zero_replicates_is_an_error() {
    assert!(run_replicates(SamplerSpec { n: 2, t: None }, 0, 1, Execution::Serial).is_err());
}

#[test]
fn lowest_failing_replicate_is_reported() {
    let err = run_indexed(64, 0, Execution::Parallel, |i, _| {
        if i % 10 == 9 {
            Err(cladesim_core::Error::EmptySample)
        } else {
            Ok(())
        }
    })
    .unwrap_err();
    assert_eq!(err.replicate, 9);
}

// Negative controls: the tests used by the suites must reject wrong laws at
// suite sample sizes.

#[test]
fn chi_square_rejects_a_wrong_population_law() {
    let reps = 100_000u64;
    let mut counts = vec![0u64; 10];
    run_indexed(reps, 1, Execution::Parallel, |_, s| Ok(simulate_forward(1.0, s, None).map_or(0, |t| t.extant_count())))
        .unwrap()
        .into_iter()
        .for_each(|k| counts[k.min(9)] += 1);
    let law = |t: f64| -> Vec<f64> {
        let mut p: Vec<f64> = (0..9).map(|k| population_pmf(t, k).unwrap() * reps as f64).collect();
        p.push(reps as f64 - p.iter().sum::<f64>());
        p
    };
    assert!(chi_square_test(&counts, &law(1.0), 1e-3).unwrap().passed);
    // the law at a slightly different time
    assert!(!chi_square_test(&counts, &law(1.05), 1e-3).unwrap().passed);
}

#[test]
fn ks_rejects_wrong_origin_scaling() {
    let n = 200usize;
    let scaled = run_indexed(10_000, 2, Execution::Parallel, |_, s| Ok(sample_origin_time(n, s) / n as f64)).unwrap();
    let law = ie1_law();
    assert!(ks_statistic(&scaled, |x| law.cdf(x)).unwrap() < 0.03);
    let exp = run_indexed(10_000, 2, Execution::Parallel, |_, s| Ok(sample_exponential(s))).unwrap();
    assert!(ks_statistic(&exp, |x| law.cdf(x)).unwrap() > 0.03);
    let stretched: Vec<f64> = scaled.iter().map(|x| 1.1 * x).collect();
    assert!(ks_statistic(&stretched, |x| law.cdf(x)).unwrap() > 0.03);
}

#[test]
fn suites_are_found_by_name_and_number() {
    assert_eq!(SUITES.len(), 13);
    for (k, name) in SUITES.iter().enumerate() {
        assert_eq!(suite_number(name), Some(k as u32 + 1));
        assert_eq!(suite_number(&(k + 1).to_string()), Some(k as u32 + 1));
    }
    assert_eq!(suite_number("14"), None);
}

#[test]
fn suite_summary_round_trips_through_json() {
    let config = SuiteConfig::new(5);
    let summary = VerificationSummary::new(5, 1.0, vec![run_suite(2, &config)]);
    let back: VerificationSummary = serde_json::from_str(&summary.to_json()).unwrap();
    assert_eq!(back, summary);
    assert!(summary.passed);
    assert!(summary.to_table().starts_with("[PASS]  2 origin-exact"));
}

#[test]
fn suite_seeds_depend_on_the_master_seed() {
    let a = run_suite(3, &SuiteConfig::new(1));
    let b = run_suite(3, &SuiteConfig::new(2));
    assert_ne!(a.tests[0].seed, b.tests[0].seed);
    assert_ne!(a.tests[0].observed, b.tests[0].observed);
}
