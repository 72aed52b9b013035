use std::process::Command;

use cladesim::cli::run;
use cladesim::newick::{export_newick, NewickOptions};
use cladesim::records::{reports_from_csv, ReportRecord};
use cladesim_core::dist::divergence_depth_quantile;
use cladesim_core::{compute_report, sample_complete_tree, RandomStream};

fn cli(args: &[&str]) -> (i32, String, String) {
    let mut argv = vec!["cladesim".to_string()];
    argv.extend(args.iter().map(|s| s.to_string()));
    let (mut out, mut err) = (Vec::new(), Vec::new());
    let code = run(argv, &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

fn temp(name: &str) -> std::path::PathBuf {
    let dir = std::env::temp_dir().join(format!("cladesim-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

#[test]
fn lineage_depth_is_the_inverse_cdf_of_the_first_uniform() {
    let (code, out, _) = cli(&["sample-lineage", "--n", "2", "--t", "1", "--reps", "1", "--seed", "7"]);
    assert_eq!(code, 0);
    let rows: Vec<&str> = out.lines().skip(2).collect();
    assert_eq!(rows.len(), 1);
    let depth: f64 = rows[0].split(',').nth(3).unwrap().parse().unwrap();
    let u = RandomStream::new(7, 0).uniform();
    let expected = divergence_depth_quantile(1.0, u);
    assert!((depth - expected).abs() < 1e-11, "{depth} vs {expected}");
}

#[test]
fn stats_reproduces_the_exporters_report() {
    let mut s = RandomStream::new(11, 0);
    let trees: Vec<_> = (0..20)
        .map(|i| sample_complete_tree(1 + i % 5, Some(2.0), &mut s).unwrap())
        .collect();
    let text: String = trees
        .iter()
        .map(|t| export_newick(t, &NewickOptions::default()).into_string() + "\n")
        .collect();
    let path = temp("trees.nwk");
    std::fs::write(&path, text).unwrap();
    let (code, out, err) = cli(&["stats", "--in", path.to_str().unwrap()]);
    assert_eq!(code, 0, "{err}");
    let back = reports_from_csv(&out).unwrap();
    assert_eq!(back.len(), trees.len());
    for (tree, got) in trees.iter().zip(&back) {
        let want = ReportRecord::from_report(&compute_report(tree).unwrap(), 1.0);
        assert_eq!((got.n, got.n_mrca, got.n_ext, got.n_anc, got.max_pop, got.d), (want.n, want.n_mrca, want.n_ext, want.n_anc, want.max_pop, want.d));
        assert!((got.t_or - want.t_or).abs() < 1e-9);
        match (got.t_mrca, want.t_mrca) {
            (Some(a), Some(b)) => assert!((a - b).abs() < 1e-9),
            (a, b) => assert_eq!(a, b),
        }
    }
}

#[test]
fn sample_complete_writes_newick_and_reports() {
    let report = temp("report.csv");
    let contour = temp("contour.csv");
    let (code, out, err) = cli(&[
        "sample-complete",
        "--n",
        "3",
        "--t",
        "1.5",
        "--reps",
        "4",
        "--seed",
        "2",
        "--report",
        report.to_str().unwrap(),
        "--contour",
        contour.to_str().unwrap(),
    ]);
    assert_eq!(code, 0, "{err}");
    assert_eq!(out.lines().count(), 4);
    assert!(out.lines().all(|l| l.ends_with(';')));
    let reports = reports_from_csv(&std::fs::read_to_string(&report).unwrap()).unwrap();
    assert_eq!(reports.len(), 4);
    assert!(reports.iter().all(|r| r.n == 3 && r.t_or == 1.5));
    let c = std::fs::read_to_string(&contour).unwrap();
    assert!(c.starts_with("# schema=cladesim.contour/1\nindex,height\n0,0\n"));

    let (code, json, _) = cli(&["sample-complete", "--n", "3", "--t", "1.5", "--reps", "4", "--seed", "2", "--format", "json"]);
    assert_eq!(code, 0);
    let v: serde_json::Value = serde_json::from_str(&json).unwrap();
    assert_eq!(v["schema_version"], 1);
    assert_eq!(v["replicates"].as_array().unwrap().len(), 4);
}

#[test]
fn vertex_budget_failure_names_the_replicate() {
    let (code, _, err) = cli(&["sample-complete", "--n", "50", "--t", "50", "--reps", "2", "--max-vertices", "10"]);
    assert_eq!(code, 1);
    assert!(err.contains("replicate 0"), "{err}");
}

#[test]
fn outputs_are_deterministic_in_seed_and_flags() {
    let args = ["sample-complete", "--n", "4", "--reps", "30", "--seed", "9", "--format", "csv"];
    let (_, a, _) = cli(&args);
    let (_, b, _) = cli(&args);
    assert_eq!(a, b);
    let (_, c, _) = cli(&["sample-complete", "--n", "4", "--reps", "30", "--seed", "10", "--format", "csv"]);
    assert_ne!(a, c);
}

#[test]
fn verify_is_byte_identical_across_runs() {
    let args = ["verify", "--suite", "origin-exact", "--seed", "42"];
    let (c1, a, _) = cli(&args);
    let (c2, b, table) = cli(&args);
    assert_eq!((c1, c2), (0, 0));
    assert_eq!(a, b);
    assert!(table.contains("origin-exact"));
    let v: serde_json::Value = serde_json::from_str(&a).unwrap();
    assert_eq!(v["schema_version"], 1);
    assert_eq!(v["suites"][0]["criterion"], 2);
}

#[test]
fn usage_errors_exit_2() {
    assert_eq!(cli(&["sample-lineage"]).0, 2);
    assert_eq!(cli(&["no-such-command"]).0, 2);
    assert_eq!(cli(&["sample-lineage", "--n", "1", "--t", "1"]).0, 2);
    assert_eq!(cli(&["sample-lineage", "--n", "3", "--t", "-1"]).0, 2);
    assert_eq!(cli(&["verify", "--suite", "nonsense"]).0, 2);
    assert_eq!(cli(&["stats", "--in", "x", "--format", "newick"]).0, 2);
    assert_eq!(cli(&["--rate-scale", "0", "law", "--law", "inverse-exponential"]).0, 2);
    assert_eq!(cli(&["--help"]).0, 0);
}

#[test]
fn unreadable_input_exits_1() {
    let (code, _, err) = cli(&["stats", "--in", "/nonexistent/trees.nwk"]);
    assert_eq!(code, 1);
    assert!(err.contains("cannot read"));
}

#[test]
fn config_file_supplies_flags_and_flags_win() {
    let cfg = temp("run.conf");
    std::fs::write(&cfg, "# lineage run\nn = 3\nt = 2\nreps = 2\nseed = 5\n").unwrap();
    let (code, from_cfg, err) = cli(&["sample-lineage", "--config", cfg.to_str().unwrap()]);
    assert_eq!(code, 0, "{err}");
    let (_, direct, _) = cli(&["sample-lineage", "--n", "3", "--t", "2", "--reps", "2", "--seed", "5"]);
    assert_eq!(from_cfg, direct);
    let (_, overridden, _) = cli(&["sample-lineage", "--config", cfg.to_str().unwrap(), "--seed", "6"]);
    let (_, seed6, _) = cli(&["sample-lineage", "--n", "3", "--t", "2", "--reps", "2", "--seed", "6"]);
    assert_eq!(overridden, seed6);
}

#[test]
fn rate_scale_divides_times() {
    let (_, unit, _) = cli(&["sample-lineage", "--n", "2", "--t", "1", "--seed", "7"]);
    let (_, fast, _) = cli(&["--rate-scale", "2", "sample-lineage", "--n", "2", "--t", "0.5", "--seed", "7"]);
    let depth = |s: &str| -> f64 { s.lines().nth(2).unwrap().split(',').nth(3).unwrap().parse().unwrap() };
    assert!((depth(&unit) / 2.0 - depth(&fast)).abs() < 1e-11);
}

#[test]
fn local_and_law_outputs() {
    for mode in ["lineage", "complete", "extant"] {
        let (code, out, err) = cli(&["local", "--mode", mode, "--window", "3", "--sigma", "1", "--reps", "2", "--seed", "1"]);
        assert_eq!(code, 0, "{mode}: {err}");
        assert!(out.starts_with("# schema=cladesim.local-"), "{out}");
        assert!(out.lines().count() > 2);
    }
    let (code, out, _) = cli(&["law", "--law", "origin-time", "--n", "3", "--upper", "4", "--points", "8"]);
    assert_eq!(code, 0);
    assert_eq!(out.lines().count(), 3 + 9);
}

#[test]
fn lineage_newick_output() {
    let (code, out, _) = cli(&["--format", "newick", "sample-lineage", "--n", "4", "--t", "2", "--reps", "3"]);
    assert_eq!(code, 0);
    assert_eq!(out.lines().count(), 3);
    assert!(out.lines().all(|l| l.contains("tree=lineage") && l.ends_with(';')));
}

#[test]
fn binary_exit_codes() {
    let bin = env!("CARGO_BIN_EXE_cladesim");
    let ok = Command::new(bin).args(["law", "--law", "excursion-height", "--points", "4"]).output().unwrap();
    assert_eq!(ok.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&ok.stdout).starts_with("# schema=cladesim.law/1"));
    let usage = Command::new(bin).args(["sample-lineage", "--bogus"]).output().unwrap();
    assert_eq!(usage.status.code(), Some(2));
    assert!(!usage.stderr.is_empty());
}
