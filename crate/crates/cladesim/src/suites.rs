//! The verification suites.
//!
//! Each suite checks one distributional law or structural property and
//! returns a [`SuiteReport`]. Suites are deterministic functions of the
//! master seed and the replicate scale: suite `k` runs under
//! `derive_seed(master, k)` and each of its experiments under a seed derived
//! from that.
//!
//! Whole-tree experiments with the origin drawn from its posterior have
//! heavy-tailed cost, so they stream each contour through a vertex budget;
//! replicates that hit the budget are right-censored and Kolmogorov-Smirnov
//! distances are reported as a bracket over every completion of the
//! censored values. Such a test passes only if the upper end of the bracket
//! is below its threshold.

use cladesim_core::contour::{contour_to_tree, tree_to_contour, ContourPath};
use cladesim_core::dist::{
    divergence_depth_cdf, origin_time_cdf, population_pmf, sample_exponential, sample_geometric,
    sample_origin_time, sample_uniform_index,
};
use cladesim_core::gof::{
    chi_square_grouped, chi_square_homogeneity, chi_square_test, ks_bounds, ks_bounds_discrete, ks_statistic,
    ks_two_sample, ks_two_sample_bounds, Bracket, KsBounds,
};
use cladesim_core::laws::{geometric_pn, hitting_time_pmf, ReferenceLaw};
use cladesim_core::local::{sample_local_complete_tree, Centering, LocalWindowConfig, Role};
use cladesim_core::rng::derive_seed;
use cladesim_core::sampler::{sample_complete_contour_into, simulate_forward, DEFAULT_REJECTION_BUDGET};
use cladesim_core::stats::{ancestor_count_representation, LevelIntensity};
use cladesim_core::summary::{ContourSummary, PopulationCertifier, VertexBudget};
use cladesim_core::{
    compute_report, extract_lineage_tree, population_trajectory, sample_complete_tree, sample_forward_rejection,
    sample_lineage_tree, CompleteTree, RandomStream,
};

use crate::harness::{
    run_indexed, run_replicates, Criterion, Execution, ReplicateError, SamplerSpec, StatisticKind, SuiteReport,
    TestRecord, VerificationSummary,
};
use crate::newick::{export_lineage, export_newick, import_newick, ImportedTree, NewickMode, NewickOptions};
use crate::records::{reports_to_csv, ReportRecord};

/// Thresholds of every suite. The defaults are the acceptance values.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Tolerances {
    /// Chi-square tests pass when the p-value exceeds this.
    pub chi_square_alpha: f64,
    pub origin_ks: f64,
    pub origin_limit_ks: f64,
    pub order_statistic_ks: f64,
    /// Allowed deviation in binomial standard errors.
    pub max_population_se: f64,
    pub extinct_count_ks: f64,
    pub population_limit_ks: f64,
    pub time_reversal_ks: f64,
    pub origin_mrca_ks: f64,
    pub mrca_count_ks: f64,
    pub ancestor_ks: f64,
    pub ancestor_mean: (f64, f64),
    pub local_depth_ks: f64,
    pub lineage_density: f64,
    pub lineage_size: f64,
    /// Relative tolerance on the merge rate.
    pub merge_rate: f64,
    pub local_probability: f64,
    pub newick_round_trip: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            chi_square_alpha: 1e-3,
            origin_ks: 0.015,
            origin_limit_ks: 0.03,
            order_statistic_ks: 0.02,
            max_population_se: 3.0,
            extinct_count_ks: 0.02,
            population_limit_ks: 0.05,
            time_reversal_ks: 0.02,
            origin_mrca_ks: 0.04,
            mrca_count_ks: 0.05,
            ancestor_ks: 0.02,
            ancestor_mean: (0.85, 1.15),
            local_depth_ks: 0.03,
            lineage_density: 0.005,
            lineage_size: 0.02,
            merge_rate: 0.02,
            local_probability: 0.01,
            newick_round_trip: 1e-9,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SuiteConfig {
    pub master_seed: u64,
    /// Multiplies every replicate count (at least 100 replicates remain).
    /// The thresholds are calibrated for 1.
    pub scale: f64,
    pub tolerances: Tolerances,
    pub execution: Execution,
}

impl SuiteConfig {
    pub fn new(master_seed: u64) -> Self {
        Self {
            master_seed,
            scale: 1.0,
            tolerances: Tolerances::default(),
            execution: Execution::Parallel,
        }
    }

    fn reps(&self, base: u64) -> u64 {
        ((base as f64 * self.scale).round() as u64).max(100)
    }
}

/// Suite names in criterion order.
pub const SUITES: [&str; 13] = [
    "population-law",
    "origin-exact",
    "origin-limit",
    "sampler-equivalence",
    "lineage-consistency",
    "max-population",
    "population-identity",
    "time-reversal",
    "origin-mrca-limit",
    "mrca-count",
    "ancestors",
    "local-limits",
    "structural",
];

/// Looks a suite up by name or by its number.
pub fn suite_number(name: &str) -> Option<u32> {
    if let Ok(k) = name.parse::<u32>() {
        return (1..=13).contains(&k).then_some(k);
    }
    SUITES.iter().position(|&s| s == name).map(|i| i as u32 + 1)
}

pub fn run_suite(number: u32, config: &SuiteConfig) -> SuiteReport {
    let name = SUITES[number as usize - 1];
    let ctx = Ctx {
        config,
        seed: derive_seed(config.master_seed, number as u64),
    };
    let result = match number {
        1 => population_law(&ctx),
        2 => origin_exact(&ctx),
        3 => origin_limit(&ctx),
        4 => sampler_equivalence(&ctx),
        5 => lineage_consistency(&ctx),
        6 => max_population(&ctx),
        7 => population_identity(&ctx),
        8 => time_reversal(&ctx),
        9 => origin_mrca_limit(&ctx),
        10 => mrca_count(&ctx),
        11 => ancestors(&ctx),
        12 => local_limits(&ctx),
        13 => structural(&ctx),
        _ => unreachable!("suite numbers are checked"),
    };
    match result {
        Ok(tests) => SuiteReport::new(name, number, tests),
        Err(e) => SuiteReport::errored(name, number, e.to_string()),
    }
}

pub fn run_all(config: &SuiteConfig) -> VerificationSummary {
    let suites = (1..=13).map(|k| run_suite(k, config)).collect();
    VerificationSummary::new(config.master_seed, config.scale, suites)
}

#[derive(Debug, thiserror::Error)]
enum SuiteError {
    #[error(transparent)]
    Replicate(#[from] ReplicateError),
    #[error(transparent)]
    Core(#[from] cladesim_core::Error),
}

type Tests = Result<Vec<TestRecord>, SuiteError>;

struct Ctx<'a> {
    config: &'a SuiteConfig,
    seed: u64,
}

impl Ctx<'_> {
    fn tol(&self) -> &Tolerances {
        &self.config.tolerances
    }

    fn reps(&self, base: u64) -> u64 {
        self.config.reps(base)
    }

    fn sub_seed(&self, k: u64) -> u64 {
        derive_seed(self.seed, k)
    }

    fn run<T: Send>(
        &self,
        reps: u64,
        seed: u64,
        f: impl Fn(u64, &mut RandomStream) -> cladesim_core::Result<T> + Sync,
    ) -> Result<Vec<T>, SuiteError> {
        Ok(run_indexed(reps, seed, self.config.execution, f)?)
    }
}

fn below(x: f64) -> Criterion {
    Criterion::Below { threshold: x }
}

fn ks_record(name: impl Into<String>, d: f64, threshold: f64, reps: u64, seed: u64) -> TestRecord {
    TestRecord::new(name, StatisticKind::Ks, d, below(threshold)).replicates(reps, seed)
}

fn bracket_record(name: impl Into<String>, b: KsBounds, threshold: f64, reps: u64, seed: u64) -> TestRecord {
    TestRecord::new(name, StatisticKind::KsBracket, b.upper, below(threshold))
        .lower(b.lower)
        .replicates(reps, seed)
}

fn chi_record(name: impl Into<String>, p: f64, alpha: f64, reps: u64, seed: u64) -> TestRecord {
    TestRecord::new(name, StatisticKind::ChiSquare, p, Criterion::Above { threshold: alpha }).replicates(reps, seed)
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

/// Forward simulation against the modified geometric population law.
fn population_law(ctx: &Ctx) -> Tests {
    let (t, reps, seed) = (1.0, ctx.reps(100_000), ctx.sub_seed(0));
    // None: more than 9 species survive
    let sizes = ctx.run(reps, seed, |_, s| {
        Ok(simulate_forward(t, s, Some(9)).map_or(9, |tree| tree.extant_count()))
    })?;
    let mut observed = vec![0u64; 10];
    for k in sizes {
        observed[k] += 1;
    }
    let mut expected = Vec::with_capacity(10);
    for n in 0..9 {
        expected.push(reps as f64 * population_pmf(t, n)?);
    }
    expected.push(reps as f64 - expected.iter().sum::<f64>());
    let out = chi_square_test(&observed, &expected, ctx.tol().chi_square_alpha)?;
    Ok(vec![chi_record(
        "forward population at t=1, cells 0..8 and 9+",
        out.p_value,
        ctx.tol().chi_square_alpha,
        reps,
        seed,
    )])
}

/// Origin draws against their exact posterior.
fn origin_exact(ctx: &Ctx) -> Tests {
    let mut tests = Vec::new();
    for (k, n) in [1usize, 5, 20].into_iter().enumerate() {
        let (reps, seed) = (ctx.reps(10_000), ctx.sub_seed(k as u64));
        let xs = ctx.run(reps, seed, |_, s| Ok(sample_origin_time(n, s)))?;
        let d = ks_statistic(&xs, |t| origin_time_cdf(n, t))?;
        tests.push(ks_record(format!("origin time n={n}"), d, ctx.tol().origin_ks, reps, seed));
    }
    Ok(tests)
}

/// Rescaled origin against the inverse-exponential limit.
fn origin_limit(ctx: &Ctx) -> Tests {
    let (n, reps, seed) = (200usize, ctx.reps(10_000), ctx.sub_seed(0));
    let xs = ctx.run(reps, seed, |_, s| Ok(sample_origin_time(n, s) / n as f64))?;
    let d = ks_statistic(&xs, |x| ReferenceLaw::InverseExponential.cdf(x))?;
    Ok(vec![ks_record("T_or/n at n=200 vs IE(1)", d, ctx.tol().origin_limit_ks, reps, seed)])
}

fn bin_edges(x: f64, edges: &[f64]) -> usize {
    edges.iter().take_while(|&&e| x > e).count()
}

/// Binned marginals of one tree: T_mrca, N_ext, N_mrca and max population.
fn marginal_cells(tree: &CompleteTree, n: usize, t: f64) -> cladesim_core::Result<[usize; 4]> {
    let r = compute_report(tree)?;
    let edges: Vec<f64> = (1..10).map(|k| t * k as f64 / 10.0).collect();
    Ok([
        bin_edges(r.t_mrca.unwrap_or(0.0), &edges),
        (r.n_ext as usize).min(10),
        (r.n_mrca.unwrap_or(2) as usize - 2).min(10),
        (r.max_pop as usize - n).min(10),
    ])
}

/// Contour sampler against forward simulation conditioned by rejection.
fn sampler_equivalence(ctx: &Ctx) -> Tests {
    const NAMES: [&str; 4] = ["T_mrca", "N_ext", "N_mrca", "max_pop"];
    let mut tests = Vec::new();
    for (k, (n, t)) in [(2usize, 1.0), (3, 1.5), (4, 2.0)].into_iter().enumerate() {
        let reps = ctx.reps(10_000);
        let (seed_a, seed_b) = (ctx.sub_seed(2 * k as u64), ctx.sub_seed(2 * k as u64 + 1));
        let a = ctx.run(reps, seed_a, |_, s| marginal_cells(&sample_complete_tree(n, Some(t), s)?, n, t))?;
        let b = ctx.run(reps, seed_b, |_, s| {
            let f = sample_forward_rejection(n, t, s, DEFAULT_REJECTION_BUDGET)?;
            marginal_cells(&f.tree, n, t)
        })?;
        for (m, name) in NAMES.iter().enumerate() {
            if n < 2 && m == 2 {
                continue;
            }
            let (mut ca, mut cb) = (vec![0u64; 11], vec![0u64; 11]);
            for cells in &a {
                ca[cells[m]] += 1;
            }
            for cells in &b {
                cb[cells[m]] += 1;
            }
            let out = chi_square_homogeneity(&ca, &cb, ctx.tol().chi_square_alpha)?;
            tests.push(chi_record(
                format!("{name} at (n={n}, t={t}): contour vs forward rejection"),
                out.p_value,
                ctx.tol().chi_square_alpha,
                reps,
                seed_a,
            ));
        }
    }
    Ok(tests)
}

/// `P(X_(k) ≤ x)` for the `k`-th smallest of `m` i.i.d. values with CDF `f`.
fn order_statistic_cdf(m: usize, k: usize, f: f64) -> f64 {
    let mut total = 0.0;
    let mut binom = 1.0;
    for j in 0..=m {
        if j > 0 {
            binom *= (m - j + 1) as f64 / j as f64;
        }
        if j >= k {
            total += binom * f.powi(j as i32) * (1.0 - f).powi((m - j) as i32);
        }
    }
    total.min(1.0)
}

/// Depths read off complete trees against the direct depth sampler.
fn lineage_consistency(ctx: &Ctx) -> Tests {
    let (n, t) = (5usize, 4.0);
    let m = n - 1;
    let (reps, seed) = (ctx.reps(10_000), ctx.sub_seed(0));
    let sorted = |mut d: Vec<f64>| {
        d.sort_unstable_by(f64::total_cmp);
        d
    };
    let from_trees = ctx.run(reps, seed, |_, s| {
        Ok(sorted(extract_lineage_tree(&sample_complete_tree(n, Some(t), s)?)?.into_depths()))
    })?;
    let direct_reps = ctx.reps(100_000);
    let direct_seed = ctx.sub_seed(1);
    let direct = ctx.run(direct_reps, direct_seed, |_, s| {
        Ok(sorted(sample_lineage_tree(n, Some(t), s)?.marks.into_depths()))
    })?;
    let mut tests = Vec::new();
    for k in 1..=m {
        let cdf = |x: f64| order_statistic_cdf(m, k, divergence_depth_cdf(t, x));
        let col = |v: &[Vec<f64>]| v.iter().map(|d| d[k - 1]).collect::<Vec<f64>>();
        let d = ks_statistic(&col(&from_trees), cdf)?;
        tests.push(ks_record(
            format!("order statistic {k} of {m} depths from complete trees at (5, 4)"),
            d,
            ctx.tol().order_statistic_ks,
            reps,
            seed,
        ));
        let d = ks_statistic(&col(&direct), cdf)?;
        tests.push(ks_record(
            format!("order statistic {k} of {m} depths from the direct sampler"),
            d,
            ctx.tol().order_statistic_ks,
            direct_reps,
            direct_seed,
        ));
    }
    Ok(tests)
}

/// `P(max population ≥ c) = n/c` for trees with a random origin.
fn max_population(ctx: &Ctx) -> Tests {
    let (n, cap) = (3usize, 10u64);
    let (reps, seed) = (ctx.reps(100_000), ctx.sub_seed(0));
    let maxima = ctx.run(reps, seed, |_, s| {
        let t = sample_origin_time(n, s);
        let mut cert = PopulationCertifier::new(cap);
        let _ = sample_complete_contour_into(n, t, s, &mut cert)?;
        Ok(if cert.certified() { cap } else { cert.max_population() })
    })?;
    let mut tests = Vec::new();
    for c in [3u64, 4, 6, 10] {
        let p = n as f64 / c as f64;
        let hits = maxima.iter().filter(|&&m| m >= c).count() as f64 / reps as f64;
        let se = (p * (1.0 - p) / reps as f64).sqrt();
        let k = ctx.tol().max_population_se;
        tests.push(
            TestRecord::new(
                format!("P(max population >= {c}) at n=3 (target {p:.4})"),
                StatisticKind::Moment,
                hits,
                Criterion::Within {
                    target: p,
                    tolerance: k * se,
                },
            )
            .replicates(reps, seed),
        );
    }
    Ok(tests)
}

/// `P(N_ext ≤ k)` for `N_ext = (D - n)/2` with `D` the hitting time of 0 by
/// a simple random walk from `n`, tabulated for `k < len`.
fn extinct_count_cdf_table(n: u64, len: usize) -> Vec<f64> {
    let mut acc = 0.0;
    (0..len as u64)
        .map(|k| {
            acc += hitting_time_pmf(n, n + 2 * k);
            acc.min(1.0)
        })
        .collect()
}

struct Streamed {
    origin: f64,
    summary: ContourSummary,
    censored: bool,
}

/// Streams one contour with a random origin through a vertex budget.
fn stream_summary(n: usize, limit: u64, s: &mut RandomStream) -> cladesim_core::Result<Streamed> {
    let origin = sample_origin_time(n, s);
    let mut budget = VertexBudget::new(ContourSummary::new(origin), limit);
    let _ = sample_complete_contour_into(n, origin, s, &mut budget)?;
    Ok(Streamed {
        origin,
        censored: budget.exhausted(),
        summary: budget.inner,
    })
}

/// The identity `N_ext = (D - n)/2`, the law of `N_ext` and the scaling of
/// `D`.
fn population_identity(ctx: &Ctx) -> Tests {
    let tol = *ctx.tol();
    let mut tests = Vec::new();

    // n = 5: trees under a budget, materialised when complete
    let (n, limit) = (5usize, 4_000_000u64);
    let (reps, seed) = (ctx.reps(10_000), ctx.sub_seed(0));
    // (extinct count or its lower bound, censored, identity violated)
    let rows = ctx.run(reps, seed, |_, s| {
        let origin = sample_origin_time(n, s);
        let mut budget = VertexBudget::new(Vec::new(), limit);
        let _ = sample_complete_contour_into(n, origin, s, &mut budget)?;
        if budget.exhausted() {
            let mut partial = ContourSummary::new(origin);
            for &v in &budget.inner {
                let _ = cladesim_core::ContourSink::vertex(&mut partial, v);
            }
            return Ok((partial.extinct(), true, false));
        }
        let tree = contour_to_tree(&ContourPath::from_vertices(budget.inner)?, origin)?;
        let n_ext = tree.extinct_count() as u64;
        let d = population_trajectory(&tree).jump_count() as u64;
        Ok((n_ext, false, 2 * n_ext + n as u64 != d))
    })?;
    let censored = rows.iter().filter(|r| r.1).count();
    let violations = rows.iter().filter(|r| r.2).count();
    tests.push(
        TestRecord::new(
            "N_ext = (D - n)/2 on every complete replicate at n=5",
            StatisticKind::Violations,
            violations as f64,
            below(1.0),
        )
        .replicates(reps, seed)
        .note(format!("{} replicates checked, {censored} censored", reps as usize - censored)),
    );
    let brackets: Vec<Bracket> = rows
        .iter()
        .map(|&(k, c, _)| if c { Bracket::at_least(k as f64) } else { Bracket::exact(k as f64) })
        .collect();
    let top = rows.iter().map(|r| r.0).max().unwrap_or(0) as usize + 2;
    let table = extinct_count_cdf_table(n as u64, top);
    let b = ks_bounds_discrete(&brackets, |k| table.get(k as usize).copied().unwrap_or(1.0))?;
    tests.push(
        bracket_record("N_ext at n=5 vs random-walk hitting law", b, tol.extinct_count_ks, reps, seed)
            .note(format!("{censored} censored at {limit} contour vertices")),
    );
    // the same oracle by simulation
    let (walk_reps, walk_seed) = (ctx.reps(1_000_000), ctx.sub_seed(1));
    let walk_limit = limit - n as u64 - 1;
    let walks = ctx.run(walk_reps, walk_seed, |_, s| {
        let h = crate::oracle::srw_hitting_time(n as u64, walk_limit, s);
        let k = (h.value - n as u64) as f64 / 2.0;
        Ok(if h.censored { Bracket::at_least(k.floor()) } else { Bracket::exact(k) })
    })?;
    let b = ks_two_sample_bounds(&brackets, &walks)?;
    tests.push(bracket_record(
        "N_ext at n=5 vs simulated random walk",
        b,
        tol.extinct_count_ks,
        walk_reps,
        walk_seed,
    ));

    // n = 300: D / n^2
    let n = 300usize;
    let nn = (n * n) as f64;
    let limit = 100 * (n * n) as u64;
    let (reps, seed) = (ctx.reps(1000), ctx.sub_seed(2));
    let big = ctx.run(reps, seed, |_, s| {
        let r = stream_summary(n, limit, s)?;
        Ok((r.summary.jump_count(), r.summary.extinct(), r.censored))
    })?;
    let censored = big.iter().filter(|r| r.2).count();
    let bracket = |x: u64, c: bool| {
        if c {
            Bracket::at_least(x as f64 / nn)
        } else {
            Bracket::exact(x as f64 / nn)
        }
    };
    let d_scaled: Vec<Bracket> = big.iter().map(|&(d, _, c)| bracket(d, c)).collect();
    let half = ReferenceLaw::FirstPassage { scale: 0.5 };
    let one = ReferenceLaw::FirstPassage { scale: 1.0 };
    let b = ks_bounds(&d_scaled, |x| half.cdf(x))?;
    tests.push(
        bracket_record("D/n^2 at n=300 vs tau_1/2", b, tol.population_limit_ks, reps, seed)
            .note(format!("{censored} censored at D > 100 n^2")),
    );
    let b = ks_bounds(&d_scaled, |x| one.cdf(x))?;
    tests.push(bracket_record("D/n^2 at n=300 vs tau_1", b, tol.population_limit_ks, reps, seed).informational());
    let ext_scaled: Vec<Bracket> = big.iter().map(|&(_, e, c)| bracket(e, c)).collect();
    let b = ks_bounds(&ext_scaled, |x| half.cdf(x))?;
    tests.push(
        bracket_record("N_ext/n^2 at n=300 vs tau_1/2", b, tol.population_limit_ks, reps, seed).informational(),
    );
    // uncensored D from the walk, whose law D has exactly
    let (walk_reps, walk_seed) = (ctx.reps(10_000), ctx.sub_seed(3));
    let walks = ctx.run(walk_reps, walk_seed, |_, s| {
        Ok(crate::oracle::srw_hitting_time(n as u64, u64::MAX, s).value as f64 / nn)
    })?;
    for (law, name) in [(half, "tau_1/2"), (one, "tau_1")] {
        let d = ks_statistic(&walks, |x| law.cdf(x))?;
        tests.push(
            ks_record(format!("walk D/n^2 at n=300 vs {name}"), d, tol.population_limit_ks, walk_reps, walk_seed)
                .informational(),
        );
    }
    Ok(tests)
}

/// The trajectory read from the present backwards against the birth-death
/// chain with rates `(i, i)` started at `n`.
fn time_reversal(ctx: &Ctx) -> Tests {
    let n = 3usize;
    let limit = 4_000_000u64;
    let (reps, seed) = (ctx.reps(10_000), ctx.sub_seed(0));
    let trees = ctx.run(reps, seed, |_, s| {
        let r = stream_summary(n, limit, s)?;
        let d = r.summary.jump_count() as f64;
        let first = r.summary.first_jump_time();
        Ok(if r.censored {
            [Bracket::at_least(d), Bracket::between(0.0, first), Bracket::exact(r.origin)]
        } else {
            [Bracket::exact(d), Bracket::exact(first), Bracket::exact(r.origin)]
        })
    })?;
    let (chain_reps, chain_seed) = (ctx.reps(100_000), ctx.sub_seed(1));
    let chain_limit = 1_000_000u64;
    let chains = ctx.run(chain_reps, chain_seed, |_, s| {
        let p = crate::oracle::birth_death_chain(n as u64, chain_limit, s);
        Ok(if p.censored {
            [
                Bracket::at_least(p.jumps as f64),
                Bracket::exact(p.first_jump),
                Bracket::at_least(p.duration),
            ]
        } else {
            [
                Bracket::exact(p.jumps as f64),
                Bracket::exact(p.first_jump),
                Bracket::exact(p.duration),
            ]
        })
    })?;
    let censored = trees.iter().filter(|r| !r[0].is_exact()).count();
    let mut tests = Vec::new();
    for (m, name) in ["jump count D", "time of first jump", "total duration"].iter().enumerate() {
        let a: Vec<Bracket> = trees.iter().map(|r| r[m]).collect();
        let b: Vec<Bracket> = chains.iter().map(|r| r[m]).collect();
        let bounds = ks_two_sample_bounds(&a, &b)?;
        tests.push(
            bracket_record(
                format!("{name} at n=3: reversed trajectory vs chain"),
                bounds,
                ctx.tol().time_reversal_ks,
                reps,
                seed,
            )
            .note(format!("{censored} trees censored at {limit} vertices, chains at {chain_limit} jumps")),
        );
    }
    Ok(tests)
}

/// Joint limit of the rescaled origin and MRCA times.
fn origin_mrca_limit(ctx: &Ctx) -> Tests {
    let n = 500usize;
    let (reps, seed) = (ctx.reps(10_000), ctx.sub_seed(0));
    let pairs = ctx.run(reps, seed, |_, s| {
        let l = sample_lineage_tree(n, None, s)?;
        Ok((l.origin / n as f64, l.marks.t_mrca().expect("n >= 2") / n as f64))
    })?;
    let (rep_reps, rep_seed) = (ctx.reps(100_000), ctx.sub_seed(1));
    let rep = ctx.run(rep_reps, rep_seed, |_, s| {
        let (x1, x2) = (sample_exponential(s), sample_exponential(s));
        Ok((1.0 / x1, 1.0 / (x1 + x2)))
    })?;
    let tol = ctx.tol().origin_mrca_ks;
    let mut tests = Vec::new();
    let stats: [(&str, fn(&(f64, f64)) -> f64); 3] = [
        ("T_or/n", |p| p.0),
        ("T_mrca/n", |p| p.1),
        ("T_mrca/T_or", |p| p.1 / p.0),
    ];
    for (name, f) in stats {
        let a: Vec<f64> = pairs.iter().map(f).collect();
        let b: Vec<f64> = rep.iter().map(f).collect();
        let d = ks_two_sample(&a, &b)?;
        tests.push(ks_record(
            format!("{name} at n=500 vs (1/xi1, 1/(xi1+xi2))"),
            d,
            tol,
            reps,
            seed,
        ));
    }
    Ok(tests)
}

fn two_geometric_pmf(p: f64, k: u64) -> f64 {
    if k < 2 {
        0.0
    } else {
        (k - 1) as f64 * p * p * (1.0 - p).powi(k as i32 - 2)
    }
}

/// The MRCA count: its limit marginal and its conditional law given the
/// origin and MRCA times.
fn mrca_count(ctx: &Ctx) -> Tests {
    let tol = *ctx.tol();
    let mut tests = Vec::new();
    let n = 500usize;
    let (reps, seed) = (ctx.reps(10_000), ctx.sub_seed(0));
    let ratios = ctx.run(reps, seed, |_, s| {
        let l = sample_lineage_tree(n, None, s)?;
        let p = geometric_pn(l.origin, l.marks.t_mrca().expect("n >= 2"));
        Ok((sample_geometric(p, s) + sample_geometric(p, s)) as f64 / n as f64)
    })?;
    let d = ks_statistic(&ratios, |r| ReferenceLaw::NmrcaLimit.cdf(r))?;
    tests.push(ks_record(
        "N_mrca/n at n=500 vs 1-(1+r)^-2",
        d,
        tol.mrca_count_ks,
        reps,
        seed,
    ));

    for (k, (n, t)) in [(3usize, 5.0), (5, 3.0)].into_iter().enumerate() {
        let (reps, seed) = (ctx.reps(20_000), ctx.sub_seed(1 + k as u64));
        let pairs = ctx.run(reps, seed, |_, s| {
            let r = compute_report(&sample_complete_tree(n, Some(t), s)?)?;
            Ok((r.t_mrca.expect("n >= 2"), r.n_mrca.expect("n >= 2")))
        })?;
        let edges = [0.0, 0.1 * t, 0.2 * t, 0.4 * t, 0.7 * t, t];
        let cells = 12usize;
        let mut groups = Vec::new();
        for w in edges.windows(2) {
            let mut observed = vec![0.0; cells];
            let mut expected = vec![0.0; cells];
            for &(s, c) in pairs.iter().filter(|(x, _)| *x > w[0] && *x <= w[1]) {
                observed[(c as usize - 2).min(cells - 1)] += 1.0;
                let p = geometric_pn(t, s);
                let mut tail = 1.0;
                for j in 0..cells - 1 {
                    let q = two_geometric_pmf(p, j as u64 + 2);
                    expected[j] += q;
                    tail -= q;
                }
                expected[cells - 1] += tail;
            }
            if observed.iter().sum::<f64>() > 0.0 {
                groups.push((observed, expected));
            }
        }
        let out = chi_square_grouped(&groups, tol.chi_square_alpha)?;
        tests.push(chi_record(
            format!("N_mrca given (T_or, T_mrca) at (n={n}, t={t}) vs Geometric sum"),
            out.p_value,
            tol.chi_square_alpha,
            reps,
            seed,
        ));
    }
    Ok(tests)
}

/// Ancestor counts from trees against the Poisson-mixture representation,
/// and the `n log n` growth of their mean.
fn ancestors(ctx: &Ctx) -> Tests {
    let tol = *ctx.tol();
    let mut tests = Vec::new();
    let (n, t) = (4usize, 2.0);
    let (reps, seed) = (ctx.reps(10_000), ctx.sub_seed(0));
    let trees = ctx.run(reps, seed, |_, s| {
        Ok(compute_report(&sample_complete_tree(n, Some(t), s)?)?.n_anc as f64)
    })?;
    let (rep_reps, rep_seed) = (ctx.reps(100_000), ctx.sub_seed(1));
    for (intensity, label) in [(LevelIntensity::Unit, "Poisson(h)"), (LevelIntensity::Conditioned, "Poisson(h - ln(1+h))")] {
        let rep = ctx.run(rep_reps, rep_seed, |_, s| {
            Ok(ancestor_count_representation(n, t, intensity, s)? as f64)
        })?;
        let d = ks_two_sample(&trees, &rep)?;
        let record = ks_record(
            format!("N_anc at (4, 2): trees vs {label} representation"),
            d,
            tol.ancestor_ks,
            reps,
            seed,
        )
        .note(format!("tree mean {:.4}, representation mean {:.4}", mean(&trees), mean(&rep)));
        tests.push(match intensity {
            LevelIntensity::Unit => record,
            LevelIntensity::Conditioned => record.informational(),
        });
    }

    let n = 2000usize;
    let norm = n as f64 * (n as f64).ln();
    let (reps, seed) = (ctx.reps(200), ctx.sub_seed(2));
    for (intensity, label) in [(LevelIntensity::Conditioned, "ln(1+h)-corrected"), (LevelIntensity::Unit, "Poisson(h)")] {
        let ratios = ctx.run(reps, seed, |_, s| {
            let t = sample_origin_time(n, s);
            Ok(ancestor_count_representation(n, t, intensity, s)? as f64 / norm)
        })?;
        let mut sorted = ratios.clone();
        sorted.sort_unstable_by(f64::total_cmp);
        let record = TestRecord::new(
            format!("mean N_anc/(n ln n) at n=2000, {label} representation"),
            StatisticKind::Moment,
            mean(&ratios),
            Criterion::Between {
                low: tol.ancestor_mean.0,
                high: tol.ancestor_mean.1,
            },
        )
        .replicates(reps, seed)
        .note(format!("median {:.4}, max {:.4}", sorted[sorted.len() / 2], sorted[sorted.len() - 1]));
        tests.push(match intensity {
            LevelIntensity::Conditioned => record,
            LevelIntensity::Unit => record.informational(),
        });
    }
    Ok(tests)
}

/// Local limits of the lineage tree and of the complete tree.
fn local_limits(ctx: &Ctx) -> Tests {
    let tol = *ctx.tol();
    let mut tests = Vec::new();
    let n = 1000usize;
    let (reps, seed) = (ctx.reps(100_000), ctx.sub_seed(0));
    struct Lineage {
        picked: f64,
        above: u64,
        gaps: (u64, u64),
        pairs: (u64, u64),
    }
    let rows = ctx.run(reps, seed, |_, s| {
        let l = sample_lineage_tree(n, None, s)?;
        let d = l.marks.depths();
        let picked = d[sample_uniform_index(d.len() as u64, s) as usize - 1];
        let above = d.iter().filter(|&&h| h > 1.0).count() as u64;
        // gaps between consecutive marks above 1
        let idx: Vec<usize> = (0..d.len()).filter(|&i| d[i] > 1.0).collect();
        let gaps = match (idx.first(), idx.last()) {
            (Some(a), Some(b)) if idx.len() > 1 => ((b - a) as u64, idx.len() as u64 - 1),
            _ => (0, 0),
        };
        // disjoint neighbour pairs: how many have min ≥ 0.95, and of those
        // how many merge by 1.05
        let (mut at_risk, mut merged) = (0, 0);
        for w in d.chunks_exact(2) {
            let m = w[0].min(w[1]);
            if m >= 0.95 {
                at_risk += 1;
                if m < 1.05 {
                    merged += 1;
                }
            }
        }
        Ok(Lineage {
            picked,
            above,
            gaps,
            pairs: (at_risk, merged),
        })
    })?;
    let picked: Vec<f64> = rows.iter().map(|r| r.picked).collect();
    let d = ks_statistic(&picked, |x| ReferenceLaw::ExcursionHeight.cdf(x))?;
    tests.push(ks_record(
        "depth at a uniform lineage, n=1000, vs (1+s)^-2",
        d,
        tol.local_depth_ks,
        reps,
        seed,
    ));
    let total_marks = reps as f64 * (n - 1) as f64;
    let g = rows.iter().map(|r| r.above).sum::<u64>() as f64 / total_marks;
    tests.push(
        TestRecord::new(
            "G(1): fraction of lineages present at depth 1",
            StatisticKind::Moment,
            g,
            Criterion::Within {
                target: 0.5,
                tolerance: tol.lineage_density,
            },
        )
        .replicates(reps, seed),
    );
    let (span, count) = rows
        .iter()
        .fold((0u64, 0u64), |acc, r| (acc.0 + r.gaps.0, acc.1 + r.gaps.1));
    tests.push(
        TestRecord::new(
            "mean size of a lineage at depth 1",
            StatisticKind::Moment,
            span as f64 / count as f64,
            Criterion::Within {
                target: 2.0,
                tolerance: tol.lineage_size,
            },
        )
        .replicates(reps, seed),
    );
    let (risk, merged) = rows
        .iter()
        .fold((0u64, 0u64), |acc, r| (acc.0 + r.pairs.0, acc.1 + r.pairs.1));
    let rate = -(1.0 - merged as f64 / risk as f64).ln() / 0.1;
    tests.push(
        TestRecord::new(
            "m(1): merge hazard of two neighbouring lineages on [0.95, 1.05)",
            StatisticKind::Moment,
            rate,
            Criterion::Within {
                target: 1.0,
                tolerance: tol.merge_rate,
            },
        )
        .replicates(reps, seed),
    );

    let config = LocalWindowConfig::new(1, 1.5, 40.0)?;
    let (reps, seed) = (ctx.reps(100_000), ctx.sub_seed(1));
    let local = ctx.run(reps, seed, |_, s| {
        let tree = sample_local_complete_tree(&config, Centering::ExtantSpecies, s);
        let spine = tree.spine();
        let parent = spine[0].censored;
        let any = spine.iter().any(|a| a.censored);
        let reach = tree.reaches_window_end();
        let (mut born, mut surviving) = (0u64, 0u64);
        for (sp, &r) in tree.species.iter().zip(&reach) {
            if sp.role == Role::Other && (-1.1..=-0.9).contains(&sp.birth) {
                born += 1;
                surviving += r as u64;
            }
        }
        Ok((parent, any, born, surviving))
    })?;
    let frac = |f: &dyn Fn(&(bool, bool, u64, u64)) -> bool| {
        local.iter().filter(|r| f(r)).count() as f64 / reps as f64
    };
    let within = |target: f64| Criterion::Within {
        target,
        tolerance: tol.local_probability,
    };
    tests.push(
        TestRecord::new(
            "P(parent of an extant species is extant)",
            StatisticKind::Moment,
            frac(&|r| r.0),
            within(0.5),
        )
        .replicates(reps, seed),
    );
    tests.push(
        TestRecord::new(
            "P(some ancestor of an extant species is extant)",
            StatisticKind::Moment,
            frac(&|r| r.1),
            within(1.0 - (-1.0f64).exp()),
        )
        .replicates(reps, seed),
    );
    let born: u64 = local.iter().map(|r| r.2).sum();
    let surviving: u64 = local.iter().map(|r| r.3).sum();
    tests.push(
        TestRecord::new(
            "P(species born 1 before present has an extant descendant)",
            StatisticKind::Moment,
            surviving as f64 / born as f64,
            within(0.5),
        )
        .replicates(reps, seed)
        .note(format!("{born} species born in [0.9, 1.1] before present")),
    );
    Ok(tests)
}

fn newick_error(a: &CompleteTree, b: &CompleteTree) -> f64 {
    if a.len() != b.len() {
        return f64::INFINITY;
    }
    let mut err = (a.origin() - b.origin()).abs();
    for (x, y) in a.species().iter().zip(b.species()) {
        if x.parent != y.parent || x.extant != y.extant {
            return f64::INFINITY;
        }
        err = err.max((x.birth - y.birth).abs()).max((x.death - y.death).abs());
    }
    err
}

/// Round trips and determinism.
fn structural(ctx: &Ctx) -> Tests {
    let tol = *ctx.tol();
    let mut tests = Vec::new();
    let (reps, seed) = (ctx.reps(10_000), ctx.sub_seed(0));
    let random_tree = |s: &mut RandomStream| {
        let n = sample_uniform_index(8, s) as usize;
        let t = 0.1 + 9.9 * s.uniform();
        sample_complete_tree(n, Some(t), s)
    };
    let failures = ctx.run(reps, seed, |_, s| {
        let tree = random_tree(s)?;
        let back = contour_to_tree(&tree_to_contour(&tree), tree.origin())?;
        Ok((back != tree) as u64)
    })?;
    tests.push(
        TestRecord::new(
            "tree -> contour -> tree is exact",
            StatisticKind::Violations,
            failures.iter().sum::<u64>() as f64,
            below(1.0),
        )
        .replicates(reps, seed),
    );

    let (reps, seed) = (ctx.reps(1000), ctx.sub_seed(1));
    let errors = ctx.run(reps, seed, |_, s| {
        let tree = random_tree(s)?;
        let doc = export_newick(&tree, &NewickOptions::default());
        let complete = match import_newick(doc.as_str(), None, 1.0) {
            Ok(ImportedTree::Complete(back)) => newick_error(&tree, &back),
            _ => f64::INFINITY,
        };
        let lineage = if tree.extant_count() >= 2 {
            let marks = extract_lineage_tree(&tree)?;
            let doc = export_lineage(&marks, tree.origin(), 1.0);
            match import_newick(doc.as_str(), Some(NewickMode::LineageOnly), 1.0) {
                Ok(ImportedTree::Lineage { origin, marks: back }) if back.n() == marks.n() => back
                    .depths()
                    .iter()
                    .zip(marks.depths())
                    .fold((origin - tree.origin()).abs(), |e, (a, b)| e.max((a - b).abs())),
                _ => f64::INFINITY,
            }
        } else {
            0.0
        };
        Ok(complete.max(lineage))
    })?;
    tests.push(
        TestRecord::new(
            "Newick round trip, largest time error",
            StatisticKind::Moment,
            errors.iter().copied().fold(0.0, f64::max),
            below(tol.newick_round_trip),
        )
        .replicates(reps, seed),
    );

    // byte-for-byte determinism of replicate output
    let spec = SamplerSpec { n: 4, t: None };
    let (reps, seed) = (ctx.reps(500), ctx.sub_seed(2));
    let csv = |execution: Execution| -> Result<String, SuiteError> {
        let reports = run_replicates(spec, reps, seed, execution)?;
        let records: Vec<ReportRecord> = reports.iter().map(|r| ReportRecord::from_report(r, 1.0)).collect();
        Ok(reports_to_csv(&records))
    };
    let first = csv(Execution::Parallel)?;
    let mismatches = [csv(Execution::Parallel)?, csv(Execution::Serial)?]
        .iter()
        .filter(|other| **other != first)
        .count();
    let trees_a: Vec<String> = ctx.run(100, seed, |_, s| {
        Ok(export_newick(&sample_complete_tree(3, Some(2.0), s)?, &NewickOptions::default()).into_string())
    })?;
    let trees_b: Vec<String> = ctx.run(100, seed, |_, s| {
        Ok(export_newick(&sample_complete_tree(3, Some(2.0), s)?, &NewickOptions::default()).into_string())
    })?;
    tests.push(
        TestRecord::new(
            "identical output for a fixed seed (parallel, serial, repeated)",
            StatisticKind::Violations,
            (mismatches + (trees_a != trees_b) as usize) as f64,
            below(1.0),
        )
        .replicates(reps, seed),
    );
    Ok(tests)
}
