//! Kolmogorov-Smirnov and Pearson chi-square goodness-of-fit tests.

use alloc::vec::Vec;

use libm::{exp, lgamma, log, sqrt};

use crate::error::{Error, Result};
use crate::laws::{LawKind, ReferenceLaw};

/// Significance level used for default thresholds.
pub const DEFAULT_ALPHA: f64 = 1e-3;

/// Inflation of KS thresholds against limit laws, absorbing finite-`n` bias.
pub const ASYMPTOTIC_INFLATION: f64 = 1.5;

/// Smallest sample accepted by [`ks_test`].
pub const MIN_KS_SAMPLES: usize = 100;

/// One-sample KS distance of `samples` from a continuous CDF.
pub fn ks_statistic<F: Fn(f64) -> f64>(samples: &[f64], cdf: F) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::EmptySample);
    }
    let mut xs = samples.to_vec();
    xs.sort_unstable_by(f64::total_cmp);
    let m = xs.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &x) in xs.iter().enumerate() {
        let f = cdf(x);
        d = d.max(f - i as f64 / m).max((i + 1) as f64 / m - f);
    }
    Ok(d)
}

/// One-sample KS distance of integer samples from a discrete CDF
/// `cdf(k) = P(X ≤ k)`.
///
/// Both step functions only jump at integers, so the supremum is attained
/// either at an observed value or just below the next one.
pub fn ks_statistic_discrete<F: Fn(u64) -> f64>(samples: &[u64], cdf: F) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::EmptySample);
    }
    let mut xs = samples.to_vec();
    xs.sort_unstable();
    let m = xs.len() as f64;
    let mut d: f64 = 0.0;
    if xs[0] > 0 {
        d = cdf(xs[0] - 1);
    }
    let mut i = 0;
    while i < xs.len() {
        let v = xs[i];
        while i < xs.len() && xs[i] == v {
            i += 1;
        }
        let emp = i as f64 / m;
        d = d.max((emp - cdf(v)).abs());
        if i < xs.len() && xs[i] > v + 1 {
            d = d.max((emp - cdf(xs[i] - 1)).abs());
        }
    }
    Ok(d)
}

/// Two-sample KS distance; ties (discrete data) are handled exactly.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::EmptySample);
    }
    let mut xa = a.to_vec();
    let mut xb = b.to_vec();
    xa.sort_unstable_by(f64::total_cmp);
    xb.sort_unstable_by(f64::total_cmp);
    let (ma, mb) = (xa.len() as f64, xb.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut d: f64 = 0.0;
    while i < xa.len() && j < xb.len() {
        let x = xa[i].min(xb[j]);
        while i < xa.len() && xa[i] == x {
            i += 1;
        }
        while j < xb.len() && xb[j] == x {
            j += 1;
        }
        d = d.max((i as f64 / ma - j as f64 / mb).abs());
    }
    Ok(d)
}

/// `P(K > λ)` for the limiting Kolmogorov distribution.
pub fn kolmogorov_survival(lambda: f64) -> f64 {
    if lambda <= 0.0 {
        return 1.0;
    }
    if lambda < 0.3 {
        // the alternating series converges slowly here; the value is 1
        // to well beyond double precision for λ < 0.3
        return 1.0;
    }
    let mut sum = 0.0;
    for k in 1..=100 {
        let k = k as f64;
        let term = exp(-2.0 * k * k * lambda * lambda);
        sum += if k as u64 % 2 == 1 { term } else { -term };
        if term < 1e-17 {
            break;
        }
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

/// The `λ` with `P(K > λ) = alpha`.
pub fn kolmogorov_quantile(alpha: f64) -> f64 {
    let (mut lo, mut hi) = (0.3, 10.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if kolmogorov_survival(mid) > alpha {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Default KS threshold for `m` samples at level `alpha`, inflated for
/// limit laws.
pub fn ks_threshold(m: usize, alpha: f64, kind: LawKind) -> f64 {
    let base = kolmogorov_quantile(alpha) / sqrt(m as f64);
    match kind {
        LawKind::ExactFiniteN => base,
        LawKind::Asymptotic => ASYMPTOTIC_INFLATION * base,
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KsOutcome {
    pub statistic: f64,
    pub threshold: f64,
    pub samples: usize,
    pub passed: bool,
}

/// One-sample KS test against a reference law. Without an explicit
/// threshold the level-`1e-3` Kolmogorov bound is used.
pub fn ks_test(samples: &[f64], law: &ReferenceLaw, threshold: Option<f64>) -> Result<KsOutcome> {
    if samples.is_empty() {
        return Err(Error::EmptySample);
    }
    if samples.len() < MIN_KS_SAMPLES {
        return Err(Error::TooFewSamples {
            required: MIN_KS_SAMPLES,
            found: samples.len(),
        });
    }
    let statistic = ks_statistic(samples, |x| law.cdf(x))?;
    let threshold =
        threshold.unwrap_or_else(|| ks_threshold(samples.len(), DEFAULT_ALPHA, law.kind()));
    Ok(KsOutcome {
        statistic,
        threshold,
        samples: samples.len(),
        passed: statistic < threshold,
    })
}

/// Regularized upper incomplete gamma function `Q(a, x)`.
pub fn gamma_q(a: f64, x: f64) -> f64 {
    if x <= 0.0 {
        return 1.0;
    }
    let ln_prefix = a * log(x) - x - lgamma(a);
    if x < a + 1.0 {
        // series for P(a, x)
        let mut term = 1.0 / a;
        let mut sum = term;
        let mut ap = a;
        for _ in 0..10_000 {
            ap += 1.0;
            term *= x / ap;
            sum += term;
            if term.abs() < sum.abs() * 1e-16 {
                break;
            }
        }
        (1.0 - sum * exp(ln_prefix)).clamp(0.0, 1.0)
    } else {
        // Lentz continued fraction for Q(a, x)
        let tiny = 1e-300;
        let mut b = x + 1.0 - a;
        let mut c = 1.0 / tiny;
        let mut d = 1.0 / b;
        let mut h = d;
        for i in 1..10_000 {
            let an = -(i as f64) * (i as f64 - a);
            b += 2.0;
            d = an * d + b;
            if d.abs() < tiny {
                d = tiny;
            }
            c = b + an / c;
            if c.abs() < tiny {
                c = tiny;
            }
            d = 1.0 / d;
            let delta = d * c;
            h *= delta;
            if (delta - 1.0).abs() < 1e-16 {
                break;
            }
        }
        (exp(ln_prefix) * h).clamp(0.0, 1.0)
    }
}

/// Upper tail of the chi-square distribution with `df` degrees of freedom.
pub fn chi_square_sf(x: f64, df: f64) -> f64 {
    gamma_q(0.5 * df, 0.5 * x)
}

/// Minimum expected count per cell.
pub const MIN_EXPECTED: f64 = 5.0;

/// Merges adjacent cells, left to right, until every expected count is at
/// least [`MIN_EXPECTED`]. A sparse remainder joins the last full cell.
pub fn merge_cells(observed: &[f64], expected: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let mut obs = Vec::new();
    let mut exp = Vec::new();
    let (mut o, mut e) = (0.0, 0.0);
    for (&oi, &ei) in observed.iter().zip(expected) {
        o += oi;
        e += ei;
        if e >= MIN_EXPECTED {
            obs.push(o);
            exp.push(e);
            o = 0.0;
            e = 0.0;
        }
    }
    if e > 0.0 || o > 0.0 {
        if let (Some(lo), Some(le)) = (obs.last_mut(), exp.last_mut()) {
            *lo += o;
            *le += e;
        } else {
            obs.push(o);
            exp.push(e);
        }
    }
    (obs, exp)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ChiSquareOutcome {
    pub statistic: f64,
    pub df: usize,
    pub cells: usize,
    pub p_value: f64,
    pub passed: bool,
}

fn outcome(statistic: f64, cells: usize, df: usize, alpha: f64) -> Result<ChiSquareOutcome> {
    if df == 0 {
        return Err(Error::DegenerateBinning { cells });
    }
    let p_value = chi_square_sf(statistic, df as f64);
    Ok(ChiSquareOutcome {
        statistic,
        df,
        cells,
        p_value,
        passed: p_value > alpha,
    })
}

/// Pearson statistic and cell count after merging sparse cells.
pub fn pearson(observed: &[f64], expected: &[f64]) -> (f64, usize) {
    let (obs, exp) = merge_cells(observed, expected);
    let stat = obs
        .iter()
        .zip(&exp)
        .map(|(o, e)| (o - e) * (o - e) / e)
        .sum();
    (stat, obs.len())
}

/// Goodness of fit of counts to a fully specified law. `expected` holds
/// expected counts with the same total as `observed`; cells beyond the last
/// one should be folded into it by the caller.
pub fn chi_square_test(observed: &[u64], expected: &[f64], alpha: f64) -> Result<ChiSquareOutcome> {
    if observed.iter().all(|&o| o == 0) {
        return Err(Error::EmptySample);
    }
    let obs: Vec<f64> = observed.iter().map(|&o| o as f64).collect();
    let (stat, cells) = pearson(&obs, expected);
    if cells < 2 {
        return Err(Error::DegenerateBinning { cells });
    }
    outcome(stat, cells, cells - 1, alpha)
}

/// Sums independent Pearson statistics over groups, each group having its
/// own fixed total. Degrees of freedom are `cells - 1` per group.
pub fn chi_square_grouped(groups: &[(Vec<f64>, Vec<f64>)], alpha: f64) -> Result<ChiSquareOutcome> {
    let (mut stat, mut cells, mut df) = (0.0, 0, 0);
    for (obs, exp) in groups {
        let (s, c) = pearson(obs, exp);
        stat += s;
        cells += c;
        df += c.saturating_sub(1);
    }
    outcome(stat, cells, df, alpha)
}

/// Two-sample test of homogeneity on a common binning.
pub fn chi_square_homogeneity(a: &[u64], b: &[u64], alpha: f64) -> Result<ChiSquareOutcome> {
    let (na, nb) = (a.iter().sum::<u64>() as f64, b.iter().sum::<u64>() as f64);
    if na == 0.0 || nb == 0.0 {
        return Err(Error::EmptySample);
    }
    // merge on the pooled expected counts of the smaller sample
    let pooled: Vec<f64> = a.iter().zip(b).map(|(&x, &y)| (x + y) as f64).collect();
    let scale = na.min(nb) / (na + nb);
    let mut cells: Vec<(f64, f64)> = Vec::new();
    let (mut ca, mut cb, mut cp) = (0.0, 0.0, 0.0);
    for ((&x, &y), &p) in a.iter().zip(b).zip(&pooled) {
        ca += x as f64;
        cb += y as f64;
        cp += p;
        if cp * scale >= MIN_EXPECTED {
            cells.push((ca, cb));
            ca = 0.0;
            cb = 0.0;
            cp = 0.0;
        }
    }
    if cp > 0.0 {
        match cells.last_mut() {
            Some(last) => {
                last.0 += ca;
                last.1 += cb;
            }
            None => cells.push((ca, cb)),
        }
    }
    let total = na + nb;
    let mut stat = 0.0;
    for &(x, y) in &cells {
        let col = x + y;
        let ea = col * na / total;
        let eb = col * nb / total;
        stat += (x - ea) * (x - ea) / ea + (y - eb) * (y - eb) / eb;
    }
    let k = cells.len();
    if k < 2 {
        return Err(Error::DegenerateBinning { cells: k });
    }
    outcome(stat, k, k - 1, alpha)
}

/// An observation known only to lie in `[lo, hi]`; `hi` may be infinite.
///
/// Right-censored replicates (stopped once a size budget was spent) enter a
/// test as `at_least`, and exactly observed values as `exact`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bracket {
    pub lo: f64,
    pub hi: f64,
}

impl Bracket {
    pub fn exact(x: f64) -> Self {
        Self { lo: x, hi: x }
    }

    pub fn at_least(x: f64) -> Self {
        Self {
            lo: x,
            hi: f64::INFINITY,
        }
    }

    pub fn between(lo: f64, hi: f64) -> Self {
        debug_assert!(lo <= hi);
        Self { lo, hi }
    }

    pub fn is_exact(&self) -> bool {
        self.lo == self.hi
    }
}

/// Range of KS distances consistent with a partly censored sample.
///
/// `lower` is attained by some completion of the brackets and `upper` bounds
/// every completion, so a test passes only when `upper` is below its
/// threshold. Without censoring both equal the ordinary statistic.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KsBounds {
    pub lower: f64,
    pub upper: f64,
}

struct Envelope {
    lo: Vec<f64>,
    hi: Vec<f64>,
    m: f64,
}

impl Envelope {
    fn new(obs: &[Bracket]) -> Result<Self> {
        if obs.is_empty() {
            return Err(Error::EmptySample);
        }
        let mut lo: Vec<f64> = obs.iter().map(|b| b.lo).collect();
        let mut hi: Vec<f64> = obs.iter().map(|b| b.hi).collect();
        lo.sort_unstable_by(f64::total_cmp);
        hi.sort_unstable_by(f64::total_cmp);
        Ok(Self {
            lo,
            hi,
            m: obs.len() as f64,
        })
    }

    /// Fraction certainly at most `x`.
    fn below(&self, x: f64) -> f64 {
        self.hi.partition_point(|&v| v <= x) as f64 / self.m
    }

    /// Fraction possibly at most `x`.
    fn possibly(&self, x: f64) -> f64 {
        self.lo.partition_point(|&v| v <= x) as f64 / self.m
    }

    fn strictly_below(&self, x: f64) -> f64 {
        self.hi.partition_point(|&v| v < x) as f64 / self.m
    }

    fn possibly_strictly(&self, x: f64) -> f64 {
        self.lo.partition_point(|&v| v < x) as f64 / self.m
    }

    fn knots(&self) -> impl Iterator<Item = f64> + '_ {
        self.lo.iter().chain(self.hi.iter()).copied().filter(|x| x.is_finite())
    }
}

fn envelope_bounds<F, G>(env: &Envelope, cdf: F, cdf_left: G) -> KsBounds
where
    F: Fn(f64) -> f64,
    G: Fn(f64) -> f64,
{
    // the empirical CDF lies between `below` and `possibly`; both are step
    // functions with jumps at the knots, so the extreme gaps sit at a knot
    // or just to its left
    let mut lower: f64 = 0.0;
    let mut upper: f64 = 1.0 - env.below(f64::MAX);
    for x in env.knots() {
        let (f, fl) = (cdf(x), cdf_left(x));
        upper = upper.max(env.possibly(x) - f).max(fl - env.strictly_below(x));
        lower = lower.max(env.below(x) - f).max(fl - env.possibly_strictly(x));
    }
    KsBounds { lower, upper }
}

/// KS bounds against a continuous CDF for a bracketed sample.
pub fn ks_bounds<F: Fn(f64) -> f64>(obs: &[Bracket], cdf: F) -> Result<KsBounds> {
    let env = Envelope::new(obs)?;
    Ok(envelope_bounds(&env, &cdf, &cdf))
}

/// KS bounds against a CDF on the non-negative integers; bracket ends must
/// be integers (or infinite).
pub fn ks_bounds_discrete<F: Fn(u64) -> f64>(obs: &[Bracket], cdf: F) -> Result<KsBounds> {
    let env = Envelope::new(obs)?;
    let at = |x: f64| if x < 0.0 { 0.0 } else { cdf(x as u64) };
    Ok(envelope_bounds(&env, at, |x| at(x - 1.0)))
}

/// Two-sample KS bounds for bracketed samples.
pub fn ks_two_sample_bounds(a: &[Bracket], b: &[Bracket]) -> Result<KsBounds> {
    let (ea, eb) = (Envelope::new(a)?, Envelope::new(b)?);
    let mut lower: f64 = 0.0;
    let mut upper: f64 = (1.0 - ea.below(f64::MAX)).max(1.0 - eb.below(f64::MAX));
    for x in ea.knots().chain(eb.knots()) {
        let (la, ua, lb, ub) = (ea.below(x), ea.possibly(x), eb.below(x), eb.possibly(x));
        upper = upper.max(ua - lb).max(ub - la);
        lower = lower.max(la - ub).max(lb - ua);
    }
    Ok(KsBounds { lower, upper })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kolmogorov_quantiles() {
        assert!((kolmogorov_quantile(0.05) - 1.3581).abs() < 1e-3);
        assert!((kolmogorov_quantile(1e-3) - 1.9495).abs() < 1e-3);
    }

    #[test]
    fn chi_square_survival_values() {
        // chi-square with 2 df has survival e^{-x/2}
        assert!((chi_square_sf(3.0, 2.0) - (-1.5f64).exp()).abs() < 1e-12);
        // 1 df at the 5% point
        assert!((chi_square_sf(3.841_458_820_694_124, 1.0) - 0.05).abs() < 1e-9);
        // large df uses the continued fraction branch
        assert!((chi_square_sf(124.342, 100.0) - 0.05).abs() < 1e-4);
    }

    #[test]
    fn merging_sparse_cells() {
        let (o, e) = merge_cells(&[1.0, 2.0, 10.0, 1.0, 1.0], &[2.0, 3.0, 9.0, 1.0, 0.5]);
        assert_eq!(e, alloc::vec![5.0, 10.5]);
        assert_eq!(o, alloc::vec![3.0, 12.0]);
    }

    #[test]
    fn degenerate_binning_is_rejected() {
        assert!(matches!(
            chi_square_test(&[3, 1], &[2.0, 2.0], 1e-3),
            Err(Error::DegenerateBinning { .. })
        ));
    }

    #[test]
    fn ks_basics() {
        assert!(ks_statistic(&[], |x| x).is_err());
        let xs: Vec<f64> = (0..1000).map(|i| (i as f64 + 0.5) / 1000.0).collect();
        assert!(ks_statistic(&xs, |x| x).unwrap() <= 0.0005 + 1e-12);
        assert!(ks_two_sample(&[1.0, 2.0], &[1.0, 2.0]).unwrap() == 0.0);
        assert!((ks_two_sample(&[1.0, 1.0], &[2.0, 2.0]).unwrap() - 1.0).abs() < 1e-15);
        let d = ks_statistic_discrete(&[0, 0, 1, 1], |k| if k == 0 { 0.5 } else { 1.0 }).unwrap();
        assert_eq!(d, 0.0);
        let d = ks_statistic_discrete(&[2, 2], |k| [0.25, 0.5, 1.0][k.min(2) as usize]).unwrap();
        assert_eq!(d, 0.5);
    }

    #[test]
    fn bounds_without_censoring_match_the_statistic() {
        let xs = [0.1, 0.35, 0.4, 0.8, 0.81];
        let obs: Vec<Bracket> = xs.iter().map(|&x| Bracket::exact(x)).collect();
        let b = ks_bounds(&obs, |x| x).unwrap();
        let d = ks_statistic(&xs, |x| x).unwrap();
        assert!((b.lower - d).abs() < 1e-15 && (b.upper - d).abs() < 1e-15);

        let ks = [0u64, 1, 1, 3, 5];
        let cdf = |k: u64| 1.0 - 0.5f64.powi(k as i32 + 1);
        let obs: Vec<Bracket> = ks.iter().map(|&k| Bracket::exact(k as f64)).collect();
        let b = ks_bounds_discrete(&obs, cdf).unwrap();
        let d = ks_statistic_discrete(&ks, cdf).unwrap();
        assert!((b.lower - d).abs() < 1e-15 && (b.upper - d).abs() < 1e-15);

        let ys = [0.2, 0.35, 0.9];
        let oy: Vec<Bracket> = ys.iter().map(|&y| Bracket::exact(y)).collect();
        let ox: Vec<Bracket> = xs.iter().map(|&x| Bracket::exact(x)).collect();
        let b = ks_two_sample_bounds(&ox, &oy).unwrap();
        let d = ks_two_sample(&xs, &ys).unwrap();
        assert!((b.lower - d).abs() < 1e-15 && (b.upper - d).abs() < 1e-15);
    }

    #[test]
    fn censoring_widens_the_bounds() {
        // uniform grid with its top decile censored at 0.9
        let obs: Vec<Bracket> = (0..1000)
            .map(|i| (i as f64 + 0.5) / 1000.0)
            .map(|x| if x > 0.9 { Bracket::at_least(0.9) } else { Bracket::exact(x) })
            .collect();
        let b = ks_bounds(&obs, |x| x.clamp(0.0, 1.0)).unwrap();
        assert!(b.lower <= 0.0005 + 1e-12);
        assert!((b.upper - 0.1).abs() < 1e-3);
        // a missing value can sit anywhere
        let obs = [Bracket::exact(0.5), Bracket::between(0.0, f64::INFINITY)];
        let b = ks_bounds(&obs, |x| x.clamp(0.0, 1.0)).unwrap();
        assert!(b.lower <= b.upper && b.upper >= 0.5);
    }
}
