//! Reference laws: exact finite-`n` distributions and their `n → ∞` limits.

use alloc::format;
use alloc::string::String;

use libm::{erfc, exp, lgamma, log, sqrt};

use crate::dist::{divergence_depth_cdf, divergence_depth_survival, origin_time_cdf, origin_time_pdf};
use crate::quad::{integrate, integrate_to_infinity};
use crate::rng::RandomStream;

/// Whether a law holds exactly at finite `n` or only in the limit.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LawKind {
    ExactFiniteN,
    Asymptotic,
}

/// A one-dimensional reference distribution.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ReferenceLaw {
    /// `1/ξ` for a unit exponential `ξ`: CDF `e^{-1/t}`.
    InverseExponential,
    /// Posterior of the origin time given `n` extant species.
    OriginTime { n: usize },
    /// Limit of the rescaled MRCA time: density `s^{-3} e^{-1/s}`.
    MrcaLimit,
    /// MRCA time at finite `n`, mixed over the origin time.
    MrcaExact { n: usize },
    /// Limit of the rescaled MRCA species count: density `2(1+r)^{-3}`.
    NmrcaLimit,
    /// `scale` times the first passage time of Brownian motion to level 1.
    FirstPassage { scale: f64 },
    /// Divergence depth given origin `t`.
    DivergenceDepth { t: f64 },
    /// Maximum height of an excursion: `P(H > h) = 1/(1+h)`.
    ExcursionHeight,
    /// Exponential with the given rate.
    Exponential { rate: f64 },
}

impl ReferenceLaw {
    pub fn name(&self) -> String {
        match *self {
            ReferenceLaw::InverseExponential => "inverse-exponential".into(),
            ReferenceLaw::OriginTime { n } => format!("origin-time(n={n})"),
            ReferenceLaw::MrcaLimit => "mrca-limit".into(),
            ReferenceLaw::MrcaExact { n } => format!("mrca-exact(n={n})"),
            ReferenceLaw::NmrcaLimit => "nmrca-limit".into(),
            ReferenceLaw::FirstPassage { scale } => format!("first-passage(scale={scale})"),
            ReferenceLaw::DivergenceDepth { t } => format!("divergence-depth(t={t})"),
            ReferenceLaw::ExcursionHeight => "excursion-height".into(),
            ReferenceLaw::Exponential { rate } => format!("exponential(rate={rate})"),
        }
    }

    pub fn kind(&self) -> LawKind {
        match self {
            ReferenceLaw::InverseExponential
            | ReferenceLaw::MrcaLimit
            | ReferenceLaw::NmrcaLimit
            | ReferenceLaw::FirstPassage { .. } => LawKind::Asymptotic,
            _ => LawKind::ExactFiniteN,
        }
    }

    /// Closed support interval.
    pub fn support(&self) -> (f64, f64) {
        match *self {
            ReferenceLaw::DivergenceDepth { t } => (0.0, t),
            _ => (0.0, f64::INFINITY),
        }
    }

    pub fn cdf(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 0.0;
        }
        if x == f64::INFINITY {
            return 1.0;
        }
        match *self {
            ReferenceLaw::InverseExponential => exp(-1.0 / x),
            ReferenceLaw::OriginTime { n } => origin_time_cdf(n, x),
            ReferenceLaw::MrcaLimit => (1.0 + 1.0 / x) * exp(-1.0 / x),
            ReferenceLaw::MrcaExact { n } => mrca_exact_cdf_at(n, x),
            ReferenceLaw::NmrcaLimit => 1.0 - 1.0 / ((1.0 + x) * (1.0 + x)),
            ReferenceLaw::FirstPassage { scale } => erfc(1.0 / sqrt(2.0 * x / scale)),
            ReferenceLaw::DivergenceDepth { t } => divergence_depth_cdf(t, x),
            ReferenceLaw::ExcursionHeight => x / (1.0 + x),
            ReferenceLaw::Exponential { rate } => -libm::expm1(-rate * x),
        }
    }

    pub fn pdf(&self, x: f64) -> Option<f64> {
        if x <= 0.0 {
            return match self {
                ReferenceLaw::MrcaExact { .. } => None,
                _ => Some(0.0),
            };
        }
        let v = match *self {
            ReferenceLaw::InverseExponential => exp(-1.0 / x) / (x * x),
            ReferenceLaw::OriginTime { n } => origin_time_pdf(n, x),
            ReferenceLaw::MrcaLimit => exp(-1.0 / x) / (x * x * x),
            ReferenceLaw::MrcaExact { .. } => return None,
            ReferenceLaw::NmrcaLimit => 2.0 / ((1.0 + x) * (1.0 + x) * (1.0 + x)),
            ReferenceLaw::FirstPassage { scale } => {
                let y = x / scale;
                exp(-1.0 / (2.0 * y)) / sqrt(2.0 * core::f64::consts::PI * y * y * y) / scale
            }
            ReferenceLaw::DivergenceDepth { t } => crate::dist::divergence_depth_pdf(t, x),
            ReferenceLaw::ExcursionHeight => 1.0 / ((1.0 + x) * (1.0 + x)),
            ReferenceLaw::Exponential { rate } => rate * exp(-rate * x),
        };
        Some(v)
    }
}

pub fn ie1_law() -> ReferenceLaw {
    ReferenceLaw::InverseExponential
}

pub fn origin_time_exact_cdf(n: usize) -> ReferenceLaw {
    ReferenceLaw::OriginTime { n }
}

pub fn mrca_limit_law() -> ReferenceLaw {
    ReferenceLaw::MrcaLimit
}

pub fn mrca_exact_cdf(n: usize) -> ReferenceLaw {
    ReferenceLaw::MrcaExact { n }
}

pub fn nmrca_limit_law() -> ReferenceLaw {
    ReferenceLaw::NmrcaLimit
}

pub fn first_passage_law() -> ReferenceLaw {
    ReferenceLaw::FirstPassage { scale: 1.0 }
}

/// Absolute tolerance used by every quadrature in this module.
pub const QUADRATURE_TOLERANCE: f64 = 1e-8;

/// `P(T_mrca ≤ u) = ∫ (1 - F̄_t(u))^{n-1} q_n(t) dt`.
///
/// For `t ≤ u` every depth lies below `u`, which contributes `P(T_or ≤ u)`
/// in closed form; the rest is integrated numerically.
fn mrca_exact_cdf_at(n: usize, u: f64) -> f64 {
    if n < 2 {
        return 1.0;
    }
    let head = origin_time_cdf(n, u);
    let tail = integrate_to_infinity(
        |t| {
            let p = 1.0 - divergence_depth_survival(t, u);
            libm::pow(p, (n - 1) as f64) * origin_time_pdf(n, t)
        },
        u,
        QUADRATURE_TOLERANCE,
    );
    (head + tail).min(1.0)
}

/// Limit CDF `e^{1/t - 1/s}` of the rescaled MRCA time given origin `t`.
pub fn mrca_conditional_cdf(t: f64, s: f64) -> f64 {
    if s <= 0.0 {
        0.0
    } else if s >= t {
        1.0
    } else {
        exp(1.0 / t - 1.0 / s)
    }
}

/// Joint limit density `t^{-2} s^{-2} e^{-1/s}` of the rescaled origin and
/// MRCA times on `0 < s < t`.
pub fn origin_mrca_joint_pdf(t: f64, s: f64) -> f64 {
    if !(s > 0.0 && s < t) {
        return 0.0;
    }
    exp(-1.0 / s) / (t * t * s * s)
}

/// `λ(t, s) = 1/(t - s) + 1/s`, the limit of `n p_n`.
pub fn lambda_ts(t: f64, s: f64) -> f64 {
    1.0 / (t - s) + 1.0 / s
}

/// Joint limit density of rescaled origin time, MRCA time and MRCA count.
pub fn triple_joint_pdf(t: f64, s: f64, r: f64) -> f64 {
    if !(s > 0.0 && s < t && r > 0.0) {
        return 0.0;
    }
    let d = t - s;
    r * exp(-1.0 / s - t * r / (s * d)) / (d * d * s * s * s * s)
}

/// Geometric parameter `1 - ((t-s)/(1+t-s)) (s/(1+s))` of the MRCA count.
pub fn geometric_pn(t: f64, s: f64) -> f64 {
    1.0 - ((t - s) / (1.0 + t - s)) * (s / (1.0 + s))
}

/// Lineage density, merge rate and branching rate of the local limit.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LocalRates {
    /// Density of ancestral lineages at depth `s`.
    pub density: f64,
    /// Rate at which a given lineage merges with a neighbour.
    pub merge_rate: f64,
    /// Rate at which a lineage subtending `k` tips splits.
    pub branch_rate: f64,
}

pub fn local_rates(s: f64, k: u64) -> LocalRates {
    LocalRates {
        density: 1.0 / (1.0 + s),
        merge_rate: 2.0 / (1.0 + s),
        branch_rate: k.saturating_sub(1) as f64 / (s * (1.0 + s)),
    }
}

/// Size of the left part when a lineage subtending `k ≥ 2` tips splits.
pub fn sample_left_subclade_size(k: u64, stream: &mut RandomStream) -> u64 {
    crate::dist::sample_uniform_index(k - 1, stream)
}

/// `P(D = d)` for the hitting time of 0 by a simple symmetric random walk
/// started at `n`: `(n/d) C(d, (d-n)/2) 2^{-d}`.
pub fn hitting_time_pmf(n: u64, d: u64) -> f64 {
    if d < n || (d - n) % 2 == 1 || n == 0 {
        return if n == 0 && d == 0 { 1.0 } else { 0.0 };
    }
    let k = (d - n) / 2;
    let ln_binom = lgamma(d as f64 + 1.0) - lgamma(k as f64 + 1.0) - lgamma((d - k) as f64 + 1.0);
    exp(log(n as f64 / d as f64) + ln_binom - d as f64 * core::f64::consts::LN_2)
}

/// Integrates a law's density over its support (a normalisation check).
pub fn pdf_mass(law: &ReferenceLaw) -> Option<f64> {
    law.pdf(1.0)?;
    let (lo, hi) = law.support();
    let f = |x: f64| law.pdf(x).unwrap_or(0.0);
    Some(if hi.is_finite() {
        integrate(f, lo, hi, 1e-11)
    } else {
        integrate_to_infinity(f, lo, 1e-11)
    })
}
