//! Elementary laws of the critical birth-death model.
//!
//! Every sampler is an inverse-CDF transform of one uniform from a
//! [`RandomStream`], and each has a matching closed-form CDF so that the
//! round trip `cdf(sample(u)) == u` can be checked directly. All times are in
//! units where the per-species birth and death rates equal 1; other rate
//! scales are handled by [`ModelParams`] at the input/output boundary.

use crate::error::{positive, Error, Result};
use crate::rng::RandomStream;
use libm::{expm1, log, log1p, pow};

/// Number of extant species together with the time unit used for I/O.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ModelParams {
    n: usize,
    rate_scale: f64,
}

impl ModelParams {
    pub fn new(n: usize, rate_scale: f64) -> Result<Self> {
        if n == 0 {
            return Err(Error::TooFewExtant {
                required: 1,
                found: 0,
            });
        }
        positive("rate_scale", rate_scale)?;
        Ok(Self { n, rate_scale })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn rate_scale(&self) -> f64 {
        self.rate_scale
    }

    /// Converts a user-facing time into model units.
    pub fn to_model_time(&self, time: f64) -> f64 {
        time * self.rate_scale
    }

    /// Converts a model time into user-facing units.
    pub fn to_user_time(&self, time: f64) -> f64 {
        time / self.rate_scale
    }
}

/// `-ln(1 - u)`, the unit exponential quantile.
#[inline]
pub fn exponential_quantile(u: f64) -> f64 {
    -log1p(-u)
}

#[inline]
pub fn sample_exponential(stream: &mut RandomStream) -> f64 {
    exponential_quantile(stream.uniform())
}

/// Probability that a critical process started from one species has exactly
/// `n` species alive after time `t`.
pub fn population_pmf(t: f64, n: u64) -> Result<f64> {
    positive("t", t)?;
    Ok(if n == 0 {
        t / (1.0 + t)
    } else {
        // t^{n-1} / (1+t)^{n+1}, evaluated in log space for large n
        let x = (n - 1) as f64 * log(t) - (n + 1) as f64 * log1p(t);
        libm::exp(x)
    })
}

/// Density of the time of origin given `n` extant species.
pub fn origin_time_pdf(n: usize, t: f64) -> f64 {
    if t <= 0.0 {
        return 0.0;
    }
    let n = n as f64;
    n * libm::exp((n - 1.0) * log(t) - (n + 1.0) * log1p(t))
}

/// `(t / (1 + t))^n`.
pub fn origin_time_cdf(n: usize, t: f64) -> f64 {
    if t <= 0.0 {
        return 0.0;
    }
    libm::exp(-(n as f64) * log1p(1.0 / t))
}

/// Inverse of [`origin_time_cdf`]: `v / (1 - v)` with `v = u^{1/n}`.
pub fn origin_time_quantile(n: usize, u: f64) -> f64 {
    if u <= 0.0 {
        return 0.0;
    }
    let a = log(u) / n as f64;
    libm::exp(a) / -expm1(a)
}

pub fn sample_origin_time(n: usize, stream: &mut RandomStream) -> f64 {
    origin_time_quantile(n, stream.uniform())
}

/// Density `(1 + 1/t)(1 + s)^{-2}` of a lineage divergence depth on `(0, t)`.
pub fn divergence_depth_pdf(t: f64, s: f64) -> f64 {
    if s <= 0.0 || s >= t {
        return 0.0;
    }
    (1.0 + 1.0 / t) / ((1.0 + s) * (1.0 + s))
}

pub fn divergence_depth_cdf(t: f64, s: f64) -> f64 {
    if s <= 0.0 {
        0.0
    } else if s >= t {
        1.0
    } else {
        (1.0 + 1.0 / t) * s / (1.0 + s)
    }
}

/// Tail `(t - s) / (t (1 + s))` of the divergence depth law.
pub fn divergence_depth_survival(t: f64, s: f64) -> f64 {
    if s <= 0.0 {
        1.0
    } else if s >= t {
        0.0
    } else {
        (t - s) / (t * (1.0 + s))
    }
}

pub fn divergence_depth_quantile(t: f64, u: f64) -> f64 {
    u * t / (1.0 + t * (1.0 - u))
}

pub fn sample_divergence_depth(t: f64, stream: &mut RandomStream) -> Result<f64> {
    positive("t", t)?;
    Ok(divergence_depth_quantile(t, stream.uniform()))
}

/// `P(H > h) = 1/(1+h)` for the maximum height `H` of an excursion.
pub fn excursion_height_survival(h: f64) -> f64 {
    if h <= 0.0 {
        1.0
    } else {
        1.0 / (1.0 + h)
    }
}

pub fn excursion_height_quantile(u: f64) -> f64 {
    u / (1.0 - u)
}

pub fn sample_excursion_height(stream: &mut RandomStream) -> f64 {
    excursion_height_quantile(stream.uniform())
}

/// Excursion height conditioned to stay below `t`.
///
/// The conditioned law has CDF `(1 + 1/t) h / (1 + h)`, the same as the
/// divergence depth law, so the two share a quantile function.
pub fn sample_excursion_height_below(t: f64, stream: &mut RandomStream) -> Result<f64> {
    sample_divergence_depth(t, stream)
}

/// Poisson variate by counting unit-rate arrivals before `mean`.
///
/// Cost is linear in `mean`; the model only needs means of the order of the
/// tree height.
pub fn sample_poisson(mean: f64, stream: &mut RandomStream) -> u64 {
    let mut count = 0;
    let mut clock = sample_exponential(stream);
    while clock < mean {
        count += 1;
        clock += sample_exponential(stream);
    }
    count
}

/// Geometric variate on `{1, 2, ...}` with success probability `p`.
pub fn sample_geometric(p: f64, stream: &mut RandomStream) -> u64 {
    if p >= 1.0 {
        return 1;
    }
    let u = stream.uniform();
    1 + libm::floor(log1p(-u) / log1p(-p)) as u64
}

/// Uniform integer in `{1, ..., k}`.
pub fn sample_uniform_index(k: u64, stream: &mut RandomStream) -> u64 {
    debug_assert!(k >= 1);
    (1 + (stream.uniform() * k as f64) as u64).min(k)
}

/// `P(N = k)` for `N` geometric on `{1, 2, ...}`.
pub fn geometric_pmf(p: f64, k: u64) -> f64 {
    if k == 0 {
        0.0
    } else {
        p * pow(1.0 - p, (k - 1) as f64)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * b.abs().max(1.0)
    }

    #[test]
    fn exponential_examples() {
        assert!(close(exponential_quantile(1.0 - (-1.0f64).exp()), 1.0, 1e-12));
        assert_eq!(exponential_quantile(0.0), 0.0);
        let mut s = RandomStream::new(3, 0);
        let m = 1_000_000;
        let mean = (0..m).map(|_| sample_exponential(&mut s)).sum::<f64>() / m as f64;
        assert!((mean - 1.0).abs() < 0.003, "mean {mean}");
    }

    #[test]
    fn population_pmf_examples() {
        assert_eq!(population_pmf(1.0, 0).unwrap(), 0.5);
        assert!(close(population_pmf(1.0, 3).unwrap(), 1.0 / 16.0, 1e-14));
        let total: f64 = (0..=10_000).map(|n| population_pmf(2.0, n).unwrap()).sum();
        // geometric tail beyond 10^4 is (2/3)^10^4 times a constant
        assert!((total - 1.0).abs() < 1e-9);
        assert!(population_pmf(0.0, 1).is_err());
        assert!(population_pmf(-1.0, 1).is_err());
    }

    #[test]
    fn origin_time_examples() {
        assert!(close(origin_time_quantile(1, 0.5), 1.0, 1e-12));
        assert!(close(origin_time_quantile(2, 0.25), 1.0, 1e-12));
        assert_eq!(origin_time_quantile(7, 0.0), 0.0);
        assert!(origin_time_quantile(3, 1e-300) < 1e-90);
    }

    #[test]
    fn divergence_depth_examples() {
        assert!(close(divergence_depth_quantile(1.0, 0.5), 1.0 / 3.0, 1e-14));
        let t = 3.7;
        assert!(close(divergence_depth_quantile(t, 1.0 - 1e-16), t, 1e-12));
        assert!(sample_divergence_depth(0.0, &mut RandomStream::new(0, 0)).is_err());
    }

    #[test]
    fn excursion_height_examples() {
        assert_eq!(excursion_height_quantile(0.5), 1.0);
        assert_eq!(excursion_height_quantile(0.0), 0.0);
        let mut s = RandomStream::new(11, 0);
        let m = 1_000_000;
        let above = (0..m).filter(|_| sample_excursion_height(&mut s) > 1.0).count();
        let p = above as f64 / m as f64;
        assert!((p - 0.5).abs() < 0.002, "{p}");
    }

    #[test]
    fn geometric_mean() {
        let mut s = RandomStream::new(2, 0);
        let m = 200_000;
        let mean = (0..m).map(|_| sample_geometric(0.25, &mut s)).sum::<u64>() as f64 / m as f64;
        assert!((mean - 4.0).abs() < 0.05, "{mean}");
        assert_eq!(sample_geometric(1.0, &mut s), 1);
    }

    #[test]
    fn poisson_mean_and_variance() {
        let mut s = RandomStream::new(4, 0);
        let m = 200_000;
        let xs: alloc::vec::Vec<f64> = (0..m).map(|_| sample_poisson(3.0, &mut s) as f64).collect();
        let mean = xs.iter().sum::<f64>() / m as f64;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / m as f64;
        assert!((mean - 3.0).abs() < 0.02);
        assert!((var - 3.0).abs() < 0.06);
    }

    #[test]
    fn model_params_scale_times() {
        let p = ModelParams::new(4, 2.0).unwrap();
        assert_eq!(p.to_model_time(1.5), 3.0);
        assert_eq!(p.to_user_time(3.0), 1.5);
        assert!(ModelParams::new(0, 1.0).is_err());
        assert!(ModelParams::new(1, 0.0).is_err());
    }
}
