//! Independent reference processes used as test oracles.

use cladesim_core::dist::sample_exponential;
use cladesim_core::RandomStream;
use rand_distr::{Binomial, Distribution};

/// Outcome of a walk that may be stopped early.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Censored<T> {
    pub value: T,
    /// `value` is only a lower bound: the walk was stopped.
    pub censored: bool,
}

/// Hitting time of 0 by a simple symmetric random walk started at `n`,
/// stopped once more than `limit` steps have been taken.
///
/// From position `x` the next `x` steps cannot reach 0 before the last of
/// them, so they are taken at once: the position after the block is
/// `2 Bin(x, 1/2)`.
pub fn srw_hitting_time(n: u64, limit: u64, stream: &mut RandomStream) -> Censored<u64> {
    let (mut x, mut steps) = (n, 0u64);
    while x > 0 {
        if steps > limit {
            return Censored {
                value: steps,
                censored: true,
            };
        }
        steps += x;
        x = 2 * Binomial::new(x, 0.5).expect("valid binomial").sample(stream);
    }
    Censored {
        value: steps,
        censored: false,
    }
}

/// Path summary of the birth-death chain with rates `(i, i)` in state `i`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ChainPath {
    /// Number of jumps until absorption (or until stopped).
    pub jumps: u64,
    pub first_jump: f64,
    /// Time to absorption (or elapsed time when stopped).
    pub duration: f64,
    pub censored: bool,
}

/// Runs the chain from `n` until it is absorbed at 0, stopping after
/// `limit` jumps.
pub fn birth_death_chain(n: u64, limit: u64, stream: &mut RandomStream) -> ChainPath {
    let (mut x, mut jumps, mut time) = (n, 0u64, 0.0);
    let mut first_jump = f64::NAN;
    while x > 0 {
        if jumps >= limit {
            return ChainPath {
                jumps,
                first_jump,
                duration: time,
                censored: true,
            };
        }
        time += sample_exponential(stream) / (2 * x) as f64;
        if jumps == 0 {
            first_jump = time;
        }
        jumps += 1;
        if stream.uniform() < 0.5 {
            x += 1;
        } else {
            x -= 1;
        }
    }
    ChainPath {
        jumps,
        first_jump,
        duration: time,
        censored: false,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use cladesim_core::laws::hitting_time_pmf;

    #[test]
    fn block_walk_matches_the_hitting_law() {
        let mut s = RandomStream::new(1, 0);
        let reps = 200_000;
        let mut counts = [0u64; 8];
        for _ in 0..reps {
            let d = srw_hitting_time(2, u64::MAX, &mut s).value;
            if d < 16 {
                counts[(d / 2) as usize] += 1;
            }
        }
        for k in 1..8u64 {
            let p = hitting_time_pmf(2, 2 * k);
            let f = counts[k as usize] as f64 / reps as f64;
            assert!((f - p).abs() < 5.0 * (p / reps as f64).sqrt(), "d={} {f} vs {p}", 2 * k);
        }
    }

    #[test]
    fn chain_first_jump_has_rate_2n() {
        let mut s = RandomStream::new(2, 0);
        let mean = (0..100_000)
            .map(|_| birth_death_chain(3, 1, &mut s).first_jump)
            .sum::<f64>()
            / 1e5;
        assert!((mean - 1.0 / 6.0).abs() < 0.002);
        let p = birth_death_chain(3, 0, &mut s);
        assert!(p.censored && p.jumps == 0);
    }
}
