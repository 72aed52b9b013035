//! Replicated simulation with deterministic per-replicate streams, and the
//! report types shared by the verification suites.

use cladesim_core::{compute_report, sample_complete_tree, RandomStream, ReplicateReport};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Execution {
    #[default]
    Parallel,
    Serial,
}

#[derive(Debug, Error, PartialEq)]
#[error("replicate {replicate}: {reason}")]
pub struct ReplicateError {
    pub replicate: u64,
    pub reason: cladesim_core::Error,
}

/// Runs `reps` replicates of `f`; replicate `i` gets stream `i` of `seed`.
/// Results come back in replicate order whatever the scheduling.
pub fn run_indexed<T, F>(reps: u64, seed: u64, execution: Execution, f: F) -> Result<Vec<T>, ReplicateError>
where
    T: Send,
    F: Fn(u64, &mut RandomStream) -> cladesim_core::Result<T> + Sync,
{
    let one = |i: u64| {
        let mut stream = RandomStream::new(seed, i);
        f(i, &mut stream).map_err(|reason| ReplicateError { replicate: i, reason })
    };
    // collect everything first so the reported error is the lowest index
    let all: Vec<Result<T, ReplicateError>> = match execution {
        Execution::Parallel => (0..reps).into_par_iter().map(one).collect(),
        Execution::Serial => (0..reps).map(one).collect(),
    };
    all.into_iter().collect()
}

/// Which trees a replicate run draws.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SamplerSpec {
    pub n: usize,
    /// Fixed origin time, or `None` to draw it from its posterior.
    pub t: Option<f64>,
}

pub fn run_replicates(
    spec: SamplerSpec,
    reps: u64,
    seed: u64,
    execution: Execution,
) -> Result<Vec<ReplicateReport>, ReplicateError> {
    if reps == 0 {
        return Err(ReplicateError {
            replicate: 0,
            reason: cladesim_core::Error::InvalidParameter {
                name: "reps",
                value: 0.0,
            },
        });
    }
    run_indexed(reps, seed, execution, |_, s| {
        compute_report(&sample_complete_tree(spec.n, spec.t, s)?)
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StatisticKind {
    /// One- or two-sample Kolmogorov-Smirnov distance.
    Ks,
    /// Upper end of a Kolmogorov-Smirnov bracket over censored data.
    KsBracket,
    /// Chi-square p-value.
    ChiSquare,
    /// Sample mean or frequency.
    Moment,
    /// Count of replicates violating an identity.
    Violations,
}

/// How the observed value is compared with the threshold.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "type")]
pub enum Criterion {
    Below { threshold: f64 },
    Above { threshold: f64 },
    Within { target: f64, tolerance: f64 },
    Between { low: f64, high: f64 },
}

impl Criterion {
    pub fn holds(&self, x: f64) -> bool {
        match *self {
            Criterion::Below { threshold } => x < threshold,
            Criterion::Above { threshold } => x > threshold,
            Criterion::Within { target, tolerance } => (x - target).abs() <= tolerance,
            Criterion::Between { low, high } => (low..=high).contains(&x),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TestRecord {
    pub name: String,
    pub kind: StatisticKind,
    pub observed: f64,
    /// Lower end of the bracket for censored data.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub observed_lower: Option<f64>,
    pub criterion: Criterion,
    pub passed: bool,
    /// Reported for context only; does not affect the suite outcome.
    pub informational: bool,
    pub replicates: u64,
    pub seed: u64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub note: Option<String>,
}

impl TestRecord {
    pub fn new(name: impl Into<String>, kind: StatisticKind, observed: f64, criterion: Criterion) -> Self {
        Self {
            name: name.into(),
            kind,
            observed,
            observed_lower: None,
            criterion,
            passed: criterion.holds(observed),
            informational: false,
            replicates: 0,
            seed: 0,
            note: None,
        }
    }

    pub fn replicates(mut self, replicates: u64, seed: u64) -> Self {
        self.replicates = replicates;
        self.seed = seed;
        self
    }

    pub fn lower(mut self, lower: f64) -> Self {
        self.observed_lower = Some(lower);
        self
    }

    pub fn informational(mut self) -> Self {
        self.informational = true;
        self
    }

    pub fn note(mut self, note: impl Into<String>) -> Self {
        self.note = Some(note.into());
        self
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub suite: String,
    pub criterion: u32,
    pub passed: bool,
    pub tests: Vec<TestRecord>,
}

impl SuiteReport {
    pub fn new(suite: impl Into<String>, criterion: u32, tests: Vec<TestRecord>) -> Self {
        let passed = tests.iter().all(|t| t.passed || t.informational);
        Self {
            suite: suite.into(),
            criterion,
            passed,
            tests,
        }
    }

    /// Builds a failed report for a suite that could not run.
    pub fn errored(suite: impl Into<String>, criterion: u32, message: String) -> Self {
        let mut t = TestRecord::new("run", StatisticKind::Violations, 1.0, Criterion::Below { threshold: 1.0 });
        t.note = Some(message);
        Self::new(suite, criterion, vec![t])
    }
}

/// Machine-readable summary of a verification run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerificationSummary {
    pub schema_version: u32,
    pub master_seed: u64,
    pub scale: f64,
    pub passed: bool,
    pub suites: Vec<SuiteReport>,
}

impl VerificationSummary {
    pub fn new(master_seed: u64, scale: f64, suites: Vec<SuiteReport>) -> Self {
        Self {
            schema_version: crate::records::JSON_SCHEMA_VERSION,
            master_seed,
            scale,
            passed: suites.iter().all(|s| s.passed),
            suites,
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("plain data serialises");
        s.push('\n');
        s
    }

    /// One line per test, for people.
    pub fn to_table(&self) -> String {
        let mut out = String::new();
        for s in &self.suites {
            out.push_str(&format!(
                "[{}] {:>2} {}\n",
                if s.passed { "PASS" } else { "FAIL" },
                s.criterion,
                s.suite
            ));
            for t in &s.tests {
                let mark = match (t.passed, t.informational) {
                    (true, _) => "ok  ",
                    (false, true) => "info",
                    (false, false) => "FAIL",
                };
                let lower = t.observed_lower.map(|l| format!(" (lower {l:.4})")).unwrap_or_default();
                out.push_str(&format!(
                    "    {mark} {:<48} {:>12.6}{lower}  {:?}\n",
                    t.name, t.observed, t.criterion
                ));
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn criteria() {
        assert!(Criterion::Below { threshold: 0.1 }.holds(0.05));
        assert!(!Criterion::Above { threshold: 1e-3 }.holds(1e-4));
        assert!(Criterion::Within { target: 0.5, tolerance: 0.01 }.holds(0.509));
        assert!(Criterion::Between { low: 0.85, high: 1.15 }.holds(1.0));
    }

    #[test]
    fn informational_tests_do_not_fail_a_suite() {
        let bad = TestRecord::new("x", StatisticKind::Ks, 1.0, Criterion::Below { threshold: 0.1 });
        assert!(SuiteReport::new("s", 1, vec![bad.clone().informational()]).passed);
        assert!(!SuiteReport::new("s", 1, vec![bad]).passed);
    }

    #[test]
    fn replicate_errors_carry_their_index() {
        let r = run_indexed(10, 1, Execution::Serial, |i, _| {
            if i == 7 {
                Err(cladesim_core::Error::EmptySample)
            } else {
                Ok(i)
            }
        });
        assert_eq!(r.unwrap_err().replicate, 7);
    }
}
