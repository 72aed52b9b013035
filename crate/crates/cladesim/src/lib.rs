//! Monte Carlo harness, serialisation and command-line front end for
//! [`cladesim_core`].
//!
//! * [`newick`]: Newick export and import of complete and lineage trees,
//! * [`records`]: versioned CSV and JSON for replicate reports and samples,
//! * [`oracle`]: independent reference processes used as test oracles,
//! * [`harness`]: replicated runs with per-replicate streams, suite reports,
//! * [`suites`]: the verification suites,
//! * [`cli`]: the `cladesim` command.

pub mod cli;
pub mod harness;
pub mod newick;
pub mod oracle;
pub mod records;
pub mod suites;

pub use harness::{run_replicates, Execution, SamplerSpec, SuiteReport, VerificationSummary};
pub use newick::{export_newick, import_newick, ImportedTree, NewickDocument, NewickMode, NewickOptions};
pub use suites::{run_all, run_suite, SuiteConfig, Tolerances};
