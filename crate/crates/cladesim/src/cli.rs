//! Command-line front end.
//!
//! Exit status: 0 on success, 1 when a verification suite fails or a run
//! cannot complete, 2 on usage errors. A `--config FILE` of `key = value`
//! lines supplies any long flag; flags given on the command line win.

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use cladesim_core::contour::{contour_to_tree, ContourPath};
use cladesim_core::local::{sample_local_complete_tree, sample_local_lineage_window, Centering, LocalWindowConfig, Role};
use cladesim_core::sampler::sample_complete_contour_into;
use cladesim_core::summary::VertexBudget;
use cladesim_core::{compute_report, sample_lineage_tree, CompleteTree, ModelParams, ReferenceLaw};
use serde::Serialize;

use crate::harness::{run_indexed, Execution};
use crate::newick::{export_lineage, export_newick, format_time, import_newick_all, ImportedTree, NewickMode, NewickOptions};
use crate::records::{contour_to_csv, depths_to_csv, law_to_csv, reports_to_csv, reports_to_json, ReportRecord};
use crate::suites::{run_all, run_suite, suite_number, SuiteConfig, SUITES};

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Newick,
    Csv,
    Json,
}

#[derive(Debug, Parser)]
#[command(name = "cladesim", version, about = "Exact simulation of critical birth-death clades conditioned on their extant species")]
pub struct Cli {
    /// Birth and death rate; times on input and output are in units of 1/rate.
    #[arg(long, global = true, default_value_t = 1.0)]
    pub rate_scale: f64,
    /// Output format.
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    /// File of `key = value` lines supplying long flags.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Lineage trees: divergence depths (CSV) or ultrametric Newick.
    SampleLineage {
        #[arg(long)]
        n: usize,
        /// Origin time; drawn from its posterior when absent.
        #[arg(long)]
        t: Option<f64>,
        #[arg(long, default_value_t = 1)]
        reps: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Complete trees as Newick, or their replicate reports.
    SampleComplete {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        t: Option<f64>,
        #[arg(long, default_value_t = 1)]
        reps: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Also write the replicate reports as CSV here.
        #[arg(long)]
        report: Option<PathBuf>,
        /// Write only the lineage tree of each replicate.
        #[arg(long)]
        lineage_only: bool,
        /// Write the contour of the first replicate as CSV here.
        #[arg(long)]
        contour: Option<PathBuf>,
        /// Give up on a replicate whose contour exceeds this many vertices.
        #[arg(long, default_value_t = 100_000_000)]
        max_vertices: u64,
    },
    /// Replicate reports of the complete trees in a Newick file.
    Stats {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Runs the verification suites and prints a JSON summary.
    Verify {
        /// Suite name or number; all suites when absent.
        #[arg(long)]
        suite: Option<String>,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        /// Multiplies every replicate count.
        #[arg(long, default_value_t = 1.0)]
        scale: f64,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Run replicates on one thread.
        #[arg(long)]
        serial: bool,
    },
    /// Windows onto the local limit objects.
    Local {
        #[arg(long, value_enum)]
        mode: LocalMode,
        /// Lineages on each side of lineage 0.
        #[arg(long, default_value_t = 10)]
        window: usize,
        /// Time window of the complete local tree.
        #[arg(long, default_value_t = 1.0)]
        sigma: f64,
        /// Depth beyond which nothing is generated.
        #[arg(long, default_value_t = 50.0)]
        cutoff: f64,
        #[arg(long, default_value_t = 1)]
        reps: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// A reference law sampled on a grid, as CSV.
    Law {
        #[arg(long, value_enum)]
        law: LawName,
        /// Number of extant species, for the exact finite-n laws.
        #[arg(long, default_value_t = 2)]
        n: usize,
        /// Origin time, for the divergence depth law.
        #[arg(long, default_value_t = 1.0)]
        t: f64,
        #[arg(long, default_value_t = 10.0)]
        upper: f64,
        #[arg(long, default_value_t = 200)]
        points: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum LocalMode {
    Lineage,
    Complete,
    Extant,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum LawName {
    InverseExponential,
    OriginTime,
    MrcaLimit,
    MrcaExact,
    NmrcaLimit,
    FirstPassage,
    DivergenceDepth,
    ExcursionHeight,
}

#[derive(Debug, thiserror::Error)]
enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Failed(String),
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Failed(e.to_string())
    }
}

fn failed(e: impl std::fmt::Display) -> CliError {
    CliError::Failed(e.to_string())
}

/// Parses `key = value` lines; `#` starts a comment.
pub fn parse_config(text: &str) -> Result<Vec<(String, String)>, String> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((k, v)) = line.split_once('=') else {
            return Err(format!("config line {}: expected `key = value`", i + 1));
        };
        let key = k.trim().trim_start_matches("--").replace('_', "-");
        if key.is_empty() {
            return Err(format!("config line {}: empty key", i + 1));
        }
        out.push((key, v.trim().to_owned()));
    }
    Ok(out)
}

/// Appends config entries as flags unless the command line already has
/// them.
fn merge_config(mut args: Vec<String>, entries: &[(String, String)]) -> Vec<String> {
    let given = |key: &str| {
        let flag = format!("--{key}");
        args.iter().any(|a| *a == flag || a.starts_with(&format!("{flag}=")))
    };
    let mut extra = Vec::new();
    for (k, v) in entries {
        if k == "config" || given(k) {
            continue;
        }
        match v.as_str() {
            "true" => extra.push(format!("--{k}")),
            "false" => {}
            _ => {
                extra.push(format!("--{k}"));
                extra.push(v.clone());
            }
        }
    }
    args.extend(extra);
    args
}

fn config_path(args: &[String]) -> Option<String> {
    let mut it = args.iter();
    while let Some(a) = it.next() {
        if a == "--config" {
            return it.next().cloned();
        }
        if let Some(p) = a.strip_prefix("--config=") {
            return Some(p.to_owned());
        }
    }
    None
}

/// Runs the command line `args` (program name first) and returns the exit
/// status.
pub fn run(args: Vec<String>, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32 {
    let args = match config_path(&args) {
        Some(path) => match std::fs::read_to_string(&path)
            .map_err(|e| format!("cannot read config {path}: {e}"))
            .and_then(|text| parse_config(&text))
        {
            Ok(entries) => merge_config(args, &entries),
            Err(e) => {
                let _ = writeln!(stderr, "error: {e}");
                return 2;
            }
        },
        None => args,
    };
    let cli = match Cli::try_parse_from(&args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let text = e.render().to_string();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(stdout, "{text}");
                    0
                }
                _ => {
                    let _ = write!(stderr, "{text}");
                    2
                }
            };
        }
    };
    match execute(&cli, stdout, stderr) {
        Ok(true) => 0,
        Ok(false) => 1,
        Err(CliError::Usage(m)) => {
            let _ = writeln!(stderr, "error: {m}");
            2
        }
        Err(CliError::Failed(m)) => {
            let _ = writeln!(stderr, "error: {m}");
            1
        }
    }
}

fn emit(out: &Option<PathBuf>, text: &str, stdout: &mut dyn Write) -> Result<(), CliError> {
    match out {
        Some(path) => write_file(path, text),
        None => Ok(stdout.write_all(text.as_bytes())?),
    }
}

fn write_file(path: &Path, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text).map_err(|e| failed(format!("cannot write {}: {e}", path.display())))
}

fn check_format(given: Option<Format>, allowed: &[Format], default: Format) -> Result<Format, CliError> {
    let f = given.unwrap_or(default);
    if allowed.contains(&f) {
        Ok(f)
    } else {
        Err(CliError::Usage(format!(
            "format {f:?} is not available here (use one of {allowed:?})"
        )))
    }
}

/// Model-time origin from a user-time flag.
fn model_origin(params: &ModelParams, t: Option<f64>) -> Result<Option<f64>, CliError> {
    match t {
        Some(t) if !(t > 0.0 && t.is_finite()) => Err(CliError::Usage(format!("--t must be positive, got {t}"))),
        Some(t) => Ok(Some(params.to_model_time(t))),
        None => Ok(None),
    }
}

fn execute(cli: &Cli, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<bool, CliError> {
    let rate = cli.rate_scale;
    if !(rate > 0.0 && rate.is_finite()) {
        return Err(CliError::Usage(format!("--rate-scale must be positive, got {rate}")));
    }
    match &cli.command {
        Command::SampleLineage { n, t, reps, seed, out } => {
            let format = check_format(cli.format, &[Format::Csv, Format::Newick, Format::Json], Format::Csv)?;
            let params = ModelParams::new(*n, rate).map_err(|e| CliError::Usage(e.to_string()))?;
            if *n < 2 {
                return Err(CliError::Usage("a lineage tree needs --n of at least 2".into()));
            }
            let t = model_origin(&params, *t)?;
            let samples = run_indexed(*reps, *seed, Execution::Parallel, |_, s| sample_lineage_tree(*n, t, s))
                .map_err(failed)?;
            let text = match format {
                Format::Csv => depths_to_csv(samples.iter().map(|l| (l.origin, l.marks.depths())), rate),
                Format::Newick => samples
                    .iter()
                    .map(|l| export_lineage(&l.marks, l.origin, rate).into_string() + "\n")
                    .collect(),
                Format::Json => {
                    #[derive(Serialize)]
                    struct Row {
                        #[serde(rename = "T_or")]
                        t_or: f64,
                        depths: Vec<f64>,
                    }
                    #[derive(Serialize)]
                    struct File {
                        schema_version: u32,
                        schema: &'static str,
                        replicates: Vec<Row>,
                    }
                    let file = File {
                        schema_version: crate::records::JSON_SCHEMA_VERSION,
                        schema: "cladesim.lineage/1",
                        replicates: samples
                            .iter()
                            .map(|l| Row {
                                t_or: l.origin / rate,
                                depths: l.marks.depths().iter().map(|d| d / rate).collect(),
                            })
                            .collect(),
                    };
                    serde_json::to_string_pretty(&file).map_err(failed)? + "\n"
                }
            };
            emit(out, &text, stdout)?;
            Ok(true)
        }
        Command::SampleComplete {
            n,
            t,
            reps,
            seed,
            out,
            report,
            lineage_only,
            contour,
            max_vertices,
        } => {
            let format = check_format(cli.format, &[Format::Newick, Format::Csv, Format::Json], Format::Newick)?;
            let params = ModelParams::new(*n, rate).map_err(|e| CliError::Usage(e.to_string()))?;
            if *lineage_only && *n < 2 {
                return Err(CliError::Usage("--lineage-only needs --n of at least 2".into()));
            }
            let t = model_origin(&params, *t)?;
            let limit = *max_vertices;
            // (tree, contour) or None when the budget ran out
            let trees = run_indexed(*reps, *seed, Execution::Parallel, |_, s| {
                let origin = t.unwrap_or_else(|| cladesim_core::dist::sample_origin_time(*n, s));
                let mut budget = VertexBudget::new(Vec::new(), limit);
                let _ = sample_complete_contour_into(*n, origin, s, &mut budget)?;
                if budget.exhausted() {
                    return Ok(None);
                }
                let path = ContourPath::from_vertices(budget.inner)?;
                Ok(Some(contour_to_tree(&path, origin)?))
            })
            .map_err(failed)?;
            let trees: Vec<CompleteTree> = trees
                .into_iter()
                .enumerate()
                .map(|(i, tree)| {
                    tree.ok_or_else(|| failed(format!("replicate {i}: contour exceeds --max-vertices {limit}")))
                })
                .collect::<Result<_, _>>()?;
            let records: Vec<ReportRecord> = trees
                .iter()
                .map(|tree| compute_report(tree).map(|r| ReportRecord::from_report(&r, rate)))
                .collect::<Result<_, _>>()
                .map_err(failed)?;
            let options = NewickOptions {
                mode: if *lineage_only { NewickMode::LineageOnly } else { NewickMode::Complete },
                rate_scale: rate,
            };
            let text = match format {
                Format::Newick => trees
                    .iter()
                    .map(|tree| export_newick(tree, &options).into_string() + "\n")
                    .collect(),
                Format::Csv => reports_to_csv(&records),
                Format::Json => reports_to_json(&records),
            };
            emit(out, &text, stdout)?;
            if let Some(path) = report {
                write_file(path, &reports_to_csv(&records))?;
            }
            if let (Some(path), Some(tree)) = (contour, trees.first()) {
                let path_vertices = cladesim_core::tree_to_contour(tree);
                write_file(path, &contour_to_csv(path_vertices.vertices(), rate))?;
            }
            Ok(true)
        }
        Command::Stats { input, out } => {
            let format = check_format(cli.format, &[Format::Csv, Format::Json], Format::Csv)?;
            let text = std::fs::read_to_string(input)
                .map_err(|e| failed(format!("cannot read {}: {e}", input.display())))?;
            let trees = import_newick_all(&text, Some(NewickMode::Complete), rate)
                .map_err(|e| failed(format!("{}: {e}", input.display())))?;
            let mut records = Vec::new();
            for (i, tree) in trees.into_iter().enumerate() {
                let ImportedTree::Complete(tree) = tree else {
                    unreachable!("complete mode was requested")
                };
                let r = compute_report(&tree).map_err(|e| failed(format!("tree {}: {e}", i + 1)))?;
                records.push(ReportRecord::from_report(&r, rate));
            }
            let text = match format {
                Format::Json => reports_to_json(&records),
                _ => reports_to_csv(&records),
            };
            emit(out, &text, stdout)?;
            Ok(true)
        }
        Command::Verify {
            suite,
            seed,
            scale,
            out,
            serial,
        } => {
            check_format(cli.format, &[Format::Json], Format::Json)?;
            if !(*scale > 0.0 && scale.is_finite()) {
                return Err(CliError::Usage(format!("--scale must be positive, got {scale}")));
            }
            let mut config = SuiteConfig::new(*seed);
            config.scale = *scale;
            if *serial {
                config.execution = Execution::Serial;
            }
            let summary = match suite {
                None => run_all(&config),
                Some(name) => {
                    let k = suite_number(name).ok_or_else(|| {
                        CliError::Usage(format!("unknown suite `{name}`; available: {}", SUITES.join(", ")))
                    })?;
                    crate::harness::VerificationSummary::new(*seed, *scale, vec![run_suite(k, &config)])
                }
            };
            let _ = write!(stderr, "{}", summary.to_table());
            emit(out, &summary.to_json(), stdout)?;
            Ok(summary.passed)
        }
        Command::Local {
            mode,
            window,
            sigma,
            cutoff,
            reps,
            seed,
            out,
        } => {
            check_format(cli.format, &[Format::Csv], Format::Csv)?;
            let config = LocalWindowConfig::new(*window, sigma * rate, cutoff * rate)
                .map_err(|e| CliError::Usage(e.to_string()))?;
            let mut text = String::new();
            match mode {
                LocalMode::Lineage => {
                    let rows = run_indexed(*reps, *seed, Execution::Parallel, |_, s| {
                        Ok(sample_local_lineage_window(&config, s))
                    })
                    .map_err(failed)?;
                    text.push_str("# schema=cladesim.local-lineage/1\nreplicate,position,depth,truncated\n");
                    let w = *window as f64;
                    for (r, row) in rows.iter().enumerate() {
                        for (j, d) in row.depths.iter().enumerate() {
                            let truncated = *d >= config.cutoff();
                            text.push_str(&format!(
                                "{r},{},{},{}\n",
                                j as f64 - w + 0.5,
                                format_time(d / rate),
                                truncated as u8
                            ));
                        }
                    }
                }
                LocalMode::Complete | LocalMode::Extant => {
                    let centering = if *mode == LocalMode::Complete {
                        Centering::Species
                    } else {
                        Centering::ExtantSpecies
                    };
                    let rows = run_indexed(*reps, *seed, Execution::Parallel, |_, s| {
                        Ok(sample_local_complete_tree(&config, centering, s))
                    })
                    .map_err(failed)?;
                    text.push_str(
                        "# schema=cladesim.local-tree/1\nreplicate,species,parent,role,birth,death,censored\n",
                    );
                    for (r, tree) in rows.iter().enumerate() {
                        for (i, sp) in tree.species.iter().enumerate() {
                            let role = match sp.role {
                                Role::Distinguished => "distinguished".to_string(),
                                Role::Ancestor(k) => format!("ancestor{k}"),
                                Role::Other => "other".to_string(),
                            };
                            text.push_str(&format!(
                                "{r},{i},{},{role},{},{},{}\n",
                                sp.parent.map(|p| p.to_string()).unwrap_or_default(),
                                format_time(sp.birth / rate),
                                format_time(sp.death / rate),
                                sp.censored as u8
                            ));
                        }
                    }
                }
            }
            emit(out, &text, stdout)?;
            Ok(true)
        }
        Command::Law {
            law,
            n,
            t,
            upper,
            points,
            out,
        } => {
            check_format(cli.format, &[Format::Csv], Format::Csv)?;
            if *points == 0 || !(*upper > 0.0) {
                return Err(CliError::Usage("--points and --upper must be positive".into()));
            }
            let law = match law {
                LawName::InverseExponential => ReferenceLaw::InverseExponential,
                LawName::OriginTime => ReferenceLaw::OriginTime { n: *n },
                LawName::MrcaLimit => ReferenceLaw::MrcaLimit,
                LawName::MrcaExact => ReferenceLaw::MrcaExact { n: *n },
                LawName::NmrcaLimit => ReferenceLaw::NmrcaLimit,
                LawName::FirstPassage => ReferenceLaw::FirstPassage { scale: 1.0 },
                LawName::DivergenceDepth => ReferenceLaw::DivergenceDepth { t: *t },
                LawName::ExcursionHeight => ReferenceLaw::ExcursionHeight,
            };
            emit(out, &law_to_csv(&law, *upper, *points), stdout)?;
            Ok(true)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_lines() {
        let c = parse_config("# comment\nseed = 7\n\nrate_scale=2 # trailing\nlineage-only = true\n").unwrap();
        assert_eq!(
            c,
            vec![
                ("seed".into(), "7".into()),
                ("rate-scale".into(), "2".into()),
                ("lineage-only".into(), "true".into())
            ]
        );
        assert!(parse_config("seed 7").is_err());
    }

    #[test]
    fn flags_win_over_config() {
        let args: Vec<String> = ["x", "sample-lineage", "--seed", "1"].iter().map(|s| s.to_string()).collect();
        let merged = merge_config(args, &[("seed".into(), "9".into()), ("n".into(), "3".into())]);
        assert_eq!(merged, ["x", "sample-lineage", "--seed", "1", "--n", "3"]);
    }
}
