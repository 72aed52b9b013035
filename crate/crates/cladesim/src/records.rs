//! Tabular output: replicate reports, lineage depths, contours and law
//! CDFs as versioned CSV, and replicate reports as JSON.
//!
//! Every CSV starts with a `# schema=<name>/<version>` line followed by the
//! column header. Missing values (the MRCA of a single species) are empty
//! fields in CSV and `null` in JSON.

use std::fmt::Write as _;

use cladesim_core::{ReferenceLaw, ReplicateReport};
use serde::{Deserialize, Serialize};

use crate::newick::format_time;

pub const REPORT_SCHEMA: &str = "cladesim.replicates/1";
pub const REPORT_COLUMNS: &str = "n,T_or,T_mrca,N_mrca,N_ext,N_anc,max_pop,D";
pub const DEPTH_SCHEMA: &str = "cladesim.depths/1";
pub const CONTOUR_SCHEMA: &str = "cladesim.contour/1";
pub const LAW_SCHEMA: &str = "cladesim.law/1";
pub const JSON_SCHEMA_VERSION: u32 = 1;

/// A replicate report in user time units.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportRecord {
    pub n: usize,
    #[serde(rename = "T_or")]
    pub t_or: f64,
    #[serde(rename = "T_mrca")]
    pub t_mrca: Option<f64>,
    #[serde(rename = "N_mrca")]
    pub n_mrca: Option<u64>,
    #[serde(rename = "N_ext")]
    pub n_ext: u64,
    #[serde(rename = "N_anc")]
    pub n_anc: u64,
    pub max_pop: u64,
    #[serde(rename = "D")]
    pub d: u64,
}

impl ReportRecord {
    pub fn from_report(r: &ReplicateReport, rate_scale: f64) -> Self {
        Self {
            n: r.n,
            t_or: r.t_or / rate_scale,
            t_mrca: r.t_mrca.map(|x| x / rate_scale),
            n_mrca: r.n_mrca,
            n_ext: r.n_ext,
            n_anc: r.n_anc,
            max_pop: r.max_pop,
            d: r.jumps,
        }
    }

    fn csv_row(&self) -> String {
        let opt_f = |x: Option<f64>| x.map(format_time).unwrap_or_default();
        let opt_u = |x: Option<u64>| x.map(|v| v.to_string()).unwrap_or_default();
        format!(
            "{},{},{},{},{},{},{},{}",
            self.n,
            format_time(self.t_or),
            opt_f(self.t_mrca),
            opt_u(self.n_mrca),
            self.n_ext,
            self.n_anc,
            self.max_pop,
            self.d
        )
    }
}

pub fn reports_to_csv(records: &[ReportRecord]) -> String {
    let mut out = format!("# schema={REPORT_SCHEMA}\n{REPORT_COLUMNS}\n");
    for r in records {
        out.push_str(&r.csv_row());
        out.push('\n');
    }
    out
}

#[derive(Serialize, Deserialize)]
struct ReportFile {
    schema_version: u32,
    schema: String,
    replicates: Vec<ReportRecord>,
}

pub fn reports_to_json(records: &[ReportRecord]) -> String {
    let file = ReportFile {
        schema_version: JSON_SCHEMA_VERSION,
        schema: REPORT_SCHEMA.into(),
        replicates: records.to_vec(),
    };
    let mut s = serde_json::to_string_pretty(&file).expect("plain data serialises");
    s.push('\n');
    s
}

#[derive(Debug, thiserror::Error, PartialEq)]
#[error("line {line}: {message}")]
pub struct CsvError {
    pub line: usize,
    pub message: String,
}

/// Reads a report CSV written by [`reports_to_csv`].
pub fn reports_from_csv(text: &str) -> Result<Vec<ReportRecord>, CsvError> {
    let err = |line: usize, message: String| CsvError { line, message };
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
    match lines.next() {
        Some((_, l)) if l.trim() == format!("# schema={REPORT_SCHEMA}") => {}
        Some((i, l)) => return Err(err(i, format!("expected schema line, found `{l}`"))),
        None => return Err(err(1, "empty input".into())),
    }
    match lines.next() {
        Some((_, l)) if l.trim() == REPORT_COLUMNS => {}
        Some((i, l)) => return Err(err(i, format!("unexpected header `{l}`"))),
        None => return Err(err(2, "missing header".into())),
    }
    let mut out = Vec::new();
    for (i, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split(',').map(str::trim).collect();
        if f.len() != 8 {
            return Err(err(i, format!("expected 8 fields, found {}", f.len())));
        }
        let num = |k: usize| -> Result<u64, CsvError> {
            f[k].parse().map_err(|_| err(i, format!("field {} is not an integer", k + 1)))
        };
        let real = |k: usize| -> Result<f64, CsvError> {
            f[k].parse().map_err(|_| err(i, format!("field {} is not a number", k + 1)))
        };
        out.push(ReportRecord {
            n: num(0)? as usize,
            t_or: real(1)?,
            t_mrca: if f[2].is_empty() { None } else { Some(real(2)?) },
            n_mrca: if f[3].is_empty() { None } else { Some(num(3)?) },
            n_ext: num(4)?,
            n_anc: num(5)?,
            max_pop: num(6)?,
            d: num(7)?,
        });
    }
    Ok(out)
}

/// Lineage depths, one row per mark.
pub fn depths_to_csv<'a>(samples: impl IntoIterator<Item = (f64, &'a [f64])>, rate_scale: f64) -> String {
    let mut out = format!("# schema={DEPTH_SCHEMA}\nreplicate,T_or,index,depth\n");
    for (r, (origin, depths)) in samples.into_iter().enumerate() {
        for (i, d) in depths.iter().enumerate() {
            let _ = writeln!(
                out,
                "{r},{},{},{}",
                format_time(origin / rate_scale),
                i + 1,
                format_time(d / rate_scale)
            );
        }
    }
    out
}

/// Contour vertices for debugging and plotting.
pub fn contour_to_csv(vertices: &[f64], rate_scale: f64) -> String {
    let mut out = format!("# schema={CONTOUR_SCHEMA}\nindex,height\n");
    for (i, v) in vertices.iter().enumerate() {
        let _ = writeln!(out, "{i},{}", format_time(v / rate_scale));
    }
    out
}

/// The CDF (and density, where known) of a law on `points` equally spaced
/// values of `[0, upper]`.
pub fn law_to_csv(law: &ReferenceLaw, upper: f64, points: usize) -> String {
    let mut out = format!("# schema={LAW_SCHEMA}\n# law={}\nx,cdf,pdf\n", law.name());
    for k in 0..=points {
        let x = upper * k as f64 / points as f64;
        let pdf = law.pdf(x).map(format_time).unwrap_or_default();
        let _ = writeln!(out, "{},{},{pdf}", format_time(x), format_time(law.cdf(x)));
    }
    out
}
