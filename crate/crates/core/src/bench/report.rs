use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::quadmodel::ProblemSpec;
use crate::solver::{MethodConfig, SolverReport, Status};

use super::{BenchmarkSpec, Execution};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Format {
    Csv,
    Json,
    Md,
}

impl std::str::FromStr for Format {
    type Err = crate::Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            "md" | "markdown" => Ok(Format::Md),
            other => Err(crate::Error::InvalidConfig(format!("unknown format {other:?}"))),
        }
    }
}

/// One grid cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Row {
    pub problem: String,
    pub n: usize,
    pub seed: Option<u64>,
    pub method: String,
    pub variant: Option<String>,
    pub baseline: bool,
    pub status: Status,
    pub iterations: usize,
    pub grad_inf: f64,
    pub restarts: usize,
    pub skips: usize,
    pub fallbacks: usize,
    pub ms: f64,
}

impl Row {
    pub fn new(spec: &ProblemSpec, n: usize, method: &MethodConfig, report: &SolverReport, ms: f64) -> Self {
        Self {
            problem: spec.family.to_string(),
            n,
            seed: spec.family.is_seeded().then_some(spec.seed),
            method: method.label.clone(),
            variant: method.variant.clone(),
            baseline: method.baseline,
            status: report.status,
            iterations: report.iterations,
            grad_inf: report.final_grad_inf_norm,
            restarts: report.restarts,
            skips: report.skipped_updates,
            fallbacks: report.fallback_steps,
            ms,
        }
    }

    /// Method label qualified by its variant, e.g. `BFGS_1[B0(1)]`.
    pub fn method_key(&self) -> String {
        match &self.variant {
            Some(v) => format!("{}[{v}]", self.method),
            None => self.method.clone(),
        }
    }
}

/// Median outcome over the seeds of one (problem, n, method) group.
///
/// Outcomes are ranked converged < capped < failed, converged runs by iteration
/// count; the reported outcome is the lower median.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub problem: String,
    pub n: usize,
    pub method: String,
    pub variant: Option<String>,
    pub seeds: usize,
    pub converged: usize,
    pub median_status: Status,
    pub median_iterations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metadata {
    pub tool: String,
    pub version: String,
    pub preset: String,
    pub timestamp: String,
    pub parallel: bool,
    pub notes: Vec<String>,
    pub spec: BenchmarkSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkReport {
    pub metadata: Metadata,
    pub rows: Vec<Row>,
    pub summaries: Vec<SummaryRow>,
}

impl BenchmarkReport {
    pub fn new(spec: &BenchmarkSpec, rows: Vec<Row>, exec: Execution) -> Self {
        let summaries = summarize(&rows, spec.cfg.max_iter);
        Self {
            metadata: Metadata {
                tool: "aos-bench".into(),
                version: env!("CARGO_PKG_VERSION").into(),
                preset: spec.name.clone(),
                timestamp: chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true),
                parallel: exec != Execution::Sequential && crate::par::is_parallel(),
                notes: spec.notes.clone(),
                spec: spec.clone(),
            },
            rows,
            summaries,
        }
    }

    /// Copy with the timing fields blanked, for byte-level comparisons.
    pub fn without_timing(&self) -> Self {
        let mut r = self.clone();
        r.metadata.timestamp = String::new();
        r.metadata.parallel = false;
        for row in &mut r.rows {
            row.ms = 0.0;
        }
        r
    }

    /// Any non-baseline method ended in a numerical failure.
    pub fn has_unexpected_failure(&self) -> bool {
        self.rows.iter().any(|r| !r.baseline && r.status == Status::NumericFailure)
    }

    fn max_iter(&self) -> usize {
        self.metadata.spec.cfg.max_iter
    }
}

/// (problem, n, method, variant) and the rows sharing it.
type Group<'a> = (String, usize, String, Option<String>, Vec<&'a Row>);

fn summarize(rows: &[Row], max_iter: usize) -> Vec<SummaryRow> {
    let mut groups: Vec<Group> = Vec::new();
    for row in rows.iter().filter(|r| r.seed.is_some()) {
        match groups.iter_mut().find(|g| {
            g.0 == row.problem && g.1 == row.n && g.2 == row.method && g.3 == row.variant
        }) {
            Some(g) => g.4.push(row),
            None => groups.push((row.problem.clone(), row.n, row.method.clone(), row.variant.clone(), vec![row])),
        }
    }
    groups
        .into_iter()
        .filter(|g| g.4.len() > 1)
        .map(|(problem, n, method, variant, members)| {
            let mut ranked: Vec<(u8, usize)> = members
                .iter()
                .map(|r| match r.status {
                    Status::Converged => (0, r.iterations),
                    Status::MaxIter => (1, max_iter),
                    Status::NumericFailure => (2, r.iterations),
                })
                .collect();
            ranked.sort_unstable();
            let (rank, iterations) = ranked[(ranked.len() - 1) / 2];
            let median_status = match rank {
                0 => Status::Converged,
                1 => Status::MaxIter,
                _ => Status::NumericFailure,
            };
            SummaryRow {
                problem,
                n,
                method,
                variant,
                seeds: members.len(),
                converged: members.iter().filter(|r| r.status.is_converged()).count(),
                median_status,
                median_iterations: iterations,
            }
        })
        .collect()
}

/// Scientific notation with up to four significant digits and a two-digit
/// exponent, e.g. `9.7e-07`.
pub fn fmt_sci(v: f64) -> String {
    if !v.is_finite() {
        return v.to_string();
    }
    let s = format!("{v:.3e}");
    let (mantissa, exp) = s.split_once('e').expect("exponent present");
    let mantissa = if mantissa.contains('.') {
        mantissa.trim_end_matches('0').trim_end_matches('.')
    } else {
        mantissa
    };
    let exp: i32 = exp.parse().expect("integer exponent");
    format!("{mantissa}e{}{:02}", if exp < 0 { '-' } else { '+' }, exp.abs())
}

pub fn emit(report: &BenchmarkReport, format: Format) -> Vec<u8> {
    match format {
        Format::Csv => emit_csv(report),
        Format::Json => {
            let mut out = serde_json::to_vec_pretty(report).expect("report serializes");
            out.push(b'\n');
            out
        }
        Format::Md => emit_md(report).into_bytes(),
    }
}

pub const CSV_HEADER: [&str; 10] = [
    "problem", "n", "seed", "method", "status", "iterations", "grad_inf", "restarts", "skips", "ms",
];

fn emit_csv(report: &BenchmarkReport) -> Vec<u8> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::CRLF).from_writer(Vec::new());
    w.write_record(CSV_HEADER).expect("in-memory write");
    for r in &report.rows {
        w.write_record([
            r.problem.clone(),
            r.n.to_string(),
            r.seed.map(|s| s.to_string()).unwrap_or_default(),
            r.method_key(),
            r.status.to_string(),
            r.iterations.to_string(),
            fmt_sci(r.grad_inf),
            r.restarts.to_string(),
            r.skips.to_string(),
            format!("{:.3}", r.ms),
        ])
        .expect("in-memory write");
    }
    w.into_inner().expect("in-memory flush")
}

fn cell(status: Status, iterations: usize, max_iter: usize) -> String {
    match status {
        Status::Converged => iterations.to_string(),
        Status::MaxIter => format!(">{max_iter}"),
        Status::NumericFailure => "F".into(),
    }
}

/// Insertion-ordered distinct values.
fn distinct<T: PartialEq + Clone>(items: impl Iterator<Item = T>) -> Vec<T> {
    let mut out: Vec<T> = Vec::new();
    for item in items {
        if !out.contains(&item) {
            out.push(item);
        }
    }
    out
}

fn table(out: &mut String, columns: &[String], rows: &[(String, Vec<String>)]) {
    let _ = writeln!(out, "| method | {} |", columns.join(" | "));
    let _ = writeln!(out, "|---|{}", "---|".repeat(columns.len()));
    for (label, cells) in rows {
        let _ = writeln!(out, "| {label} | {} |", cells.join(" | "));
    }
    out.push('\n');
}

fn emit_md(report: &BenchmarkReport) -> String {
    let max_iter = report.max_iter();
    let mut out = format!("# {} iteration counts\n\n", report.metadata.preset);
    for note in &report.metadata.notes {
        let _ = writeln!(out, "> {note}\n");
    }
    for family in distinct(report.rows.iter().map(|r| r.problem.clone())) {
        let _ = writeln!(out, "## {family}\n");
        let rows: Vec<&Row> = report.rows.iter().filter(|r| r.problem == family).collect();
        let columns = distinct(rows.iter().map(|r| (r.n, r.seed, r.variant.clone())));
        let headers: Vec<String> = columns
            .iter()
            .map(|(n, seed, variant)| {
                let mut h = format!("n={n}");
                if let Some(s) = seed {
                    let _ = write!(h, " seed={s}");
                }
                if let Some(v) = variant {
                    let _ = write!(h, " {v}");
                }
                h
            })
            .collect();
        let body: Vec<(String, Vec<String>)> = distinct(rows.iter().map(|r| r.method.clone()))
            .into_iter()
            .map(|method| {
                let cells = columns
                    .iter()
                    .map(|(n, seed, variant)| {
                        rows.iter()
                            .find(|r| r.method == method && r.n == *n && r.seed == *seed && r.variant == *variant)
                            .map(|r| cell(r.status, r.iterations, max_iter))
                            .unwrap_or_default()
                    })
                    .collect();
                (method, cells)
            })
            .collect();
        table(&mut out, &headers, &body);

        let summaries: Vec<&SummaryRow> = report.summaries.iter().filter(|s| s.problem == family).collect();
        if !summaries.is_empty() {
            let _ = writeln!(out, "### {family} median over seeds\n");
            let columns = distinct(summaries.iter().map(|s| (s.n, s.variant.clone())));
            let headers: Vec<String> = columns
                .iter()
                .map(|(n, v)| match v {
                    Some(v) => format!("n={n} {v}"),
                    None => format!("n={n}"),
                })
                .collect();
            let body: Vec<(String, Vec<String>)> = distinct(summaries.iter().map(|s| s.method.clone()))
                .into_iter()
                .map(|method| {
                    let cells = columns
                        .iter()
                        .map(|(n, v)| {
                            summaries
                                .iter()
                                .find(|s| s.method == method && s.n == *n && s.variant == *v)
                                .map(|s| cell(s.median_status, s.median_iterations, max_iter))
                                .unwrap_or_default()
                        })
                        .collect();
                    (method, cells)
                })
                .collect();
            table(&mut out, &headers, &body);
        }
    }
    out
}
