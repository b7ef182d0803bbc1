//! Method x problem benchmark grids.
//!
//! A [`BenchmarkSpec`] expands into cells, one per (problem instance, method).
//! Seeded families expand into `repeats` instances with consecutive seeds. Cells
//! are independent and run on the data-parallel map in [`crate::par`]; rows come
//! back in grid order either way.

mod presets;
mod report;

use std::path::PathBuf;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::quadmodel::{generate, ProblemSpec, QuadraticProblem};
use crate::solver::{run, MethodConfig, SolverConfig};
use crate::{par, Error, Result};

pub use presets::{preset, Preset, PresetOptions};
pub use report::{emit, fmt_sci, BenchmarkReport, Format, Metadata, Row, SummaryRow};

/// Environment variable capping the worker count.
pub const THREADS_ENV: &str = "AOS_BENCH_THREADS";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkSpec {
    pub name: String,
    pub problems: Vec<ProblemSpec>,
    pub methods: Vec<MethodConfig>,
    pub cfg: SolverConfig,
    /// Number of consecutive seeds per seeded problem.
    pub repeats: usize,
    pub notes: Vec<String>,
}

impl BenchmarkSpec {
    pub fn new(name: impl Into<String>, problems: Vec<ProblemSpec>, methods: Vec<MethodConfig>) -> Self {
        Self {
            name: name.into(),
            problems,
            methods,
            cfg: SolverConfig::default(),
            repeats: 1,
            notes: Vec::new(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.problems.is_empty() || self.methods.is_empty() {
            return Err(Error::InvalidConfig("benchmark needs at least one problem and one method".into()));
        }
        if self.repeats == 0 {
            return Err(Error::InvalidConfig("repeats must be at least 1".into()));
        }
        self.cfg.validate()?;
        for p in &self.problems {
            p.validate()?;
        }
        for m in &self.methods {
            m.validate()?;
        }
        Ok(())
    }

    /// Concrete problem instances in grid order.
    pub fn instances(&self) -> Vec<ProblemSpec> {
        self.problems
            .iter()
            .flat_map(|p| {
                let count = if p.family.is_seeded() { self.repeats } else { 1 };
                (0..count as u64).map(move |r| p.clone().with_seed(p.seed.wrapping_add(r)))
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Execution {
    /// Data-parallel over cells, optionally capped at a worker count.
    #[default]
    Parallel,
    ParallelWith(usize),
    Sequential,
}

impl Execution {
    /// Parallel execution capped by `AOS_BENCH_THREADS` when it is set.
    pub fn from_env() -> Self {
        match std::env::var(THREADS_ENV).ok().and_then(|v| v.trim().parse::<usize>().ok()) {
            Some(n) if n > 0 => Execution::ParallelWith(n),
            _ => Execution::Parallel,
        }
    }

    fn map<T, R, F>(self, items: &[T], f: F) -> Vec<R>
    where
        T: Sync,
        R: Send,
        F: Fn(&T) -> R + Sync + Send,
    {
        match self {
            Execution::Parallel => par::map_ordered(items, f),
            Execution::ParallelWith(n) => par::map_ordered_with(items, Some(n), f),
            Execution::Sequential => par::map_sequential(items, f),
        }
    }
}

/// Runs every cell of the grid.
pub fn run_suite(spec: &BenchmarkSpec, exec: Execution) -> Result<BenchmarkReport> {
    spec.validate()?;
    let instances = spec.instances();
    let problems: Vec<QuadraticProblem> = exec
        .map(&instances, generate)
        .into_iter()
        .collect::<Result<_>>()?;

    let cells: Vec<(usize, usize)> = (0..instances.len())
        .flat_map(|i| (0..spec.methods.len()).map(move |m| (i, m)))
        .collect();
    let rows = exec
        .map(&cells, |&(i, m)| {
            let problem = &problems[i];
            let method = &spec.methods[m];
            let started = Instant::now();
            let report = run(problem, method, &spec.cfg)?;
            let ms = started.elapsed().as_secs_f64() * 1e3;
            Ok(Row::new(&instances[i], problem.dim(), method, &report, ms))
        })
        .into_iter()
        .collect::<Result<Vec<_>>>()?;

    Ok(BenchmarkReport::new(spec, rows, exec))
}

/// Runs the grid, then writes the report. The report is returned even when the
/// write fails.
pub fn run_and_write(
    spec: &BenchmarkSpec,
    exec: Execution,
    out: &PathBuf,
    format: Format,
) -> Result<(BenchmarkReport, Result<()>)> {
    let report = run_suite(spec, exec)?;
    let written = std::fs::write(out, emit(&report, format)).map_err(|source| Error::Io {
        path: out.clone(),
        source,
    });
    Ok((report, written))
}
