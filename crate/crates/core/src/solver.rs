//! The `x_{k+1} = x_k + alpha_k d_k` iteration.
//!
//! A run composes a [`DirectionRule`] with a [`StepsizeRule`]. Convergence
//! (`|g_k|_inf < tol`) is checked before each step, so the reported iteration count
//! is the number of completed steps and a start at the minimizer reports zero.
//! The gradient is recomputed from `x` every iteration rather than updated
//! incrementally.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::directions::{cg_direction, steepest, CgState, DirectionRule, QuasiNewtonState, UpdateStatus};
use crate::linalg::{all_finite, check_len, norm_inf, Vector};
use crate::quadmodel::Objective;
use crate::stepsize::{bb1, bb2, Fallback, SecantPair, StepUsed, StepsizeKind, StepsizeRule};
use crate::{Error, Result};

/// A direction rule paired with a stepsize rule under a display label.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodConfig {
    pub label: String,
    /// Column qualifier for report tables, e.g. `B0(1)`.
    pub variant: Option<String>,
    pub direction: DirectionRule,
    pub stepsize: StepsizeRule,
    /// Baseline methods may fail numerically without failing a benchmark.
    pub baseline: bool,
}

impl MethodConfig {
    pub fn new(label: impl Into<String>, direction: DirectionRule, stepsize: StepsizeRule) -> Self {
        Self {
            label: label.into(),
            variant: None,
            direction,
            stepsize,
            baseline: false,
        }
    }

    /// Steepest descent with the AOS.
    pub fn gm_aos() -> Self {
        Self::new("GM_AOS", DirectionRule::Steepest, StepsizeRule::new(StepsizeKind::Aos))
    }

    /// Dai-Yuan conjugate gradient with the AOS.
    pub fn cg_aos() -> Self {
        Self::new(
            "CG_AOS",
            DirectionRule::cg(Default::default()),
            StepsizeRule::new(StepsizeKind::Aos),
        )
    }

    /// BFGS with the AOS and `B_0 = b0_scale I`.
    pub fn bfgs_aos(b0_scale: f64) -> Self {
        Self::new("BFGS_AOS", DirectionRule::bfgs(b0_scale), StepsizeRule::new(StepsizeKind::Aos))
    }

    /// Barzilai-Borwein gradient method with the long stepsize.
    pub fn bb1() -> Self {
        Self::new("BB1", DirectionRule::Steepest, StepsizeRule::new(StepsizeKind::Bb1)).as_baseline()
    }

    /// Barzilai-Borwein gradient method with the short stepsize.
    pub fn bb2() -> Self {
        Self::new("BB2", DirectionRule::Steepest, StepsizeRule::new(StepsizeKind::Bb2)).as_baseline()
    }

    /// BFGS with unit steps and `B_0 = b0_scale I`.
    pub fn bfgs_1(b0_scale: f64) -> Self {
        Self::new(
            "BFGS_1",
            DirectionRule::bfgs(b0_scale),
            StepsizeRule::new(StepsizeKind::Unit).with_fallback(Fallback::Unit),
        )
        .as_baseline()
    }

    pub fn as_baseline(mut self) -> Self {
        self.baseline = true;
        self
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    pub fn with_variant(mut self, variant: impl Into<String>) -> Self {
        self.variant = Some(variant.into());
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.label.trim().is_empty() {
            return Err(Error::InvalidConfig("method label must not be empty".into()));
        }
        self.direction.validate()
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub enum StartPoint {
    #[default]
    AllOnes,
    Given(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    /// Tolerance on `|g|_inf`.
    pub tol: f64,
    pub max_iter: usize,
    pub x0: StartPoint,
    pub record_trace: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            tol: 1e-6,
            max_iter: 50_000,
            x0: StartPoint::AllOnes,
            record_trace: false,
        }
    }
}

impl SolverConfig {
    pub fn with_trace(mut self) -> Self {
        self.record_trace = true;
        self
    }

    pub fn with_tol(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }

    pub fn with_max_iter(mut self, max_iter: usize) -> Self {
        self.max_iter = max_iter;
        self
    }

    pub fn with_x0(mut self, x0: Vector) -> Self {
        self.x0 = StartPoint::Given(x0.iter().copied().collect());
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0) {
            return Err(Error::InvalidConfig(format!("tolerance must be positive, got {}", self.tol)));
        }
        if self.max_iter == 0 {
            return Err(Error::InvalidConfig("max_iter must be at least 1".into()));
        }
        Ok(())
    }

    fn start(&self, dim: usize) -> Result<Vector> {
        match &self.x0 {
            StartPoint::AllOnes => Ok(Vector::from_element(dim, 1.0)),
            StartPoint::Given(x) => {
                let x = Vector::from_column_slice(x);
                check_len(&x, dim)?;
                Ok(x)
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Status {
    Converged,
    MaxIter,
    NumericFailure,
}

impl Status {
    pub fn is_converged(self) -> bool {
        self == Status::Converged
    }
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Status::Converged => "CONVERGED",
            Status::MaxIter => "MAX_ITER",
            Status::NumericFailure => "NUMERIC_FAILURE",
        })
    }
}

/// Per-iteration record: the iterate `x_k` and the step taken from it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub k: usize,
    pub f: f64,
    pub grad_inf: f64,
    pub alpha: f64,
    pub rule: StepUsed,
    pub restarted: bool,
    /// BB stepsizes of the pair available at step `k`, if usable.
    pub bb1: Option<f64>,
    pub bb2: Option<f64>,
    /// `|y - H s| / |y|` for the pair produced by this step.
    pub secant_residual: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Failure {
    pub iteration: usize,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverReport {
    pub status: Status,
    pub iterations: usize,
    pub final_grad_inf_norm: f64,
    pub final_objective: f64,
    pub restarts: usize,
    pub skipped_updates: usize,
    pub fallback_steps: usize,
    pub failure: Option<Failure>,
    pub x: Vec<f64>,
    pub trace: Option<Vec<TraceRecord>>,
}

/// Everything the next step depends on.
#[derive(Debug, Clone)]
pub struct IterateState {
    pub k: usize,
    pub x: Vector,
    pub g: Vector,
    pub f: f64,
    pub pair: Option<SecantPair>,
    pub cg: Option<CgState>,
    pub qn: Option<QuasiNewtonState>,
}

impl IterateState {
    pub fn initial<P: Objective + ?Sized>(problem: &P, method: &MethodConfig, x0: Vector) -> Result<Self> {
        check_len(&x0, problem.dim())?;
        let qn = match method.direction.initial_diagonal() {
            Some(scale) => Some(QuasiNewtonState::scaled_identity(problem.dim(), scale)?),
            None => None,
        };
        Ok(Self {
            k: 0,
            g: problem.gradient(&x0)?,
            f: problem.value(&x0)?,
            x: x0,
            pair: None,
            cg: None,
            qn,
        })
    }
}

/// What a single step did.
#[derive(Debug, Clone)]
pub struct StepDiagnostics {
    pub direction: Vector,
    pub alpha: f64,
    pub used: StepUsed,
    pub restarted: bool,
    pub update: Option<UpdateStatus>,
    /// Pair that fed this step's stepsize, before it was replaced.
    pub pair_used: Option<SecantPair>,
}

/// Advances `state` by one iteration.
///
/// On error the state is left as it was before the call.
pub fn step<P: Objective + ?Sized>(
    problem: &P,
    state: &mut IterateState,
    method: &MethodConfig,
) -> Result<StepDiagnostics> {
    let g = &state.g;
    let (direction, restarted) = match method.direction {
        DirectionRule::Steepest => (steepest(g), false),
        DirectionRule::ConjugateGradient { beta } => cg_direction(g, state.cg.as_ref(), beta),
        DirectionRule::QuasiNewton { .. } => {
            let qn = state.qn.as_ref().expect("quasi-Newton state initialized");
            (qn.qn_direction(g)?, false)
        }
    };
    if !all_finite(&direction) {
        return Err(Error::NonFinite("search direction"));
    }
    let steepest_dir = matches!(method.direction, DirectionRule::Steepest);
    let (alpha, used) = method
        .stepsize
        .compute(problem, g, &direction, state.pair.as_ref(), steepest_dir)?;
    if !alpha.is_finite() {
        return Err(Error::NonFinite("stepsize"));
    }

    let x_next = &state.x + &direction * alpha;
    if !all_finite(&x_next) {
        return Err(Error::NonFinite("iterate"));
    }
    let g_next = problem.gradient(&x_next)?;
    if !all_finite(&g_next) {
        return Err(Error::NonFinite("gradient"));
    }
    let f_next = problem.value(&x_next)?;

    let pair = SecantPair::new(&x_next - &state.x, &g_next - g).ok();
    let mut qn = state.qn.clone();
    let update = match (&mut qn, &method.direction, &pair) {
        (Some(qn), DirectionRule::QuasiNewton { theta, .. }, Some(pair)) => {
            let status = qn.broyden_update(pair, *theta)?;
            if !qn.matrix().iter().all(|v| v.is_finite()) {
                return Err(Error::NonFinite("quasi-Newton matrix"));
            }
            Some(status)
        }
        (Some(_), _, None) => Some(UpdateStatus::Skipped),
        _ => None,
    };
    let cg = matches!(method.direction, DirectionRule::ConjugateGradient { .. }).then(|| CgState {
        d_prev: direction.clone(),
        g_prev: g.clone(),
    });

    let pair_used = std::mem::replace(&mut state.pair, pair);
    state.k += 1;
    state.x = x_next;
    state.g = g_next;
    state.f = f_next;
    state.cg = cg;
    state.qn = qn;
    Ok(StepDiagnostics {
        direction,
        alpha,
        used,
        restarted,
        update,
        pair_used,
    })
}

/// Runs `method` from `cfg.x0` until convergence, the iteration cap, or a
/// numerical failure. Numerical trouble is reported through the status, never
/// as an error; errors are reserved for invalid configurations.
pub fn run<P: Objective + ?Sized>(problem: &P, method: &MethodConfig, cfg: &SolverConfig) -> Result<SolverReport> {
    method.validate()?;
    cfg.validate()?;
    let x0 = cfg.start(problem.dim())?;
    let mut state = IterateState::initial(problem, method, x0)?;

    let mut trace = cfg.record_trace.then(Vec::new);
    let mut restarts = 0;
    let mut skipped_updates = 0;
    let mut fallback_steps = 0;
    let mut failure = None;

    let status = loop {
        if !(all_finite(&state.x) && all_finite(&state.g) && state.f.is_finite()) {
            failure = Some(Failure {
                iteration: state.k,
                reason: "non-finite iterate".into(),
            });
            break Status::NumericFailure;
        }
        let grad_inf = norm_inf(&state.g);
        if grad_inf < cfg.tol {
            break Status::Converged;
        }
        if state.k >= cfg.max_iter {
            break Status::MaxIter;
        }
        let (k, f, x_prev) = (state.k, state.f, trace.as_ref().map(|_| state.x.clone()));
        let g_prev = trace.as_ref().map(|_| state.g.clone());
        match step(problem, &mut state, method) {
            Ok(diag) => {
                restarts += usize::from(diag.restarted);
                fallback_steps += usize::from(diag.used.fallback);
                skipped_updates += usize::from(diag.update == Some(UpdateStatus::Skipped));
                if let Some(trace) = trace.as_mut() {
                    let usable = diag.pair_used.as_ref().filter(|p| !p.is_degenerate());
                    let secant_residual = match (x_prev, g_prev) {
                        (Some(xp), Some(gp)) => {
                            let s = &state.x - xp;
                            let y = &state.g - gp;
                            let hs = problem.hessian_apply(&s)?;
                            let ny = y.norm();
                            (ny > 0.0).then(|| (&y - hs).norm() / ny)
                        }
                        _ => None,
                    };
                    trace.push(TraceRecord {
                        k,
                        f,
                        grad_inf,
                        alpha: diag.alpha,
                        rule: diag.used,
                        restarted: diag.restarted,
                        bb1: usable.and_then(|p| bb1(p).ok()),
                        bb2: usable.and_then(|p| bb2(p).ok()),
                        secant_residual,
                    });
                }
            }
            Err(e) => {
                failure = Some(Failure {
                    iteration: k,
                    reason: e.to_string(),
                });
                break Status::NumericFailure;
            }
        }
    };

    Ok(SolverReport {
        status,
        iterations: state.k,
        final_grad_inf_norm: norm_inf(&state.g),
        final_objective: state.f,
        restarts,
        skipped_updates,
        fallback_steps,
        failure,
        x: state.x.iter().copied().collect(),
        trace,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::directions::{beta, BetaVariant};
    use crate::quadmodel::{generate, ProblemSpec, QuadraticProblem};
    use crate::stepsize::exact_stepsize;
    use approx::assert_relative_eq;

    fn v(xs: &[f64]) -> Vector {
        Vector::from_column_slice(xs)
    }

    fn diag(xs: &[f64]) -> QuadraticProblem {
        QuadraticProblem::diagonal(v(xs), Vector::zeros(xs.len())).unwrap()
    }

    #[test]
    fn exact_gradient_step_on_identity_lands_on_minimizer() {
        let p = diag(&[1.0, 1.0]);
        let method = MethodConfig::new("GM", DirectionRule::Steepest, StepsizeRule::new(StepsizeKind::Exact));
        let mut state = IterateState::initial(&p, &method, v(&[1.0, 1.0])).unwrap();
        let d = step(&p, &mut state, &method).unwrap();
        assert_eq!(d.alpha, 1.0);
        assert_eq!(state.x, Vector::zeros(2));
        let report = run(&p, &method, &SolverConfig::default()).unwrap();
        assert_eq!((report.status, report.iterations), (Status::Converged, 1));
    }

    #[test]
    fn first_aos_step_uses_exact_fallback() {
        let p = diag(&[1.0, 2.0]);
        let method = MethodConfig::gm_aos();
        let mut state = IterateState::initial(&p, &method, v(&[1.0, 1.0])).unwrap();
        let g = state.g.clone();
        let expected = exact_stepsize(&p, &g, &-&g).unwrap();
        let d = step(&p, &mut state, &method).unwrap();
        assert_eq!(d.alpha, expected);
        assert!(d.used.fallback);
        let d = step(&p, &mut state, &method).unwrap();
        assert_eq!(d.used, StepUsed { kind: StepsizeKind::Aos, fallback: false });
    }

    #[test]
    fn cg_second_direction_by_hand() {
        // A = diag(1, 2), x0 = (1, 1): g0 = (1, 2), alpha0 = 5/9.
        let p = diag(&[1.0, 2.0]);
        let method = MethodConfig::cg_aos();
        let mut state = IterateState::initial(&p, &method, v(&[1.0, 1.0])).unwrap();
        step(&p, &mut state, &method).unwrap();
        let x1 = v(&[1.0 - 5.0 / 9.0, 1.0 - 10.0 / 9.0]);
        assert_relative_eq!(state.x, x1, max_relative = 1e-15);
        let g1 = v(&[4.0 / 9.0, -2.0 / 9.0]);
        assert_relative_eq!(state.g, g1, max_relative = 1e-14);
        // y0 = g1 - g0 = (-5/9, -20/9), d0'y0 = 5/9 + 40/9 = 5, beta_DY = |g1|^2 / 5 = 4/81.
        let b = beta(BetaVariant::Dy, &state.g, state.cg.as_ref().unwrap()).unwrap();
        assert_relative_eq!(b, 4.0 / 81.0, max_relative = 1e-14);
        let d = step(&p, &mut state, &method).unwrap();
        let expected = -&g1 + v(&[-1.0, -2.0]) * (4.0 / 81.0);
        assert_relative_eq!(d.direction, expected, max_relative = 1e-13);
    }

    #[test]
    fn start_at_minimizer_reports_zero_iterations() {
        let p = generate(&ProblemSpec::p2(5, 1)).unwrap();
        let xs = p.minimizer().unwrap();
        let report = run(&p, &MethodConfig::cg_aos(), &SolverConfig::default().with_x0(xs)).unwrap();
        assert_eq!((report.status, report.iterations), (Status::Converged, 0));
    }

    #[test]
    fn max_iter_is_respected() {
        let p = generate(&ProblemSpec::p1(100)).unwrap();
        let report = run(&p, &MethodConfig::bb1(), &SolverConfig::default().with_max_iter(7)).unwrap();
        assert_eq!((report.status, report.iterations), (Status::MaxIter, 7));
        assert!(report.final_grad_inf_norm >= 1e-6);
    }

    #[test]
    fn exact_gradient_descent_is_monotone() {
        let p = generate(&ProblemSpec::p3(20, 4).with_condition_target(50.0)).unwrap();
        let method = MethodConfig::new("GM", DirectionRule::Steepest, StepsizeRule::new(StepsizeKind::Exact));
        let report = run(&p, &method, &SolverConfig::default().with_trace()).unwrap();
        assert!(report.status.is_converged());
        let trace = report.trace.unwrap();
        for w in trace.windows(2) {
            assert!(w[1].f < w[0].f);
        }
        assert!(report.final_objective < trace.last().unwrap().f);
    }

    #[test]
    fn trace_records_secant_residual() {
        for spec in [ProblemSpec::p3(40, 2), ProblemSpec::p1(50)] {
            let p = generate(&spec).unwrap();
            let report = run(&p, &MethodConfig::gm_aos(), &SolverConfig::default().with_trace()).unwrap();
            let trace = report.trace.unwrap();
            assert_eq!(trace.len(), report.iterations);
            for r in &trace {
                let res = r.secant_residual.unwrap();
                assert!(res < 1e-10, "{:?} k={} residual {res}", spec.family, r.k);
            }
            assert!(trace[0].bb1.is_none() && trace[1].bb1.is_some());
        }
    }

    #[test]
    fn invalid_configs_are_errors() {
        let p = diag(&[1.0, 2.0]);
        assert!(run(&p, &MethodConfig::gm_aos(), &SolverConfig::default().with_tol(0.0)).is_err());
        assert!(run(&p, &MethodConfig::gm_aos(), &SolverConfig::default().with_max_iter(0)).is_err());
        assert!(run(&p, &MethodConfig::gm_aos().with_label(" "), &SolverConfig::default()).is_err());
        assert!(run(&p, &MethodConfig::gm_aos(), &SolverConfig::default().with_x0(v(&[1.0]))).is_err());
    }

    #[test]
    fn unit_bfgs_with_tiny_b0_blows_up() {
        let p = generate(&ProblemSpec::p1(100)).unwrap();
        let report = run(&p, &MethodConfig::bfgs_1(1e-3), &SolverConfig::default()).unwrap();
        assert_eq!(report.status, Status::NumericFailure);
        assert!(report.failure.is_some());
    }
}
