//! End-to-end solver behaviour on the generated problem families.

use aos_core::directions::{BetaVariant, DirectionRule};
use aos_core::linalg::{norm_inf, Matrix, Vector};
use aos_core::mmio;
use aos_core::quadmodel::{generate, Operator, ProblemSpec, QuadraticProblem};
use aos_core::solver::{run, step, IterateState, MethodConfig, SolverConfig, Status};
use aos_core::stepsize::{StepsizeKind, StepsizeRule};

fn gm_aos_trace(spec: &ProblemSpec) -> Vec<aos_core::solver::TraceRecord> {
    let problem = generate(spec).unwrap();
    let report = run(&problem, &MethodConfig::gm_aos(), &SolverConfig::default().with_trace()).unwrap();
    assert_eq!(report.status, Status::Converged, "{spec:?}");
    report.trace.unwrap()
}

#[test]
fn gm_aos_converges_on_p1_and_p3() {
    for spec in [ProblemSpec::p1(100), ProblemSpec::p1(1000), ProblemSpec::p3(100, 0), ProblemSpec::p3(1000, 3)] {
        let problem = generate(&spec).unwrap();
        let report = run(&problem, &MethodConfig::gm_aos(), &SolverConfig::default()).unwrap();
        assert_eq!(report.status, Status::Converged, "{spec:?}");
        assert!(report.final_grad_inf_norm < 1e-6);
    }
}

#[test]
fn traced_gm_aos_steps_respect_bb_sandwich() {
    for spec in [ProblemSpec::p1(100), ProblemSpec::p3(200, 1)] {
        let trace = gm_aos_trace(&spec);
        assert!(trace[0].rule.fallback, "first step has no pair");
        for r in &trace[1..] {
            if r.rule.fallback {
                continue;
            }
            let (b1, b2) = (r.bb1.unwrap(), r.bb2.unwrap());
            assert!(0.5 * b2 <= r.alpha && r.alpha <= 2.0 * b1, "k={} alpha={} bb1={b1} bb2={b2}", r.k, r.alpha);
        }
    }
}

#[test]
fn gm_aos_gradient_norm_contracts_over_some_window() {
    let trace = gm_aos_trace(&ProblemSpec::p1(500));
    let window = 50;
    assert!(trace.len() > window);
    let best = (0..trace.len() - window)
        .map(|k| (trace[k + window].grad_inf / trace[k].grad_inf).powf(1.0 / window as f64))
        .fold(f64::INFINITY, f64::min);
    assert!(best < 1.0, "best window contraction {best}");
}

#[test]
fn runs_are_deterministic() {
    let problem = generate(&ProblemSpec::p2(60, 4)).unwrap();
    let cfg = SolverConfig::default().with_trace();
    for method in [MethodConfig::cg_aos(), MethodConfig::bb1(), MethodConfig::bfgs_aos(1.0)] {
        let a = run(&problem, &method, &cfg).unwrap();
        let b = run(&problem, &method, &cfg).unwrap();
        assert_eq!(a, b);
    }
}

#[test]
fn beta_variants_coincide_under_exact_steps() {
    let problem = generate(&ProblemSpec::p3(12, 9).with_condition_target(50.0)).unwrap();
    let x0 = Vector::from_element(12, 1.0);
    let mut iterates = Vec::new();
    for beta in [BetaVariant::Fr, BetaVariant::Hs, BetaVariant::Prp, BetaVariant::Dy] {
        let method = MethodConfig::new("CG", DirectionRule::cg(beta), StepsizeRule::new(StepsizeKind::Exact));
        let mut state = IterateState::initial(&problem, &method, x0.clone()).unwrap();
        let mut xs = Vec::new();
        for _ in 0..6 {
            step(&problem, &mut state, &method).unwrap();
            xs.push(state.x.clone());
        }
        iterates.push(xs);
    }
    for other in &iterates[1..] {
        for (a, b) in iterates[0].iter().zip(other) {
            assert!((a - b).norm() <= 1e-9 * a.norm().max(1.0));
        }
    }
}

#[test]
fn exact_step_cg_directions_are_conjugate_early_on() {
    let m = Matrix::from_fn(8, 8, |i, j| (((i + 1) * (j + 2)) as f64).sin());
    let a = m.transpose() * &m + Matrix::identity(8, 8);
    let problem = QuadraticProblem::dense(a.clone(), Vector::from_element(8, 1.0)).unwrap();
    let method = MethodConfig::new("CG", DirectionRule::cg(BetaVariant::Dy), StepsizeRule::new(StepsizeKind::Exact));
    let mut state = IterateState::initial(&problem, &method, Vector::zeros(8)).unwrap();
    let mut dirs = Vec::new();
    for _ in 0..4 {
        dirs.push(step(&problem, &mut state, &method).unwrap().direction);
    }
    for i in 0..dirs.len() {
        for j in 0..i {
            let c = dirs[i].dot(&(&a * &dirs[j])).abs()
                / (dirs[i].dot(&(&a * &dirs[i])) * dirs[j].dot(&(&a * &dirs[j]))).sqrt();
            assert!(c < 1e-10, "d{i}, d{j}: {c}");
        }
    }
    assert!(norm_inf(&state.g) > 1e-6, "still short of convergence");
}

#[test]
fn file_problem_matches_generated_instance() {
    let dir = tempfile::tempdir().unwrap();
    let generated = generate(&ProblemSpec::p2(20, 7)).unwrap();
    let (matrix, rhs) = (dir.path().join("a.mtx"), dir.path().join("b.txt"));
    mmio::write_symmetric(generated.operator(), &matrix).unwrap();
    mmio::write_vector(generated.rhs(), &rhs).unwrap();

    let loaded = generate(&ProblemSpec::file(&matrix, &rhs)).unwrap();
    assert_eq!(loaded.operator().to_dense(), generated.operator().to_dense());
    assert_eq!(loaded.rhs(), generated.rhs());

    let cfg = SolverConfig::default();
    let a = run(&generated, &MethodConfig::cg_aos(), &cfg).unwrap();
    let b = run(&loaded, &MethodConfig::cg_aos(), &cfg).unwrap();
    assert_eq!(a.iterations, b.iterations);
    assert_eq!(a.status, Status::Converged);
}

#[test]
fn diagonal_file_round_trips_as_diagonal() {
    let dir = tempfile::tempdir().unwrap();
    let problem = generate(&ProblemSpec::p1(30)).unwrap();
    let path = dir.path().join("p1.mtx");
    mmio::write_symmetric(problem.operator(), &path).unwrap();
    assert!(matches!(mmio::read_symmetric(&path).unwrap(), Operator::Diagonal(_)));
}

#[test]
fn missing_file_is_an_io_error() {
    let dir = tempfile::tempdir().unwrap();
    let spec = ProblemSpec::file(dir.path().join("nope.mtx"), dir.path().join("nope.txt"));
    assert!(matches!(generate(&spec), Err(aos_core::Error::Io { .. })));
}

#[test]
fn bfgs_aos_survives_where_unit_steps_fail() {
    let problem = generate(&ProblemSpec::p1(100)).unwrap();
    let mut aos = MethodConfig::bfgs_aos(1000.0);
    let mut unit = MethodConfig::bfgs_1(1000.0);
    for m in [&mut aos, &mut unit] {
        if let DirectionRule::QuasiNewton { b0_convention, .. } = &mut m.direction {
            *b0_convention = aos_core::directions::B0Convention::Inverse;
        }
    }
    let cfg = SolverConfig::default();
    assert_eq!(run(&problem, &unit, &cfg).unwrap().status, Status::NumericFailure);
    assert_eq!(run(&problem, &aos, &cfg).unwrap().status, Status::Converged);
}
