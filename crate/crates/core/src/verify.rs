//! Randomized self-checks of the stepsize, spectral and update invariants.
//!
//! Each check draws its own inputs from a seeded generator, so a run is
//! reproducible. Trials are independent and run on the data-parallel map.

use nalgebra::SymmetricEigen;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::directions::QuasiNewtonState;
use crate::linalg::{Cholesky, Matrix, Vector};
use crate::quadmodel::QuadraticProblem;
use crate::solver::{run, MethodConfig, SolverConfig, Status};
use crate::spectra::{assemble_bbar, bbar_extreme_eigs};
use crate::stepsize::{aos_stepsize, bb1, bb2, bbar_quadratic_form, exact_stepsize, gm_aos_stepsize, SecantPair};
use crate::{directions, par};

#[derive(Debug, Clone, PartialEq)]
pub struct VerifyOptions {
    pub seed: u64,
    /// Trials for the cheap scalar checks; the dense checks use a tenth.
    pub trials: usize,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        Self {
            seed: 0x5eed,
            trials: 10_000,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CheckOutcome {
    pub name: &'static str,
    pub trials: usize,
    pub failures: usize,
    /// Largest observed error metric, relative to the check's tolerance scale.
    pub worst: f64,
    pub tolerance: f64,
    pub first_failure: Option<String>,
}

impl CheckOutcome {
    pub fn passed(&self) -> bool {
        self.failures == 0
    }
}

/// Result of one trial: the error metric, or a hard failure message.
type Trial = Result<f64, String>;

fn check<F>(name: &'static str, trials: usize, tolerance: f64, seed: u64, f: F) -> CheckOutcome
where
    F: Fn(&mut ChaCha8Rng) -> Trial + Sync + Send,
{
    let ids: Vec<u64> = (0..trials as u64).collect();
    let results = par::map_ordered(&ids, |&i| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(i);
        f(&mut rng)
    });
    let mut worst = 0.0_f64;
    let mut failures = 0;
    let mut first_failure = None;
    for (i, r) in results.into_iter().enumerate() {
        let bad = match r {
            Ok(err) => {
                worst = worst.max(err);
                (!(err <= tolerance)).then(|| format!("trial {i}: error {err:e}"))
            }
            Err(msg) => Some(format!("trial {i}: {msg}")),
        };
        if let Some(msg) = bad {
            failures += 1;
            first_failure.get_or_insert(msg);
        }
    }
    CheckOutcome {
        name,
        trials,
        failures,
        worst,
        tolerance,
        first_failure,
    }
}

pub fn random_vector(rng: &mut impl Rng, n: usize) -> Vector {
    Vector::from_fn(n, |_, _| rng.random_range(-1.0..1.0))
}

/// Random pair with `s'y > 0` and `s`, `y` not parallel.
pub fn random_pair(rng: &mut impl Rng, n: usize) -> SecantPair {
    loop {
        let s = random_vector(rng, n);
        let mut y = random_vector(rng, n);
        let sy = s.dot(&y);
        if sy.abs() < 1e-3 * s.norm() * y.norm() {
            continue;
        }
        if sy < 0.0 {
            y = -y;
        }
        if let Ok(p) = SecantPair::new(s, y) {
            return p;
        }
    }
}

/// `M'M + n I` with `M` uniform on `[-1, 1]`.
pub fn random_spd(rng: &mut impl Rng, n: usize) -> Matrix {
    let m = Matrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
    m.tr_mul(&m) + Matrix::identity(n, n) * n as f64
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
}

fn ok_or<T, E: std::fmt::Display>(r: Result<T, E>) -> Result<T, String> {
    r.map_err(|e| e.to_string())
}

pub fn run_all(opts: &VerifyOptions) -> Vec<CheckOutcome> {
    let trials = opts.trials.max(1);
    let dense = (trials / 10).max(1);
    let seed = opts.seed;
    vec![
        check("sandwich: bb2/2 < aos < 2 bb1", trials, 0.0, seed, |rng| {
            let n = rng.random_range(2..=50);
            let pair = random_pair(rng, n);
            let g = random_vector(rng, n);
            let a = ok_or(gm_aos_stepsize(&g, &pair))?;
            let (b1, b2) = (ok_or(bb1(&pair))?, ok_or(bb2(&pair))?);
            if 0.5 * b2 < a && a < 2.0 * b1 && b2 <= b1 {
                Ok(0.0)
            } else {
                Err(format!("aos {a} outside ({}, {})", 0.5 * b2, 2.0 * b1))
            }
        }),
        check("gradient form equals general form at d = -g", trials, 1e-14, seed ^ 1, |rng| {
            let n = rng.random_range(2..=50);
            let pair = random_pair(rng, n);
            let g = random_vector(rng, n);
            Ok(rel(ok_or(aos_stepsize(&g, &-&g, &pair))?, ok_or(gm_aos_stepsize(&g, &pair))?))
        }),
        check("closed-form d'Bd equals assembled matrix", dense, 1e-10, seed ^ 2, |rng| {
            let n = rng.random_range(2..=20);
            let pair = random_pair(rng, n);
            let d = random_vector(rng, n);
            let assembled = d.dot(&(assemble_bbar(&pair) * &d));
            Ok(rel(ok_or(bbar_quadratic_form(&d, &pair))?, assembled))
        }),
        check("parallel pair collapses to c |d|^2", trials, 1e-12, seed ^ 3, |rng| {
            let n = rng.random_range(2..=50);
            let s = random_vector(rng, n);
            let c = 10f64.powf(rng.random_range(-3.0..3.0));
            let pair = ok_or(SecantPair::new(s.clone(), &s * c))?;
            let d = random_vector(rng, n);
            Ok(rel(ok_or(bbar_quadratic_form(&d, &pair))?, c * d.dot(&d)))
        }),
        check("closed-form extreme eigenvalues match dense eigensolve", dense, 1e-8, seed ^ 4, |rng| {
            let n = rng.random_range(2..=20);
            let pair = random_pair(rng, n);
            let bounds = ok_or(bbar_extreme_eigs(&pair))?;
            let eig = SymmetricEigen::new(assemble_bbar(&pair)).eigenvalues;
            let (b1, b2) = (ok_or(bb1(&pair))?, ok_or(bb2(&pair))?);
            if !(bounds.lambda_max < 2.0 / b2 && bounds.lambda_min > 1.0 / (2.0 * b1)) {
                return Err(format!("strict bounds violated: {bounds:?}"));
            }
            Ok(rel(bounds.lambda_min, eig.min()).max(rel(bounds.lambda_max, eig.max())))
        }),
        check("Rayleigh quotient within extreme eigenvalues", trials, 1e-12, seed ^ 5, |rng| {
            let n = rng.random_range(2..=50);
            let pair = random_pair(rng, n);
            let d = random_vector(rng, n);
            let q = ok_or(bbar_quadratic_form(&d, &pair))? / d.dot(&d);
            let b = ok_or(bbar_extreme_eigs(&pair))?;
            Ok(((b.lambda_min - q) / b.lambda_min).max((q - b.lambda_max) / b.lambda_max).max(0.0))
        }),
        check("Broyden update: secant condition and SPD", dense, 1e-8, seed ^ 6, |rng| {
            let n = rng.random_range(2..=30);
            let b = random_spd(rng, n);
            let s = random_vector(rng, n);
            let y = random_spd(rng, n) * &s;
            let pair = ok_or(SecantPair::new(s, y))?;
            let mut worst = 0.0_f64;
            for theta in [0.0, 0.5, 1.0] {
                let mut qn = ok_or(QuasiNewtonState::from_matrix(b.clone()))?;
                ok_or(qn.broyden_update(&pair, theta))?;
                ok_or(Cholesky::new(qn.matrix()))?;
                let scale = qn.matrix().norm() * pair.s().norm() + pair.y().norm();
                worst = worst.max((qn.matrix() * pair.s() - pair.y()).norm() / scale);
            }
            Ok(worst)
        }),
        check("AOS equals exact step on scaled-identity problems", 30, 1e-10, seed ^ 7, |rng| {
            let n = rng.random_range(2..=50);
            let c = [1e-3, 1.0, 1e3][rng.random_range(0..3)];
            let p = ok_or(QuadraticProblem::diagonal(Vector::from_element(n, c), random_vector(rng, n)))?;
            let cfg = SolverConfig {
                x0: crate::solver::StartPoint::Given(random_vector(rng, n).iter().copied().collect()),
                ..SolverConfig::default()
            };
            let report = ok_or(run(&p, &MethodConfig::gm_aos(), &cfg.with_trace()))?;
            if !(report.status == Status::Converged && report.iterations <= 2) {
                return Err(format!("{} after {} iterations", report.status, report.iterations));
            }
            let g = random_vector(rng, n);
            let s = random_vector(rng, n);
            let pair = ok_or(SecantPair::new(s.clone(), s * c))?;
            let d = -&g + random_vector(rng, n) * 0.1;
            if g.dot(&d) >= 0.0 {
                return Ok(0.0);
            }
            Ok(rel(ok_or(aos_stepsize(&g, &d, &pair))?, ok_or(exact_stepsize(&p, &g, &d))?))
        }),
        check("exact-step CG terminates in n + 2 iterations", dense.min(200), 0.0, seed ^ 8, |rng| {
            let n = rng.random_range(2..=20);
            let p = ok_or(QuadraticProblem::dense(random_spd(rng, n), random_vector(rng, n)))?;
            let beta = [
                directions::BetaVariant::Fr,
                directions::BetaVariant::Hs,
                directions::BetaVariant::Prp,
                directions::BetaVariant::Dy,
            ][rng.random_range(0..4)];
            let method = MethodConfig::new(
                "CG",
                directions::DirectionRule::cg(beta),
                crate::stepsize::StepsizeRule::new(crate::stepsize::StepsizeKind::Exact),
            );
            let report = ok_or(run(&p, &method, &SolverConfig::default()))?;
            if report.status == Status::Converged && report.iterations <= n + 2 {
                Ok(0.0)
            } else {
                Err(format!("{beta} n={n}: {} after {}", report.status, report.iterations))
            }
        }),
    ]
}
