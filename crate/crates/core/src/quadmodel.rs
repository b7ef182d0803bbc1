//! Strictly convex quadratic objectives `f(x) = x'Ax / 2 - b'x` and the three
//! benchmark problem families.

use std::fmt;
use std::path::PathBuf;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::linalg::{check_len, symmetrize_from_lower, Cholesky, Matrix, Vector};
use crate::{mmio, Error, Result};

/// Objective interface the solver is written against.
///
/// Quadratic structure is a property of the implementor: the solver only asks for
/// values, gradients and the curvature `d' H d` used by the exact stepsize.
pub trait Objective {
    fn dim(&self) -> usize;
    fn value(&self, x: &Vector) -> Result<f64>;
    fn gradient(&self, x: &Vector) -> Result<Vector>;
    /// Curvature `d' H d` along `d`.
    fn curvature(&self, d: &Vector) -> Result<f64>;
    /// Hessian-vector product `H v`.
    fn hessian_apply(&self, v: &Vector) -> Result<Vector>;
}

/// The Hessian of a quadratic problem.
///
/// Diagonal problems are never densified.
#[derive(Debug, Clone, PartialEq)]
pub enum Operator {
    Diagonal(Vector),
    Dense(Matrix),
}

impl Operator {
    pub fn dim(&self) -> usize {
        match self {
            Operator::Diagonal(d) => d.len(),
            Operator::Dense(m) => m.nrows(),
        }
    }

    pub fn apply(&self, x: &Vector) -> Vector {
        match self {
            Operator::Diagonal(d) => d.component_mul(x),
            Operator::Dense(m) => m * x,
        }
    }

    pub fn to_dense(&self) -> Matrix {
        match self {
            Operator::Diagonal(d) => Matrix::from_diagonal(d),
            Operator::Dense(m) => m.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuadraticProblem {
    operator: Operator,
    rhs: Vector,
}

impl QuadraticProblem {
    /// Diagonal problem; every diagonal entry must be positive.
    pub fn diagonal(diag: Vector, rhs: Vector) -> Result<Self> {
        check_len(&rhs, diag.len())?;
        if diag.is_empty() {
            return Err(Error::InvalidConfig("empty problem".into()));
        }
        if let Some((index, &pivot)) = diag
            .iter()
            .enumerate()
            .find(|(_, v)| !(**v > 0.0 && v.is_finite()))
        {
            return Err(Error::NotPositiveDefinite { index, pivot });
        }
        Ok(Self {
            operator: Operator::Diagonal(diag),
            rhs,
        })
    }

    /// Dense problem built from the lower triangle of `matrix`.
    ///
    /// The upper triangle is overwritten with the lower one and a Cholesky
    /// factorization must succeed.
    pub fn dense(mut matrix: Matrix, rhs: Vector) -> Result<Self> {
        let n = matrix.nrows();
        if matrix.ncols() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                actual: matrix.ncols(),
            });
        }
        if n == 0 {
            return Err(Error::InvalidConfig("empty problem".into()));
        }
        check_len(&rhs, n)?;
        symmetrize_from_lower(&mut matrix);
        Cholesky::new(&matrix)?;
        Ok(Self {
            operator: Operator::Dense(matrix),
            rhs,
        })
    }

    pub fn dim(&self) -> usize {
        self.rhs.len()
    }

    pub fn operator(&self) -> &Operator {
        &self.operator
    }

    pub fn rhs(&self) -> &Vector {
        &self.rhs
    }

    pub fn eval_objective(&self, x: &Vector) -> Result<f64> {
        check_len(x, self.dim())?;
        let ax = self.operator.apply(x);
        Ok(0.5 * x.dot(&ax) - self.rhs.dot(x))
    }

    pub fn eval_gradient(&self, x: &Vector) -> Result<Vector> {
        check_len(x, self.dim())?;
        Ok(self.operator.apply(x) - &self.rhs)
    }

    /// The unique minimizer `A^{-1} b`.
    pub fn minimizer(&self) -> Result<Vector> {
        match &self.operator {
            Operator::Diagonal(d) => Ok(self.rhs.component_div(d)),
            Operator::Dense(m) => Ok(Cholesky::new(m)?.solve(&self.rhs)),
        }
    }
}

impl Objective for QuadraticProblem {
    fn dim(&self) -> usize {
        QuadraticProblem::dim(self)
    }

    fn value(&self, x: &Vector) -> Result<f64> {
        self.eval_objective(x)
    }

    fn gradient(&self, x: &Vector) -> Result<Vector> {
        self.eval_gradient(x)
    }

    fn curvature(&self, d: &Vector) -> Result<f64> {
        check_len(d, self.dim())?;
        Ok(match &self.operator {
            Operator::Diagonal(a) => a.iter().zip(d.iter()).map(|(a, d)| a * d * d).sum(),
            Operator::Dense(m) => d.dot(&(m * d)),
        })
    }

    fn hessian_apply(&self, v: &Vector) -> Result<Vector> {
        check_len(v, self.dim())?;
        Ok(self.operator.apply(v))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Family {
    P1,
    P2,
    P3,
    File,
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Family::P1 => "P1",
            Family::P2 => "P2",
            Family::P3 => "P3",
            Family::File => "FILE",
        })
    }
}

impl Family {
    /// Whether instances depend on the seed.
    pub fn is_seeded(self) -> bool {
        matches!(self, Family::P2 | Family::P3)
    }
}

pub const DEFAULT_CONDITION_TARGET: f64 = 1e5;
pub const DEFAULT_P2_OFFSET: f64 = 0.5;
const P2_MAX_RETRIES: u64 = 5;

/// Recipe for a benchmark problem instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProblemSpec {
    pub family: Family,
    pub dim: usize,
    /// Ignored by P1 and FILE.
    pub seed: u64,
    /// P3 only: `a_11`, the condition number of the generated matrix.
    pub condition_target: f64,
    /// P2 only: `D = 100 (U - offset)` with `U` uniform on `[0, 1)`.
    pub p2_offset: f64,
    pub matrix_path: Option<PathBuf>,
    pub rhs_path: Option<PathBuf>,
}

impl ProblemSpec {
    fn base(family: Family, dim: usize, seed: u64) -> Self {
        Self {
            family,
            dim,
            seed,
            condition_target: DEFAULT_CONDITION_TARGET,
            p2_offset: DEFAULT_P2_OFFSET,
            matrix_path: None,
            rhs_path: None,
        }
    }

    pub fn p1(dim: usize) -> Self {
        Self::base(Family::P1, dim, 0)
    }

    pub fn p2(dim: usize, seed: u64) -> Self {
        Self::base(Family::P2, dim, seed)
    }

    pub fn p3(dim: usize, seed: u64) -> Self {
        Self::base(Family::P3, dim, seed)
    }

    /// File-backed problem; `dim` is filled in from the matrix header on load.
    pub fn file(matrix: impl Into<PathBuf>, rhs: impl Into<PathBuf>) -> Self {
        Self {
            matrix_path: Some(matrix.into()),
            rhs_path: Some(rhs.into()),
            ..Self::base(Family::File, 0, 0)
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_condition_target(mut self, kappa: f64) -> Self {
        self.condition_target = kappa;
        self
    }

    pub fn with_p2_offset(mut self, offset: f64) -> Self {
        self.p2_offset = offset;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.family != Family::File && self.dim < 2 {
            return Err(Error::InvalidConfig(format!(
                "problem dimension must be at least 2, got {}",
                self.dim
            )));
        }
        if !(self.condition_target >= 1.0 && self.condition_target.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "condition target must be >= 1, got {}",
                self.condition_target
            )));
        }
        if !self.p2_offset.is_finite() {
            return Err(Error::InvalidConfig("P2 offset must be finite".into()));
        }
        if self.family == Family::File && (self.matrix_path.is_none() || self.rhs_path.is_none())
        {
            return Err(Error::InvalidConfig(
                "file problems need both a matrix and a right-hand side path".into(),
            ));
        }
        Ok(())
    }
}

/// Builds the problem instance described by `spec`. Deterministic in `spec`.
pub fn generate(spec: &ProblemSpec) -> Result<QuadraticProblem> {
    spec.validate()?;
    let n = spec.dim;
    match spec.family {
        Family::P1 => {
            let diag = Vector::from_fn(n, |i, _| if i == 0 { 0.001 } else { i as f64 });
            QuadraticProblem::diagonal(diag, Vector::zeros(n))
        }
        Family::P2 => {
            let mut last = None;
            for attempt in 0..=P2_MAX_RETRIES {
                match p2_instance(n, spec.seed.wrapping_add(attempt), spec.p2_offset) {
                    Ok(p) => return Ok(p),
                    Err(e) => last = Some(e),
                }
            }
            Err(last.expect("at least one attempt"))
        }
        Family::P3 => {
            let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
            let top = spec.condition_target;
            let bottom = 1.0;
            let diag = Vector::from_fn(n, |i, _| {
                if i == 0 {
                    top
                } else if i == n - 1 {
                    bottom
                } else {
                    bottom + (top - bottom) * rng.random::<f64>()
                }
            });
            QuadraticProblem::diagonal(diag, Vector::zeros(n))
        }
        Family::File => {
            let (Some(mpath), Some(rpath)) = (&spec.matrix_path, &spec.rhs_path) else {
                unreachable!("validated above");
            };
            let operator = mmio::read_symmetric(mpath)?;
            let rhs = mmio::read_vector(rpath)?;
            match operator {
                Operator::Diagonal(d) => QuadraticProblem::diagonal(d, rhs),
                Operator::Dense(m) => QuadraticProblem::dense(m, rhs),
            }
        }
    }
}

fn p2_instance(n: usize, seed: u64, offset: f64) -> Result<QuadraticProblem> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // Column-major fill, then b.
    let d = Matrix::from_fn(n, n, |_, _| 100.0 * (rng.random::<f64>() - offset));
    let b = Vector::from_fn(n, |_, _| 100.0 * (rng.random::<f64>() - 0.5));
    let dtd = d.tr_mul(&d);
    let a = (&dtd + dtd.transpose()) * 0.5;
    QuadraticProblem::dense(a, b)
}
