//! Search directions: steepest descent, nonlinear conjugate gradient and the
//! Broyden family of quasi-Newton updates.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::linalg::{Cholesky, Matrix, Vector};
use crate::stepsize::SecantPair;
use crate::{Error, Result};

/// Conjugate-gradient denominators at or below this magnitude trigger a restart.
pub const BETA_DENOM_TOL: f64 = 1e-30;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub enum BetaVariant {
    Fr,
    Hs,
    Prp,
    #[default]
    Dy,
}

impl fmt::Display for BetaVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BetaVariant::Fr => "FR",
            BetaVariant::Hs => "HS",
            BetaVariant::Prp => "PRP",
            BetaVariant::Dy => "DY",
        })
    }
}

/// How `b0_scale` defines the initial quasi-Newton matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub enum B0Convention {
    /// `B_0 = scale * I`.
    #[default]
    Hessian,
    /// The scale sets the inverse approximation, `B_0^{-1} = scale * I`.
    Inverse,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum DirectionRule {
    Steepest,
    ConjugateGradient {
        beta: BetaVariant,
    },
    QuasiNewton {
        /// 0 is BFGS, 1 is DFP.
        theta: f64,
        b0_scale: f64,
        b0_convention: B0Convention,
    },
}

impl DirectionRule {
    pub fn cg(beta: BetaVariant) -> Self {
        DirectionRule::ConjugateGradient { beta }
    }

    pub fn bfgs(b0_scale: f64) -> Self {
        DirectionRule::QuasiNewton {
            theta: 0.0,
            b0_scale,
            b0_convention: B0Convention::Hessian,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if let DirectionRule::QuasiNewton { theta, b0_scale, .. } = *self {
            if !(0.0..=1.0).contains(&theta) {
                return Err(Error::InvalidConfig(format!("theta must lie in [0, 1], got {theta}")));
            }
            if !(b0_scale > 0.0 && b0_scale.is_finite()) {
                return Err(Error::InvalidConfig(format!("b0 scale must be positive, got {b0_scale}")));
            }
        }
        Ok(())
    }

    /// Diagonal value of the initial matrix `B_0`.
    pub fn initial_diagonal(&self) -> Option<f64> {
        match *self {
            DirectionRule::QuasiNewton {
                b0_scale,
                b0_convention,
                ..
            } => Some(match b0_convention {
                B0Convention::Hessian => b0_scale,
                B0Convention::Inverse => 1.0 / b0_scale,
            }),
            _ => None,
        }
    }
}

pub fn steepest(g: &Vector) -> Vector {
    -g
}

/// Previous direction and gradient, available from iteration 1 on.
#[derive(Debug, Clone, PartialEq)]
pub struct CgState {
    pub d_prev: Vector,
    pub g_prev: Vector,
}

/// Conjugate parameter, or `None` when its denominator vanishes (restart).
pub fn beta(variant: BetaVariant, g: &Vector, state: &CgState) -> Option<f64> {
    let y = g - &state.g_prev;
    let (num, den) = match variant {
        BetaVariant::Fr => (g.dot(g), state.g_prev.dot(&state.g_prev)),
        BetaVariant::Hs => (g.dot(&y), state.d_prev.dot(&y)),
        BetaVariant::Prp => (g.dot(&y), state.g_prev.dot(&state.g_prev)),
        BetaVariant::Dy => (g.dot(g), state.d_prev.dot(&y)),
    };
    if den.abs() <= BETA_DENOM_TOL {
        None
    } else {
        Some(num / den)
    }
}

/// CG direction and whether a steepest-descent restart replaced it.
///
/// Without state this is `-g`. A vanishing `beta` denominator or a result with
/// `g'd >= 0` restarts with `-g`.
pub fn cg_direction(g: &Vector, state: Option<&CgState>, variant: BetaVariant) -> (Vector, bool) {
    let Some(state) = state else {
        return (steepest(g), false);
    };
    let Some(b) = beta(variant, g, state) else {
        return (steepest(g), true);
    };
    let d = &state.d_prev * b - g;
    if d.dot(g) >= 0.0 || !b.is_finite() {
        (steepest(g), true)
    } else {
        (d, false)
    }
}

/// The `theta`-weighted term of the Broyden family.
#[derive(Debug, Clone, PartialEq)]
pub struct BroydenCorrection {
    pub omega: Vector,
    pub sbs: f64,
}

/// `omega = sqrt(s'Bs) (y / s'y - Bs / s'Bs)`.
pub fn broyden_correction(b: &Matrix, pair: &SecantPair) -> Result<BroydenCorrection> {
    let bs = b * pair.s();
    let sbs = pair.s().dot(&bs);
    if !(sbs > 0.0) {
        return Err(Error::NonPositiveCurvature(sbs));
    }
    let omega = (pair.y() / pair.sy() - bs / sbs) * sbs.sqrt();
    Ok(BroydenCorrection { omega, sbs })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UpdateStatus {
    Applied,
    /// `s'y <= 0`; the matrix was left unchanged.
    Skipped,
}

/// Dense quasi-Newton matrix with a Cholesky factor refreshed after every update.
#[derive(Debug, Clone)]
pub struct QuasiNewtonState {
    b: Matrix,
    chol: Cholesky,
}

impl QuasiNewtonState {
    pub fn scaled_identity(dim: usize, scale: f64) -> Result<Self> {
        Self::from_matrix(Matrix::identity(dim, dim) * scale)
    }

    pub fn from_matrix(b: Matrix) -> Result<Self> {
        let chol = Cholesky::new(&b)?;
        Ok(Self { b, chol })
    }

    pub fn matrix(&self) -> &Matrix {
        &self.b
    }

    pub fn dim(&self) -> usize {
        self.b.nrows()
    }

    pub fn min_pivot(&self) -> f64 {
        self.chol.min_pivot()
    }

    /// Applies the Broyden-family update
    /// `B + yy'/s'y - Bss'B/s'Bs + theta omega omega'`.
    ///
    /// Pairs with `s'y <= 0` are skipped. A non-positive `s'Bs` or a failed
    /// refactorization is an error and leaves the state untouched.
    pub fn broyden_update(&mut self, pair: &SecantPair, theta: f64) -> Result<UpdateStatus> {
        if pair.dim() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                actual: pair.dim(),
            });
        }
        if !(pair.sy() > 0.0) {
            return Ok(UpdateStatus::Skipped);
        }
        let bs = &self.b * pair.s();
        let sbs = pair.s().dot(&bs);
        if !(sbs > 0.0) {
            return Err(Error::NonPositiveCurvature(sbs));
        }
        let mut next = self.b.clone();
        next.ger(1.0 / pair.sy(), pair.y(), pair.y(), 1.0);
        next.ger(-1.0 / sbs, &bs, &bs, 1.0);
        if theta != 0.0 {
            let omega = (pair.y() / pair.sy() - &bs / sbs) * sbs.sqrt();
            next.ger(theta, &omega, &omega, 1.0);
        }
        let chol = Cholesky::new(&next)?;
        self.b = next;
        self.chol = chol;
        Ok(UpdateStatus::Applied)
    }

    /// Solves `B d = -g`.
    pub fn qn_direction(&self, g: &Vector) -> Result<Vector> {
        if g.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                actual: g.len(),
            });
        }
        Ok(-self.chol.solve(g))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn v(xs: &[f64]) -> Vector {
        Vector::from_column_slice(xs)
    }

    #[test]
    fn steepest_negates() {
        assert_eq!(steepest(&v(&[1.0, -2.0])), v(&[-1.0, 2.0]));
        assert_eq!(steepest(&v(&[0.0, 5.0])), v(&[0.0, -5.0]));
        assert_eq!(steepest(&Vector::zeros(2)).norm(), 0.0);
    }

    #[test]
    fn beta_examples() {
        let state = CgState {
            d_prev: v(&[0.0, -1.0]),
            g_prev: v(&[0.0, 1.0]),
        };
        let g = v(&[1.0, 0.0]);
        assert_eq!(beta(BetaVariant::Dy, &g, &state), Some(1.0));
        assert_eq!(beta(BetaVariant::Hs, &g, &state), Some(1.0));
        assert_eq!(beta(BetaVariant::Fr, &g, &state), Some(1.0));
        assert_eq!(beta(BetaVariant::Prp, &g, &state), Some(1.0));

        let stalled = CgState {
            d_prev: v(&[-1.0, 0.5]),
            g_prev: v(&[2.0, 3.0]),
        };
        let g = v(&[2.0, 3.0]);
        assert_eq!(beta(BetaVariant::Prp, &g, &stalled), Some(0.0));
        assert_eq!(beta(BetaVariant::Hs, &g, &stalled), None);
        assert_eq!(beta(BetaVariant::Dy, &g, &stalled), None);
        assert_eq!(beta(BetaVariant::Fr, &g, &stalled), Some(1.0));
    }

    #[test]
    fn cg_direction_examples() {
        assert_eq!(cg_direction(&v(&[1.0, 1.0]), None, BetaVariant::Dy), (v(&[-1.0, -1.0]), false));
        let state = CgState {
            d_prev: v(&[0.0, -1.0]),
            g_prev: v(&[0.0, 1.0]),
        };
        assert_eq!(
            cg_direction(&v(&[1.0, 0.0]), Some(&state), BetaVariant::Dy),
            (v(&[-1.0, -1.0]), false)
        );
        let stalled = CgState {
            d_prev: v(&[-1.0, 0.5]),
            g_prev: v(&[2.0, 3.0]),
        };
        assert_eq!(
            cg_direction(&v(&[2.0, 3.0]), Some(&stalled), BetaVariant::Dy),
            (v(&[-2.0, -3.0]), true)
        );
    }

    #[test]
    fn cg_restarts_on_non_descent() {
        // beta_FR = 1 and d_prev points uphill: -g + d_prev has g'd = -1 + 4 > 0.
        let state = CgState {
            d_prev: v(&[4.0, 0.0]),
            g_prev: v(&[0.0, 1.0]),
        };
        let (d, restarted) = cg_direction(&v(&[1.0, 0.0]), Some(&state), BetaVariant::Fr);
        assert!(restarted);
        assert_eq!(d, v(&[-1.0, 0.0]));
    }

    #[test]
    fn bfgs_update_example() {
        let mut qn = QuasiNewtonState::scaled_identity(2, 1.0).unwrap();
        let pair = SecantPair::new(v(&[1.0, 0.0]), v(&[2.0, 0.0])).unwrap();
        assert_eq!(qn.broyden_update(&pair, 0.0).unwrap(), UpdateStatus::Applied);
        assert_eq!(qn.matrix(), &Matrix::from_diagonal(&v(&[2.0, 1.0])));

        let mut dfp = QuasiNewtonState::scaled_identity(2, 1.0).unwrap();
        dfp.broyden_update(&pair, 1.0).unwrap();
        assert_eq!(dfp.matrix(), &Matrix::from_diagonal(&v(&[2.0, 1.0])));
        let c = broyden_correction(&Matrix::identity(2, 2), &pair).unwrap();
        assert_eq!(c.omega.norm(), 0.0);
    }

    #[test]
    fn secant_condition_for_every_theta() {
        let b = Matrix::from_row_slice(3, 3, &[3.0, 0.5, 0.1, 0.5, 2.0, -0.3, 0.1, -0.3, 1.5]);
        let pair = SecantPair::new(v(&[0.3, -1.0, 0.7]), v(&[1.2, -0.4, 2.0])).unwrap();
        assert!(pair.sy() > 0.0);
        for theta in [0.0, 0.25, 0.5, 0.75, 1.0] {
            let mut qn = QuasiNewtonState::from_matrix(b.clone()).unwrap();
            qn.broyden_update(&pair, theta).unwrap();
            let residual = (qn.matrix() * pair.s() - pair.y()).norm();
            assert!(residual <= 1e-12, "theta {theta}: {residual}");
            let c = broyden_correction(&b, &pair).unwrap();
            assert!(c.omega.dot(pair.s()).abs() <= 1e-12 * c.omega.norm() * pair.s().norm());
        }
    }

    #[test]
    fn update_skips_negative_curvature() {
        let mut qn = QuasiNewtonState::scaled_identity(2, 1.0).unwrap();
        let pair = SecantPair::new(v(&[1.0, 0.0]), v(&[-1.0, 0.0])).unwrap();
        assert_eq!(qn.broyden_update(&pair, 0.0).unwrap(), UpdateStatus::Skipped);
        assert_eq!(qn.matrix(), &Matrix::identity(2, 2));
    }

    #[test]
    fn qn_direction_examples() {
        let g = v(&[0.4, -1.5]);
        let id = QuasiNewtonState::scaled_identity(2, 1.0).unwrap();
        assert_eq!(id.qn_direction(&g).unwrap(), -&g);
        let qn = QuasiNewtonState::from_matrix(Matrix::from_diagonal(&v(&[2.0, 1.0]))).unwrap();
        let d = qn.qn_direction(&v(&[2.0, 1.0])).unwrap();
        assert_relative_eq!(d, v(&[-1.0, -1.0]), max_relative = 1e-15);
    }

    #[test]
    fn factorization_failure_reports_pivot() {
        let err = QuasiNewtonState::from_matrix(Matrix::from_diagonal(&v(&[1.0, -2.0]))).unwrap_err();
        assert!(matches!(err, Error::NotPositiveDefinite { index: 1, pivot } if pivot == -2.0));
    }

    #[test]
    fn rule_validation_and_initial_matrix() {
        assert!(DirectionRule::QuasiNewton { theta: 1.5, b0_scale: 1.0, b0_convention: B0Convention::Hessian }
            .validate()
            .is_err());
        assert!(DirectionRule::bfgs(0.0).validate().is_err());
        assert_eq!(DirectionRule::bfgs(1000.0).initial_diagonal(), Some(1000.0));
        let inv = DirectionRule::QuasiNewton { theta: 0.0, b0_scale: 1000.0, b0_convention: B0Convention::Inverse };
        assert_eq!(inv.initial_diagonal(), Some(1e-3));
        assert_eq!(DirectionRule::Steepest.initial_diagonal(), None);
    }
}
