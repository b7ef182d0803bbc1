//! Extreme eigenvalues of the AOS model matrix in closed form.
//!
//! On `span{s, y}` the model matrix has eigenvalues
//! `1/bb2 +- sqrt((1/bb2) (1/bb2 - 1/bb1))`; on the orthogonal complement it acts
//! as `(|y|^2 / s'y) I = (1/bb2) I`, which lies between the two.

use serde::{Deserialize, Serialize};

use crate::linalg::Matrix;
use crate::stepsize::{bb1, bb2, SecantPair};
use crate::{Error, Result};

/// Radicands below `-RADICAND_RTOL * (1/bb2)^2` are reported as inconsistent;
/// smaller negative values are clamped to zero.
pub const RADICAND_RTOL: f64 = 1e-14;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectralBounds {
    pub lambda_min: f64,
    pub lambda_max: f64,
}

pub fn bbar_extreme_eigs(pair: &SecantPair) -> Result<SpectralBounds> {
    let inv_bb2 = 1.0 / bb2(pair)?;
    let inv_bb1 = 1.0 / bb1(pair)?;
    let mut radicand = inv_bb2 * (inv_bb2 - inv_bb1);
    if radicand < 0.0 {
        if radicand < -RADICAND_RTOL * inv_bb2 * inv_bb2 {
            return Err(Error::SpectralInconsistency(radicand));
        }
        radicand = 0.0;
    }
    let lambda_max = inv_bb2 + radicand.sqrt();
    // lambda_min * lambda_max = 1 / (bb1 bb2); the product form avoids cancellation.
    Ok(SpectralBounds {
        lambda_min: inv_bb2 * inv_bb1 / lambda_max,
        lambda_max,
    })
}

/// Explicit dense model matrix
/// `(|y|^2/s'y) I - (|y|^2/s'y) ss'/|s|^2 + yy'/s'y`.
pub fn assemble_bbar(pair: &SecantPair) -> Matrix {
    let n = pair.dim();
    let c = pair.yy() / pair.sy();
    let mut m = Matrix::identity(n, n) * c;
    m.ger(-c / pair.ss(), pair.s(), pair.s(), 1.0);
    m.ger(1.0 / pair.sy(), pair.y(), pair.y(), 1.0);
    m
}
