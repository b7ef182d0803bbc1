//! Stepsize rules.
//!
//! The approximately optimal stepsize minimizes the quadratic model
//! `phi(alpha) = f + alpha g'd + alpha^2 / 2 d' Bbar d` along `d`. `Bbar` is never
//! assembled: its quadratic form has the closed form
//!
//! ```text
//! d' Bbar d = (|y|^2 / s'y) (|d|^2 - (s'd)^2 / |s|^2) + (y'd)^2 / s'y
//! ```

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::linalg::Vector;
use crate::quadmodel::Objective;
use crate::{Error, Result};

/// Relative threshold below which `s'y` is treated as non-positive.
pub const DEGENERACY_RTOL: f64 = 1e-12;

/// The last displacement `s = x_k - x_{k-1}` and gradient change `y = g_k - g_{k-1}`,
/// with their inner products cached.
#[derive(Debug, Clone, PartialEq)]
pub struct SecantPair {
    s: Vector,
    y: Vector,
    sy: f64,
    ss: f64,
    yy: f64,
}

impl SecantPair {
    pub fn new(s: Vector, y: Vector) -> Result<Self> {
        if s.len() != y.len() {
            return Err(Error::DimensionMismatch {
                expected: s.len(),
                actual: y.len(),
            });
        }
        let ss = s.dot(&s);
        if !(ss > 0.0) {
            return Err(Error::ZeroStep);
        }
        let sy = s.dot(&y);
        let yy = y.dot(&y);
        Ok(Self { s, y, sy, ss, yy })
    }

    pub fn s(&self) -> &Vector {
        &self.s
    }

    pub fn y(&self) -> &Vector {
        &self.y
    }

    pub fn sy(&self) -> f64 {
        self.sy
    }

    pub fn ss(&self) -> f64 {
        self.ss
    }

    pub fn yy(&self) -> f64 {
        self.yy
    }

    pub fn dim(&self) -> usize {
        self.s.len()
    }

    /// `s'y <= 1e-12 * |s| |y|`; such pairs carry no usable curvature.
    pub fn is_degenerate(&self) -> bool {
        !(self.sy > DEGENERACY_RTOL * (self.ss * self.yy).sqrt()) || !self.sy.is_finite()
    }

    fn require_curvature(&self) -> Result<()> {
        if self.is_degenerate() {
            Err(Error::DegeneratePair { sy: self.sy })
        } else {
            Ok(())
        }
    }
}

/// `d' Bbar d` for the model matrix built from `pair`.
pub fn bbar_quadratic_form(d: &Vector, pair: &SecantPair) -> Result<f64> {
    pair.require_curvature()?;
    if d.len() != pair.dim() {
        return Err(Error::DimensionMismatch {
            expected: pair.dim(),
            actual: d.len(),
        });
    }
    let sd = pair.s.dot(d);
    let yd = pair.y.dot(d);
    let dd = d.dot(d);
    Ok(pair.yy / pair.sy * (dd - sd * sd / pair.ss) + yd * yd / pair.sy)
}

/// `-g'd / d' Bbar d` for any descent direction `d`.
pub fn aos_stepsize(g: &Vector, d: &Vector, pair: &SecantPair) -> Result<f64> {
    let gd = g.dot(d);
    if !(gd < 0.0) {
        return Err(Error::NonDescent { gd });
    }
    Ok(-gd / bbar_quadratic_form(d, pair)?)
}

/// The AOS with `d = -g`, written out in terms of `g`, `s` and `y`.
pub fn gm_aos_stepsize(g: &Vector, pair: &SecantPair) -> Result<f64> {
    pair.require_curvature()?;
    if g.len() != pair.dim() {
        return Err(Error::DimensionMismatch {
            expected: pair.dim(),
            actual: g.len(),
        });
    }
    let gg = g.dot(g);
    if !(gg > 0.0) {
        return Err(Error::NonDescent { gd: -gg });
    }
    let gs = g.dot(&pair.s);
    let gy = g.dot(&pair.y);
    let denom = pair.yy / pair.sy * (gg - gs * gs / pair.ss) + gy * gy / pair.sy;
    Ok(gg / denom)
}

/// `|s|^2 / s'y`.
pub fn bb1(pair: &SecantPair) -> Result<f64> {
    pair.require_curvature()?;
    Ok(pair.ss / pair.sy)
}

/// `s'y / |y|^2`.
pub fn bb2(pair: &SecantPair) -> Result<f64> {
    pair.require_curvature()?;
    Ok(pair.sy / pair.yy)
}

/// Exact line minimizer `-g'd / d'Ad`.
pub fn exact_stepsize<P: Objective + ?Sized>(problem: &P, g: &Vector, d: &Vector) -> Result<f64> {
    let gd = g.dot(d);
    if !(gd < 0.0) {
        return Err(Error::NonDescent { gd });
    }
    let curvature = problem.curvature(d)?;
    if !(curvature > 0.0) {
        return Err(Error::NonPositiveCurvature(curvature));
    }
    Ok(-gd / curvature)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum StepsizeKind {
    Aos,
    Bb1,
    Bb2,
    Exact,
    Unit,
}

impl StepsizeKind {
    pub fn needs_pair(self) -> bool {
        matches!(self, StepsizeKind::Aos | StepsizeKind::Bb1 | StepsizeKind::Bb2)
    }
}

impl fmt::Display for StepsizeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            StepsizeKind::Aos => "AOS",
            StepsizeKind::Bb1 => "BB1",
            StepsizeKind::Bb2 => "BB2",
            StepsizeKind::Exact => "EXACT",
            StepsizeKind::Unit => "UNIT",
        })
    }
}

/// Rule used when no usable secant pair exists (iteration 0 or a degenerate pair).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub enum Fallback {
    #[default]
    Exact,
    Unit,
}

impl From<Fallback> for StepsizeKind {
    fn from(f: Fallback) -> Self {
        match f {
            Fallback::Exact => StepsizeKind::Exact,
            Fallback::Unit => StepsizeKind::Unit,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct StepsizeRule {
    pub kind: StepsizeKind,
    pub fallback: Fallback,
}

/// Which rule produced a step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct StepUsed {
    pub kind: StepsizeKind,
    pub fallback: bool,
}

impl fmt::Display for StepUsed {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.fallback {
            write!(f, "{}*", self.kind)
        } else {
            write!(f, "{}", self.kind)
        }
    }
}

impl StepsizeRule {
    pub fn new(kind: StepsizeKind) -> Self {
        Self {
            kind,
            fallback: Fallback::Exact,
        }
    }

    pub fn with_fallback(mut self, fallback: Fallback) -> Self {
        self.fallback = fallback;
        self
    }

    /// Computes the step along `d`. With `steepest` set, `d` must be `-g` and the
    /// AOS is evaluated through its gradient form.
    pub fn compute<P: Objective + ?Sized>(
        &self,
        problem: &P,
        g: &Vector,
        d: &Vector,
        pair: Option<&SecantPair>,
        steepest: bool,
    ) -> Result<(f64, StepUsed)> {
        let usable = pair.filter(|p| !p.is_degenerate());
        let (kind, fallback) = match (self.kind.needs_pair(), usable) {
            (true, None) => (StepsizeKind::from(self.fallback), true),
            _ => (self.kind, false),
        };
        let alpha = match (kind, usable) {
            (StepsizeKind::Aos, Some(p)) if steepest => gm_aos_stepsize(g, p)?,
            (StepsizeKind::Aos, Some(p)) => aos_stepsize(g, d, p)?,
            (StepsizeKind::Bb1, Some(p)) => bb1(p)?,
            (StepsizeKind::Bb2, Some(p)) => bb2(p)?,
            (StepsizeKind::Exact, _) => exact_stepsize(problem, g, d)?,
            (StepsizeKind::Unit, _) => 1.0,
            (_, None) => unreachable!("pair-based rules fall back above"),
        };
        Ok((alpha, StepUsed { kind, fallback }))
    }
}
