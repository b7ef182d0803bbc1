//! Approximately optimal stepsizes (AOS) for gradient, conjugate-gradient and
//! quasi-Newton methods on strictly convex quadratics.
//!
//! The stepsize minimizes the quadratic surrogate
//! `phi(alpha) = f + alpha * g'd + alpha^2 / 2 * d' Bbar d`, where `Bbar` is a
//! three-term model matrix built purely from the last secant pair `(s, y)`:
//!
//! ```text
//! Bbar = (|y|^2 / s'y) I - (|y|^2 / s'y) s s' / |s|^2 + y y' / s'y
//! ```
//!
//! so `alpha = -g'd / d' Bbar d` needs no knowledge of the Hessian. The crate is
//! organized as:
//!
//! - [`quadmodel`]: quadratic objectives and the benchmark problem generators.
//! - [`stepsize`]: AOS, its steepest-descent specialization, BB1/BB2, exact and
//!   unit steps.
//! - [`directions`]: steepest descent, FR/HS/PRP/DY conjugate gradient and the
//!   Broyden family of quasi-Newton updates.
//! - [`spectra`]: closed-form extreme eigenvalues of `Bbar`.
//! - [`solver`]: the `x_{k+1} = x_k + alpha_k d_k` loop with traces.
//! - [`bench`]: method x problem grids, table presets and report emission.
//!
//! ```
//! use aos_core::quadmodel::{generate, ProblemSpec};
//! use aos_core::solver::{run, MethodConfig, SolverConfig};
//!
//! let problem = generate(&ProblemSpec::p1(100)).unwrap();
//! let report = run(&problem, &MethodConfig::cg_aos(), &SolverConfig::default()).unwrap();
//! assert!(report.status.is_converged());
//! ```

// `!(x > 0.0)` is used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bench;
pub mod directions;
mod error;
pub mod linalg;
pub mod mmio;
pub mod par;
pub mod quadmodel;
pub mod solver;
pub mod spectra;
pub mod stepsize;
pub mod verify;

pub use error::{Error, Result};
