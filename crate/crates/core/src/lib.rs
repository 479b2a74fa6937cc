//! Minimax state estimation for linear differential-algebraic equations
//! `d(Fx)/dt = C(t)x + f`, `y = H(t)x + η`, with a rectangular constant `F`
//! and ellipsoidal uncertainty on `(Fx(t0), f)` and the noise correlation.
//!
//! The pipeline:
//!
//! 1. [`reduction`] brings `F` to `[I_r 0; 0 0]` by an SVD change of variables.
//! 2. [`coefficients`] assembles the Tikhonov-regularized (ε > 0) reduced
//!    boundary-value problem.
//! 3. [`filter`] integrates the Riccati gain, runs the observation-driven
//!    filter, and reports the sub-optimal estimate and its error bound.
//! 4. [`observability`] decides whether a direction ℓ has a finite error.
//! 5. [`oracle`] re-solves the regularized and the exact problems by direct
//!    banded least squares, independently of the Riccati route.
//!
//! [`simulate`] produces observation records from known trajectories, and
//! [`cli`] is the `minimax-dae` command-line front end.
//!
//! Everything is sampled on a uniform [`TimeGrid`].

pub mod cli;
pub mod coefficients;
mod discrete;
pub mod error;
pub mod example;
pub mod filter;
pub mod model;
pub mod numerics;
pub mod observability;
pub mod oracle;
pub mod reduction;
pub mod simulate;

pub use error::{Error, Result};
pub use model::{validate, DaeSystem, MatrixEvaluator, TimeGrid, UncertaintyModel, ValidationReport, Violation};
pub use reduction::{split_direction, svd_reduce, to_canonical, CanonicalSystem, CanonicalTransform};
