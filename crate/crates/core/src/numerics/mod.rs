//! Deterministic numerical kernels shared by every other module.

mod banded;
mod linalg;
mod ode;
mod quadrature;

pub use banded::{BandedLeastSquares, LeastSquaresSolution};
pub use linalg::{
    asymmetry, full_svd, is_spd, max_abs_eigenvalue, min_eigenvalue, null_basis, numerical_rank, pinv,
    spd_inverse, spd_sqrt, spd_sqrt_inv, symmetrize, FullSvd, RANK_TOL,
};
pub use ode::{integrate, rk4, rk4_with, Accumulation, Direction, GridPoint, OdeProblem};
pub use quadrature::{trapezoid, trapezoid_weights};
