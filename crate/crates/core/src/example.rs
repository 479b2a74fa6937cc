//! The bundled reference problem: a 2×4 descriptor system whose minimax
//! observable subspace is `{0} × ℝ`, together with its exact scalar filter.
//!
//! ```text
//! F = [1 0 0 0; 0 1 0 0]   C = [0 0 1 0; -1 0 0 -1]   H = [1 0 0 0; 0 0 0 1; 0 1 0 0]
//! Q0 = Q = I₂, R = I₃, t ∈ [0, 1]
//! ```
//!
//! For `ℓ = (0, ℓ2)` the dual problem collapses to minimizing
//! `z2(t0)² + ∫ 3z2² + u3²` subject to `z2' = u3`, `z2(T) = ℓ2`, solved by
//! `u3 = k z2` with `k' = 3 − k²`, `k(t0) = 1`.

use nalgebra::{DMatrix, DVector};

use crate::model::{DaeSystem, MatrixEvaluator, TimeGrid, UncertaintyModel};
use crate::filter::ObservationRecord;
use crate::simulate::{NoiseSpec, ScenarioSpec};

pub const T0: f64 = 0.0;
pub const T_FINAL: f64 = 1.0;

/// Constant observation noise used by the reference scenario.
pub const NOISE: [f64; 3] = [-0.1, -0.2, 0.3];

pub fn f() -> DMatrix<f64> {
    DMatrix::from_row_slice(2, 4, &[1., 0., 0., 0., 0., 1., 0., 0.])
}

pub fn c() -> DMatrix<f64> {
    DMatrix::from_row_slice(2, 4, &[0., 0., 1., 0., -1., 0., 0., -1.])
}

pub fn h() -> DMatrix<f64> {
    DMatrix::from_row_slice(3, 4, &[1., 0., 0., 0., 0., 0., 0., 1., 0., 1., 0., 0.])
}

pub fn system() -> DaeSystem {
    DaeSystem::new(f(), c(), h(), T0, T_FINAL)
}

pub fn weights() -> UncertaintyModel {
    UncertaintyModel::new(DMatrix::identity(2, 2), DMatrix::identity(2, 2), DMatrix::identity(3, 3))
}

/// Free components `(x3, x4) = (cos t, sin t)` as a `2 × 1` evaluator.
pub fn free_components() -> MatrixEvaluator {
    MatrixEvaluator::rule("example_free", 2, 1, |t| DMatrix::from_column_slice(2, 1, &[t.cos(), t.sin()]))
}

/// `x1(0) = 0.1`, `x2(0) = −0.1`, `(x3, x4) = (cos t, sin t)`, `f = 0`,
/// constant noise [`NOISE`]. Canonical and original coordinates coincide.
pub fn scenario() -> ScenarioSpec {
    ScenarioSpec {
        x1_initial: DVector::from_row_slice(&[0.1, -0.1]),
        free: Some(free_components()),
        input: None,
        noise: NoiseSpec::Constant(DVector::from_row_slice(&NOISE)),
    }
}

/// Closed-form state of the reference scenario.
pub fn true_state(t: f64) -> DVector<f64> {
    DVector::from_vec(vec![0.1 + t.sin(), -0.1 - 0.1 * t + 2.0 * t.cos() - 2.0, t.cos(), t.sin()])
}

/// Closed-form observations of the reference scenario.
pub fn true_observation(t: f64) -> DVector<f64> {
    h() * true_state(t) + DVector::from_row_slice(&NOISE)
}

/// `k(t) = √3 tanh(√3 (t − t0) + atanh(1/√3))`, the solution of
/// `k' = 3 − k²`, `k(t0) = 1`.
pub fn gain(t: f64) -> f64 {
    let s = 3f64.sqrt();
    s * (s * (t - T0) + (1.0 / s).atanh()).tanh()
}

/// Exact dual trajectory `z2` with `z2' = k z2`, `z2(T) = ℓ2`.
pub fn dual(t: f64, l2: f64, t_final: f64) -> f64 {
    let s = 3f64.sqrt();
    let shape = |t: f64| (s * (t - T0)).cosh() + (s * (t - T0)).sinh() / s;
    l2 * shape(t) / shape(t_final)
}

/// Exact optimal weights `û = (−z2, −z2, k z2)` on `grid`.
pub fn optimal_weights(l2: f64, grid: &TimeGrid) -> Vec<DVector<f64>> {
    grid.nodes()
        .map(|t| {
            let z = dual(t, l2, grid.t_final());
            DVector::from_vec(vec![-z, -z, gain(t) * z])
        })
        .collect()
}

/// The exact filter `x̂' = −k x̂ − y1 − y2 + k y3`, `x̂(t0) = 0`, integrated by
/// RK4 on `grid`. Returns `x̂` at the nodes; the optimal estimate for horizon
/// `t_k` is `ℓ2 x̂_k`.
pub fn exact_filter(y: &ObservationRecord, grid: &TimeGrid) -> Vec<f64> {
    let rhs = |t: f64, x: f64| {
        let yy = y.value(t);
        -gain(t) * x - yy[0] - yy[1] + gain(t) * yy[2]
    };
    let mut out = Vec::with_capacity(grid.node_count());
    let mut x = 0.0;
    out.push(x);
    let h = grid.step();
    for k in 0..grid.steps() {
        let (t0, tm, t1) = (grid.node(k), grid.midpoint(k), grid.node(k + 1));
        let k1 = rhs(t0, x);
        let k2 = rhs(tm, x + 0.5 * h * k1);
        let k3 = rhs(tm, x + 0.5 * h * k2);
        let k4 = rhs(t1, x + h * k3);
        x += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        out.push(x);
    }
    out
}

/// Reduced cost `z2(t0)² + ∫ 3z2² + u3²` by the trapezoid rule.
pub fn reduced_cost(z2: &[f64], u3: &[f64], grid: &TimeGrid) -> f64 {
    let integrand: Vec<f64> = z2.iter().zip(u3).map(|(z, u)| 3.0 * z * z + u * u).collect();
    z2[0] * z2[0] + crate::numerics::trapezoid(&integrand, grid)
}
