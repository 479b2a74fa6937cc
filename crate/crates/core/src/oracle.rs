//! Brute-force cross-checks: the discretized Tikhonov problem `δ + εΩ`
//! solved directly as one banded least-squares problem, and the worst-case
//! error of a given estimator `u` evaluated straight from its definition.
//!
//! Everything runs in canonical coordinates, where the filter is derived;
//! `u` lives in observation space and is the same in both coordinate
//! systems, and the worst-case error is invariant under the orthogonal `U`.

use nalgebra::DVector;
use serde::Serialize;

use crate::discrete::{push_control_cost, push_delta, push_state_cost, Layout, NodeData, GROUP_DELTA, GROUP_OMEGA};
use crate::error::{Error, Result};
use crate::model::{MatrixEvaluator, TimeGrid};
use crate::numerics::{spd_inverse, trapezoid, BandedLeastSquares};
use crate::observability::{obs_tol, ILL_CONDITIONED};
use crate::reduction::{split_direction, CanonicalSystem};

/// Weight of the adjoint-equation rows when they act as constraints.
const PENALTY: f64 = 1e6;

/// A discrete `(u, z, d)` in canonical coordinates, `F̃'d = 0` by
/// construction (`d = (0, d2)`).
#[derive(Clone, Debug)]
pub struct DiscretizedDual {
    pub grid: TimeGrid,
    pub u: Vec<DVector<f64>>,
    pub z: Vec<DVector<f64>>,
    pub d: DVector<f64>,
    /// `𝒯_ε = δ + εΩ` at the minimizer.
    pub tikhonov_value: f64,
    pub delta: f64,
    pub omega: f64,
    pub condition_estimate: f64,
    pub ill_conditioned: bool,
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct TikhonovSummary {
    pub eps: f64,
    pub grid_steps: usize,
    pub tikhonov_value: f64,
    pub delta: f64,
    pub omega: f64,
    pub condition_estimate: f64,
    pub ill_conditioned: bool,
}

impl DiscretizedDual {
    pub fn summary(&self, eps: f64) -> TikhonovSummary {
        TikhonovSummary {
            eps,
            grid_steps: self.grid.steps(),
            tikhonov_value: self.tikhonov_value,
            delta: self.delta,
            omega: self.omega,
            condition_estimate: self.condition_estimate,
            ill_conditioned: self.ill_conditioned,
        }
    }
}

fn tikhonov_system(canon: &CanonicalSystem, l: &DVector<f64>, eps: f64, grid: &TimeGrid) -> Result<(Layout, BandedLeastSquares)> {
    if !(eps > 0.0) {
        return Err(Error::InvalidInput(format!("eps must be positive, got {eps}")));
    }
    if l.len() != canon.m() {
        return Err(Error::Shape(format!("l has length {}, expected m = {}", l.len(), canon.m())));
    }
    let (l1, _) = split_direction(l, &canon.transform);
    let lay = Layout::new(canon, grid, true);
    let data = NodeData::new(canon, grid);
    let mut ls = BandedLeastSquares::new(lay.ncols());
    push_delta(&mut ls, &lay, &data, grid, &l1, None, 1.0);
    push_state_cost(&mut ls, &lay, canon, grid, eps.sqrt(), GROUP_OMEGA)?;
    push_control_cost(&mut ls, &lay, canon, grid, eps.sqrt(), GROUP_OMEGA)?;
    Ok((lay, ls))
}

/// Global minimizer of the discretized `δ + εΩ`.
pub fn tikhonov_minimize(canon: &CanonicalSystem, l: &DVector<f64>, eps: f64, grid: &TimeGrid) -> Result<DiscretizedDual> {
    let (lay, ls) = tikhonov_system(canon, l, eps, grid)?;
    let sol = ls.solve(0.0)?;
    let (z, u, d) = lay.unpack(&sol.x);
    let (delta, weighted) = (sol.group_residuals[GROUP_DELTA], sol.group_residuals[GROUP_OMEGA]);
    Ok(DiscretizedDual {
        grid: *grid,
        u,
        z,
        d,
        tikhonov_value: delta + weighted,
        delta,
        omega: weighted / eps,
        condition_estimate: sol.condition_estimate,
        ill_conditioned: sol.condition_estimate > ILL_CONDITIONED,
    })
}

/// `(δ, Ω)` of the discretized functional at given samples.
pub fn tikhonov_terms(
    canon: &CanonicalSystem,
    l: &DVector<f64>,
    eps: f64,
    grid: &TimeGrid,
    u: &[DVector<f64>],
    z: &[DVector<f64>],
    d: &DVector<f64>,
) -> Result<(f64, f64)> {
    let (lay, ls) = tikhonov_system(canon, l, eps, grid)?;
    if u.len() != lay.nodes || z.len() != lay.nodes {
        return Err(Error::Shape(format!("expected {} samples", lay.nodes)));
    }
    let g = ls.group_residuals(&lay.pack(z, u, d));
    Ok((g[GROUP_DELTA], g[GROUP_OMEGA] / eps))
}

#[derive(Clone, Debug, Serialize)]
pub struct WorstCase {
    /// `σ(T, ℓ, u)`.
    pub value: f64,
    /// `∫⟨R⁻¹u, u⟩`.
    pub control_cost: f64,
    /// `min ‖Q̃0^{-½}(z(t0) − v(t0)) − Q0^{-½}d‖² + ∫‖Q^{-½}(z − v)‖²`.
    pub state_cost: f64,
    /// `min_z δ(u, z)` with `u` fixed: the admissibility test.
    pub feasibility_residual: f64,
    /// Adjoint-equation residual of the minimizing `z`.
    pub constraint_residual: f64,
    pub condition_estimate: f64,
    #[serde(skip)]
    pub z: Vec<DVector<f64>>,
    #[serde(skip)]
    pub d: DVector<f64>,
}

/// Worst-case error of the linear estimator with weights `u` (node samples
/// in observation space). Minimizing over every `z` solving the adjoint DAE
/// for `(ℓ, u)` is the minimum over the homogeneous solutions `v`.
pub fn worst_case_error(canon: &CanonicalSystem, l: &DVector<f64>, u: &[DVector<f64>], grid: &TimeGrid) -> Result<WorstCase> {
    if u.len() != grid.node_count() || u.iter().any(|v| v.len() != canon.p()) {
        return Err(Error::Shape(format!("u needs {} samples of length {}", grid.node_count(), canon.p())));
    }
    let (l1, _) = split_direction(l, &canon.transform);
    let lay = Layout::new(canon, grid, false);
    let data = NodeData::new(canon, grid);

    let mut feas = BandedLeastSquares::new(lay.ncols());
    push_delta(&mut feas, &lay, &data, grid, &l1, Some(u), 1.0);
    let feasibility_residual = feas.solve(1e-14)?.residual();
    let tolerance = obs_tol(l) * (1.0 + l2_norm_squared(canon, u, grid)?);
    if feasibility_residual > tolerance {
        return Err(Error::Infinite { residual: feasibility_residual, tolerance });
    }

    let mut ls = BandedLeastSquares::new(lay.ncols());
    push_delta(&mut ls, &lay, &data, grid, &l1, Some(u), PENALTY);
    push_state_cost(&mut ls, &lay, canon, grid, 1.0, GROUP_OMEGA)?;
    let sol = ls.solve(0.0)?;
    let (z, _, d) = lay.unpack(&sol.x);
    let control_cost = l2_norm_squared(canon, u, grid)?;
    let state_cost = sol.group_residuals[GROUP_OMEGA];
    Ok(WorstCase {
        value: control_cost + state_cost,
        control_cost,
        state_cost,
        feasibility_residual,
        constraint_residual: sol.group_residuals[GROUP_DELTA] / (PENALTY * PENALTY),
        condition_estimate: sol.condition_estimate,
        z,
        d,
    })
}

/// `∫⟨R⁻¹u, u⟩` by the trapezoid rule.
fn l2_norm_squared(canon: &CanonicalSystem, u: &[DVector<f64>], grid: &TimeGrid) -> Result<f64> {
    let mut vals = Vec::with_capacity(u.len());
    for (t, uk) in grid.nodes().zip(u) {
        let ri = spd_inverse(&canon.weights.r.eval(t), "R")?;
        vals.push((&ri * uk).dot(uk));
    }
    Ok(trapezoid(&vals, grid))
}

/// Support function of the ellipsoid `⟨Q0x0, x0⟩ + ∫⟨Qf, f⟩ ≤ 1` at the
/// functional `(a, z)`: `√(⟨Q0⁻¹a, a⟩ + ∫⟨Q⁻¹z, z⟩)`.
pub fn ellipsoid_support(
    a: &DVector<f64>,
    z: &[DVector<f64>],
    q0: &nalgebra::DMatrix<f64>,
    q: &MatrixEvaluator,
    grid: &TimeGrid,
) -> Result<f64> {
    let q0i = spd_inverse(q0, "Q0")?;
    let mut vals = Vec::with_capacity(z.len());
    for (t, zk) in grid.nodes().zip(z) {
        vals.push((spd_inverse(&q.eval(t), "Q")? * zk).dot(zk));
    }
    let integral = if z.is_empty() { 0.0 } else { trapezoid(&vals, grid) };
    Ok(((&q0i * a).dot(a) + integral).max(0.0).sqrt())
}

#[cfg(test)]
mod tests;
