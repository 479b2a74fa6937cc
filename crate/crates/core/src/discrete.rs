//! Discretized adjoint-DAE residual `δ(u, z)` and the pieces of `Ω`, written
//! as rows of a banded least-squares problem in canonical coordinates.
//!
//! Unknowns are laid out as `[d2, z_0, u_0, z_1, u_1, …, z_N, u_N]` (the `u`
//! blocks are absent when `u` is given). With `F̃'z = (z1, 0)` the residual
//! `ρ = d(F̃'z)/dt + C̃'z − H̃'u` splits into
//!
//! * range rows (first `r`): box scheme on each interval, weight `√h`;
//! * kernel rows (last `n − r`): collocated at nodes, weight `√w_k`
//!   (trapezoid weights), which avoids the odd–even decoupling a box scheme
//!   allows for purely algebraic rows;
//! * terminal rows: `z1(T) − ℓ1`.

use nalgebra::{DMatrix, DVector};

use crate::error::Result;
use crate::model::TimeGrid;
use crate::numerics::{spd_sqrt_inv, trapezoid_weights, BandedLeastSquares};
use crate::reduction::CanonicalSystem;

pub(crate) const GROUP_DELTA: usize = 0;
pub(crate) const GROUP_OMEGA: usize = 1;

/// Column layout of the discrete unknowns.
#[derive(Clone, Copy, Debug)]
pub(crate) struct Layout {
    pub m: usize,
    pub r: usize,
    pub p: usize,
    pub nodes: usize,
    /// Whether `u` is an unknown (false: `u` given, moved to the right-hand side).
    pub free_u: bool,
}

impl Layout {
    pub fn new(canon: &CanonicalSystem, grid: &TimeGrid, free_u: bool) -> Self {
        Self { m: canon.m(), r: canon.r(), p: canon.p(), nodes: grid.node_count(), free_u }
    }

    pub fn dd(&self) -> usize {
        self.m - self.r
    }

    fn stride(&self) -> usize {
        self.m + if self.free_u { self.p } else { 0 }
    }

    pub fn z(&self, k: usize) -> usize {
        self.dd() + k * self.stride()
    }

    pub fn u(&self, k: usize) -> usize {
        debug_assert!(self.free_u);
        self.z(k) + self.m
    }

    pub fn ncols(&self) -> usize {
        self.dd() + self.nodes * self.stride()
    }

    pub fn pack(&self, z: &[DVector<f64>], u: &[DVector<f64>], d: &DVector<f64>) -> DVector<f64> {
        let mut x = DVector::zeros(self.ncols());
        x.rows_mut(0, self.dd()).copy_from(&d.rows(self.r, self.dd()));
        for k in 0..self.nodes {
            x.rows_mut(self.z(k), self.m).copy_from(&z[k]);
            if self.free_u {
                x.rows_mut(self.u(k), self.p).copy_from(&u[k]);
            }
        }
        x
    }

    pub fn unpack(&self, x: &DVector<f64>) -> (Vec<DVector<f64>>, Vec<DVector<f64>>, DVector<f64>) {
        let z = (0..self.nodes).map(|k| x.rows(self.z(k), self.m).into_owned()).collect();
        let u = if self.free_u { (0..self.nodes).map(|k| x.rows(self.u(k), self.p).into_owned()).collect() } else { Vec::new() };
        let mut d = DVector::zeros(self.m);
        d.rows_mut(self.r, self.dd()).copy_from(&x.rows(0, self.dd()));
        (z, u, d)
    }
}

/// Node samples of the canonical coefficients needed by the rows.
pub(crate) struct NodeData {
    /// `C̃'` (`n × m`) per node.
    pub ct: Vec<DMatrix<f64>>,
    /// `H̃'` (`n × p`) per node.
    pub ht: Vec<DMatrix<f64>>,
}

impl NodeData {
    pub fn new(canon: &CanonicalSystem, grid: &TimeGrid) -> Self {
        let (ct, ht) = grid.nodes().map(|t| (canon.c_tilde(t).transpose(), canon.h_tilde(t).transpose())).unzip();
        Self { ct, ht }
    }
}

/// Push the `δ` rows, each multiplied by `scale`. `u` must be given when the
/// layout has no `u` unknowns.
pub(crate) fn push_delta(
    ls: &mut BandedLeastSquares,
    lay: &Layout,
    data: &NodeData,
    grid: &TimeGrid,
    l1: &DVector<f64>,
    u: Option<&[DVector<f64>]>,
    scale: f64,
) {
    let (m, r, p) = (lay.m, lay.r, lay.p);
    let n = data.ct[0].nrows();
    let h = grid.step();
    let w = trapezoid_weights(grid);
    let stride = lay.stride();
    let given = |k: usize| u.map(|u| &u[k]);

    for k in 0..grid.steps() {
        let s = h.sqrt() * scale;
        for i in 0..r {
            let mut row = vec![0.0; 2 * stride];
            let mut rhs = 0.0;
            for (side, node, sign) in [(0, k, -1.0), (1, k + 1, 1.0)] {
                let base = side * stride;
                for j in 0..m {
                    row[base + j] = 0.5 * data.ct[node][(i, j)];
                }
                row[base + i] += sign / h;
                for j in 0..p {
                    let coef = -0.5 * data.ht[node][(i, j)];
                    match given(node) {
                        Some(uk) => rhs -= coef * uk[j],
                        None => row[base + m + j] = coef,
                    }
                }
            }
            row.iter_mut().for_each(|v| *v *= s);
            ls.push_row(lay.z(k), row, rhs * s, GROUP_DELTA);
        }
    }
    for k in 0..lay.nodes {
        let s = w[k].sqrt() * scale;
        for i in r..n {
            let mut row = vec![0.0; stride];
            let mut rhs = 0.0;
            for j in 0..m {
                row[j] = s * data.ct[k][(i, j)];
            }
            for j in 0..p {
                let coef = -s * data.ht[k][(i, j)];
                match given(k) {
                    Some(uk) => rhs -= coef * uk[j],
                    None => row[m + j] = coef,
                }
            }
            ls.push_row(lay.z(k), row, rhs, GROUP_DELTA);
        }
    }
    let last = lay.nodes - 1;
    for i in 0..r {
        let mut row = vec![0.0; i + 1];
        row[i] = scale;
        ls.push_row(lay.z(last), row, scale * l1[i], GROUP_DELTA);
    }
}

/// Push `scale² · [‖Q̃0^{-½}((z1(t0), 0) − (0, d2))‖² + ∫‖Q̃^{-½}z‖²]`.
pub(crate) fn push_state_cost(
    ls: &mut BandedLeastSquares,
    lay: &Layout,
    canon: &CanonicalSystem,
    grid: &TimeGrid,
    scale: f64,
    group: usize,
) -> Result<()> {
    let (m, r, dd) = (lay.m, lay.r, lay.dd());
    let q0 = spd_sqrt_inv(&canon.q0_tilde(), "Q0")?;
    // Columns [d2, z_0] are adjacent.
    let mut block = DMatrix::zeros(m, dd + m);
    block.view_mut((0, 0), (m, dd)).copy_from(&(-q0.columns(r, dd)));
    block.view_mut((0, dd), (m, r)).copy_from(&q0.columns(0, r));
    ls.push_block(0, &block, &DVector::zeros(m), scale, group);

    let w = trapezoid_weights(grid);
    let mut cached: Option<DMatrix<f64>> = None;
    let constant = canon.weights.q.is_constant();
    for (k, t) in grid.nodes().enumerate() {
        if cached.is_none() || !constant {
            cached = Some(spd_sqrt_inv(&canon.q_tilde(t), "Q")?);
        }
        let qk = cached.as_ref().expect("set above");
        ls.push_block(lay.z(k), qk, &DVector::zeros(m), scale * w[k].sqrt(), group);
    }
    Ok(())
}

/// Push `scale² · ∫‖R^{-½}u‖²` (free `u` only).
pub(crate) fn push_control_cost(
    ls: &mut BandedLeastSquares,
    lay: &Layout,
    canon: &CanonicalSystem,
    grid: &TimeGrid,
    scale: f64,
    group: usize,
) -> Result<()> {
    let w = trapezoid_weights(grid);
    let p = lay.p;
    for (k, t) in grid.nodes().enumerate() {
        let rk = spd_sqrt_inv(&canon.weights.r.eval(t), "R")?;
        ls.push_block(lay.u(k), &rk, &DVector::zeros(p), scale * w[k].sqrt(), group);
    }
    Ok(())
}
