//! Fixed-step classical Runge-Kutta integration on a uniform [`TimeGrid`].
//!
//! Matrix-valued ODEs are flattened to vectors by the caller so there is a
//! single integrator to test. Backward problems run over the reversed node
//! order with a negated step; samples are always returned in grid order.

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::model::TimeGrid;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Direction {
    Forward,
    Backward,
}

/// How the state update `y += h/6 (k1 + 2k2 + 2k3 + k4)` is accumulated.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Accumulation {
    #[default]
    Plain,
    /// Neumaier-compensated update; carries the rounding error of every
    /// increment into the next step.
    Compensated,
}

/// Location of an RK4 stage on the half-step lattice of a grid.
///
/// `half_index = 2k` is node `k`, `half_index = 2k + 1` is the midpoint of
/// interval `[t_k, t_{k+1}]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GridPoint {
    pub t: f64,
    pub half_index: usize,
}

impl GridPoint {
    pub fn node(&self) -> Option<usize> {
        (self.half_index % 2 == 0).then_some(self.half_index / 2)
    }

    pub fn is_midpoint(&self) -> bool {
        self.half_index % 2 == 1
    }
}

pub struct OdeProblem<F>
where
    F: FnMut(GridPoint, &[f64], &mut [f64]),
{
    pub dim: usize,
    pub rhs: F,
    /// State at `t0` for forward problems, at `T` for backward ones.
    pub initial: Vec<f64>,
    pub direction: Direction,
}

impl<F> OdeProblem<F>
where
    F: FnMut(GridPoint, &[f64], &mut [f64]),
{
    pub fn forward(initial: Vec<f64>, rhs: F) -> Self {
        Self { dim: initial.len(), rhs, initial, direction: Direction::Forward }
    }

    pub fn backward(terminal: Vec<f64>, rhs: F) -> Self {
        Self { dim: terminal.len(), rhs, initial: terminal, direction: Direction::Backward }
    }
}

/// Integrate and return the state at every grid node, in grid order.
pub fn rk4<F>(problem: OdeProblem<F>, grid: &TimeGrid) -> Result<Vec<DVector<f64>>>
where
    F: FnMut(GridPoint, &[f64], &mut [f64]),
{
    rk4_with(problem, grid, Accumulation::Plain)
}

pub fn rk4_with<F>(
    problem: OdeProblem<F>,
    grid: &TimeGrid,
    accumulation: Accumulation,
) -> Result<Vec<DVector<f64>>>
where
    F: FnMut(GridPoint, &[f64], &mut [f64]),
{
    let mut out = vec![DVector::zeros(problem.dim); grid.node_count()];
    integrate(problem, grid, accumulation, |node, y| {
        out[node] = DVector::from_column_slice(y);
    })?;
    Ok(out)
}

/// Integrate without storing the trajectory. `visit(node, state)` is called
/// for every node in integration order (including the starting node); the
/// final state is returned.
pub fn integrate<F, V>(
    mut problem: OdeProblem<F>,
    grid: &TimeGrid,
    accumulation: Accumulation,
    mut visit: V,
) -> Result<Vec<f64>>
where
    F: FnMut(GridPoint, &[f64], &mut [f64]),
    V: FnMut(usize, &[f64]),
{
    let dim = problem.dim;
    if problem.initial.len() != dim {
        return Err(Error::Shape(format!(
            "initial state has length {}, expected {dim}",
            problem.initial.len()
        )));
    }
    let steps = grid.steps();
    let mut y = problem.initial.clone();
    let mut comp = vec![0.0; dim];
    let mut stage = Stages::new(dim);

    let start = match problem.direction {
        Direction::Forward => 0,
        Direction::Backward => steps,
    };
    visit(start, &y);

    for i in 0..steps {
        let (from, to, mid) = match problem.direction {
            Direction::Forward => (i, i + 1, 2 * i + 1),
            Direction::Backward => (steps - i, steps - i - 1, 2 * (steps - i - 1) + 1),
        };
        let h = grid.node(to) - grid.node(from);
        let p0 = GridPoint { t: grid.node(from), half_index: 2 * from };
        let pm = GridPoint { t: grid.midpoint(mid / 2), half_index: mid };
        let p1 = GridPoint { t: grid.node(to), half_index: 2 * to };

        stage.step(&mut problem.rhs, &y, h, p0, pm, p1);
        match accumulation {
            Accumulation::Plain => {
                for (yi, inc) in y.iter_mut().zip(&stage.increment) {
                    *yi += inc;
                }
            }
            Accumulation::Compensated => {
                for ((yi, ci), inc) in y.iter_mut().zip(comp.iter_mut()).zip(&stage.increment) {
                    let (s, e) = two_sum(*yi, *inc);
                    let corrected = e + *ci;
                    let (s2, e2) = two_sum(s, corrected);
                    *yi = s2;
                    *ci = e2;
                }
            }
        }
        if y.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite { node: to });
        }
        visit(to, &y);
    }
    Ok(y)
}

#[inline]
fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    let err = (a - (s - bb)) + (b - bb);
    (s, err)
}

struct Stages {
    k1: Vec<f64>,
    k2: Vec<f64>,
    k3: Vec<f64>,
    k4: Vec<f64>,
    tmp: Vec<f64>,
    increment: Vec<f64>,
}

impl Stages {
    fn new(dim: usize) -> Self {
        Self {
            k1: vec![0.0; dim],
            k2: vec![0.0; dim],
            k3: vec![0.0; dim],
            k4: vec![0.0; dim],
            tmp: vec![0.0; dim],
            increment: vec![0.0; dim],
        }
    }

    fn step<F>(&mut self, rhs: &mut F, y: &[f64], h: f64, p0: GridPoint, pm: GridPoint, p1: GridPoint)
    where
        F: FnMut(GridPoint, &[f64], &mut [f64]),
    {
        rhs(p0, y, &mut self.k1);
        axpy_into(&mut self.tmp, y, 0.5 * h, &self.k1);
        rhs(pm, &self.tmp, &mut self.k2);
        axpy_into(&mut self.tmp, y, 0.5 * h, &self.k2);
        rhs(pm, &self.tmp, &mut self.k3);
        axpy_into(&mut self.tmp, y, h, &self.k3);
        rhs(p1, &self.tmp, &mut self.k4);
        let w = h / 6.0;
        for i in 0..y.len() {
            self.increment[i] = w * (self.k1[i] + 2.0 * self.k2[i] + 2.0 * self.k3[i] + self.k4[i]);
        }
    }
}

#[inline]
fn axpy_into(out: &mut [f64], y: &[f64], a: f64, k: &[f64]) {
    for i in 0..y.len() {
        out[i] = y[i] + a * k[i];
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(t0: f64, t1: f64, n: usize) -> TimeGrid {
        TimeGrid::new(t0, t1, n).unwrap()
    }

    #[test]
    fn exponential_growth_matches_e() {
        let g = grid(0.0, 1.0, 1000);
        let out = rk4(OdeProblem::forward(vec![1.0], |_, y, dy| dy[0] = y[0]), &g).unwrap();
        assert!((out[1000][0] - std::f64::consts::E).abs() < 1e-10);
        assert_eq!(out[0][0], 1.0);
    }

    #[test]
    fn zero_rhs_keeps_state_constant() {
        let g = grid(-1.0, 2.0, 17);
        let out = rk4(OdeProblem::forward(vec![3.0, -4.0], |_, _, dy| dy.fill(0.0)), &g).unwrap();
        assert!(out.iter().all(|v| v[0] == 3.0 && v[1] == -4.0));
    }

    #[test]
    fn fourth_order_refinement_ratio() {
        // y' = -y + sin t, smooth manufactured problem with known solution.
        let exact = |t: f64| 1.5 * (-t).exp() + 0.5 * (t.sin() - t.cos());
        let err = |n: usize| {
            let g = grid(0.0, 2.0, n);
            let out = rk4(
                OdeProblem::forward(vec![1.0], |p, y, dy| dy[0] = -y[0] + p.t.sin()),
                &g,
            )
            .unwrap();
            (out[n][0] - exact(2.0)).abs()
        };
        let ratio = err(80) / err(160);
        assert!((ratio - 16.0).abs() < 0.25 * 16.0, "ratio {ratio}");
    }

    #[test]
    fn backward_integration_returns_grid_order() {
        // y' = y, y(1) = e  =>  y(0) = 1.
        let g = grid(0.0, 1.0, 400);
        let out = rk4(
            OdeProblem::backward(vec![std::f64::consts::E], |_, y, dy| dy[0] = y[0]),
            &g,
        )
        .unwrap();
        assert!((out[0][0] - 1.0).abs() < 1e-11);
        assert_eq!(out[400][0], std::f64::consts::E);
    }

    #[test]
    fn stage_points_visit_nodes_and_midpoints() {
        let g = grid(0.0, 1.0, 4);
        let mut seen = Vec::new();
        rk4(
            OdeProblem::backward(vec![0.0], |p, _, dy| {
                seen.push(p.half_index);
                dy[0] = 0.0;
            }),
            &g,
        )
        .unwrap();
        assert_eq!(&seen[..4], &[8, 7, 7, 6]);
        assert_eq!(&seen[seen.len() - 4..], &[2, 1, 1, 0]);
    }

    #[test]
    fn compensated_accumulation_agrees_with_plain() {
        let g = grid(0.0, 1.0, 200);
        let p = || OdeProblem::forward(vec![1.0, 0.0], |_, y: &[f64], dy: &mut [f64]| {
            dy[0] = y[1];
            dy[1] = -y[0];
        });
        let a = rk4_with(p(), &g, Accumulation::Plain).unwrap();
        let b = rk4_with(p(), &g, Accumulation::Compensated).unwrap();
        assert!((a[200][0] - b[200][0]).abs() < 1e-13);
        assert!((b[200][0] - 1f64.cos()).abs() < 1e-10);
    }

    #[test]
    fn non_finite_state_is_reported_with_node() {
        let g = grid(0.0, 1.0, 10);
        let err = rk4(OdeProblem::forward(vec![1.0], |_, y, dy| dy[0] = y[0] * 1e300), &g)
            .unwrap_err();
        assert!(matches!(err, Error::NonFinite { node: 1 }));
    }
}
