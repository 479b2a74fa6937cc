//! The ε-filter: Riccati gain `K(t, ε)`, the terminal-value dual `z1`, the
//! observation-driven filter `x̂_ε`, the sub-optimal estimate and its error.
//!
//! ```text
//! K'  = −KC_ε − C_ε'K − KQ_εK + S_ε,          K(t0) = εQ̃4
//! z1' = (C_ε + Q_εK) z1,                      z1(T) = (I + K(T))⁻¹ℓ1
//! x̂'  = −(C_ε' + KQ_ε) x̂ + Φ'H̃'R y,            x̂(t0) = 0
//! û_ε(y) = ⟨ε⁻¹(I + K(T))⁻¹ x̂(T), ℓ1⟩
//! σ̂^ε   = ε⁻¹ [⟨K(T)z1(T), z1(T)⟩ − ∫‖Φz1‖²]
//! ```
//!
//! The integral in σ̂^ε is also available without storing anything:
//! `∫‖Φz1‖² = ⟨G(T)z1(T), z1(T)⟩` with `G' = Φ'Φ − A'G − GA`, `G(t0) = 0`,
//! `A = C_ε + Q_εK`. That is how the streaming pass (figure data, the
//! compensated tiny-ε run) reports a running error bound.

mod field;
pub mod observations;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::coefficients::phi;
use crate::error::{Error, Result};
use crate::model::TimeGrid;
use crate::numerics::{integrate, min_eigenvalue, rk4_with, trapezoid, Accumulation, GridPoint, OdeProblem};
use crate::reduction::{split_direction, CanonicalSystem};
use field::{to_matrix, CoefficientField, Kernels};

pub use observations::ObservationRecord;

/// Smallest ε accepted without compensated accumulation.
pub const EPS_FLOOR: f64 = 1e-12;
/// Any gain entry beyond this counts as a blow-up.
pub const BLOWUP: f64 = 1e12;

#[derive(Clone, Copy, Debug)]
pub struct FilterOptions {
    pub accumulation: Accumulation,
    /// Refine the grid (by an integer factor) until `h · 2L ≤ stiffness_target`,
    /// `L` the bound from the coefficient field.
    pub auto_refine: bool,
    pub stiffness_target: f64,
    pub max_steps: usize,
}

impl Default for FilterOptions {
    fn default() -> Self {
        Self { accumulation: Accumulation::Plain, auto_refine: true, stiffness_target: 2.0, max_steps: 20_000_000 }
    }
}

impl FilterOptions {
    pub fn compensated() -> Self {
        Self { accumulation: Accumulation::Compensated, ..Self::default() }
    }

    pub fn fixed_grid() -> Self {
        Self { auto_refine: false, ..Self::default() }
    }
}

pub fn check_eps(eps: f64, options: &FilterOptions) -> Result<()> {
    if !(eps > 0.0) || !eps.is_finite() {
        return Err(Error::InvalidInput(format!("eps must be positive and finite, got {eps}")));
    }
    if eps < EPS_FLOOR && options.accumulation != Accumulation::Compensated {
        return Err(Error::EpsTooSmall(eps));
    }
    Ok(())
}

/// The grid the filter actually integrates on: `grid` refined by the
/// smallest integer factor that resolves the gain dynamics.
pub fn working_grid(canon: &CanonicalSystem, eps: f64, grid: &TimeGrid, options: &FilterOptions) -> Result<TimeGrid> {
    if !options.auto_refine {
        return Ok(*grid);
    }
    let field = CoefficientField::build(canon, eps, grid)?;
    let span = grid.t_final() - grid.t0();
    let k0 = canon.q4_tilde.norm() * eps;
    let needed = (2.0 * field.stiffness(k0) * span / options.stiffness_target).ceil();
    let factor = (needed / grid.steps() as f64).ceil().max(1.0);
    if factor * grid.steps() as f64 > options.max_steps as f64 {
        return Err(Error::InvalidInput(format!(
            "eps = {eps:e} needs about {needed:.0} steps, above the limit {}",
            options.max_steps
        )));
    }
    Ok(grid.refined(factor as usize))
}

/// Sampled gain `K(t, ε)` with its derivative, on the grid it was solved on.
#[derive(Clone, Debug)]
pub struct GainTrajectory {
    pub eps: f64,
    pub grid: TimeGrid,
    pub k: Vec<DMatrix<f64>>,
    pub k_dot: Vec<DMatrix<f64>>,
    /// `∫ Ψ'Φ'ΦΨ` at `T` (see module docs).
    pub g_final: DMatrix<f64>,
    field: CoefficientField,
}

impl GainTrajectory {
    pub fn r(&self) -> usize {
        self.field.r
    }

    /// `Φ(t_k, ε)`.
    pub fn phi(&self, node: usize) -> DMatrix<f64> {
        phi(self.field.full_at(2 * node), &self.k[node])
    }

    /// Cubic Hermite value of `K` at the midpoint of interval `k`.
    fn k_mid(&self, k: usize) -> DMatrix<f64> {
        let h = self.grid.step();
        (&self.k[k] + &self.k[k + 1]) * 0.5 + (&self.k_dot[k] - &self.k_dot[k + 1]) * (h / 8.0)
    }

    fn k_at(&self, p: GridPoint) -> DMatrix<f64> {
        match p.node() {
            Some(node) => self.k[node].clone(),
            None => self.k_mid(p.half_index / 2),
        }
    }

    pub fn max_asymmetry(&self) -> f64 {
        self.k.iter().map(crate::numerics::asymmetry).fold(0.0, f64::max)
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.k.iter().map(min_eigenvalue).fold(f64::INFINITY, f64::min)
    }

    fn terminal_factor(&self) -> Result<nalgebra::LU<f64, nalgebra::Dyn, nalgebra::Dyn>> {
        let r = self.r();
        let m = DMatrix::identity(r, r) + &self.k[self.grid.steps()];
        let lu = m.lu();
        if !lu.is_invertible() {
            return Err(Error::SingularTerminal);
        }
        Ok(lu)
    }
}

fn symmetrize_in_place(v: &mut [f64], r: usize) {
    for j in 0..r {
        for i in 0..j {
            let avg = 0.5 * (v[i + j * r] + v[j + i * r]);
            v[i + j * r] = avg;
            v[j + i * r] = avg;
        }
    }
}

fn blowup_check(state: &[f64], node: usize, grid: &TimeGrid) -> Result<()> {
    if state.iter().any(|v| !v.is_finite() || v.abs() > BLOWUP) {
        return Err(Error::RiccatiBlowup { node, t: grid.node(node) });
    }
    Ok(())
}

/// Integrate `K` (and the sensitivity `G`) forward on exactly `grid`.
pub fn solve_riccati(canon: &CanonicalSystem, eps: f64, grid: &TimeGrid, options: &FilterOptions) -> Result<GainTrajectory> {
    check_eps(eps, options)?;
    let field = CoefficientField::build(canon, eps, grid)?;
    let r = field.r;
    let rr = r * r;
    let mut initial = vec![0.0; 2 * rr];
    initial[..rr].copy_from_slice((&canon.q4_tilde * eps).as_slice());

    let mut kernels = Kernels::new(&field);
    let mut k_nodes = Vec::with_capacity(grid.node_count());
    let mut bad: Option<usize> = None;
    let problem = OdeProblem::forward(initial, |p: GridPoint, y: &[f64], dy: &mut [f64]| {
        let c = field.at(p.half_index);
        let (k, g) = y.split_at(rr);
        let (dk, dg) = dy.split_at_mut(rr);
        kernels.riccati(c, k, dk);
        symmetrize_in_place(dk, r);
        kernels.sensitivity(c, k, g, dg);
        symmetrize_in_place(dg, r);
    });
    let last = integrate(problem, grid, options.accumulation, |node, y| {
        if bad.is_none() && blowup_check(&y[..rr], node, grid).is_err() {
            bad = Some(node);
        }
        k_nodes.push(to_matrix(&y[..rr], r, r));
    })
    .map_err(|e| match e {
        Error::NonFinite { node } => Error::RiccatiBlowup { node, t: grid.node(node) },
        other => other,
    })?;
    if let Some(node) = bad {
        return Err(Error::RiccatiBlowup { node, t: grid.node(node) });
    }

    let mut kernels = Kernels::new(&field);
    let mut buf = vec![0.0; rr];
    let k_dot = k_nodes
        .iter()
        .enumerate()
        .map(|(node, k)| {
            kernels.riccati(field.at(2 * node), k.as_slice(), &mut buf);
            symmetrize_in_place(&mut buf, r);
            to_matrix(&buf, r, r)
        })
        .collect();
    Ok(GainTrajectory { eps, grid: *grid, k: k_nodes, k_dot, g_final: to_matrix(&last[rr..], r, r), field })
}

/// `z1` on the gain grid, integrated backward from `(I + K(T))⁻¹ℓ1`.
pub fn solve_z1(gains: &GainTrajectory, l1: &DVector<f64>, accumulation: Accumulation) -> Result<Vec<DVector<f64>>> {
    let r = gains.r();
    if l1.len() != r {
        return Err(Error::Shape(format!("l1 has length {}, expected r = {r}", l1.len())));
    }
    let terminal = gains.terminal_factor()?.solve(l1).ok_or(Error::SingularTerminal)?;
    let mut kernels = Kernels::new(&gains.field);
    let problem = OdeProblem::backward(terminal.as_slice().to_vec(), |p: GridPoint, z: &[f64], dz: &mut [f64]| {
        let k = gains.k_at(p);
        kernels.dual(gains.field.at(p.half_index), k.as_slice(), z, dz);
    });
    rk4_with(problem, &gains.grid, accumulation)
}

/// `x̂_ε` on the gain grid. Observations are interpolated linearly in time.
pub fn run_filter(gains: &GainTrajectory, y: &ObservationRecord, accumulation: Accumulation) -> Result<Vec<DVector<f64>>> {
    let (r, p) = (gains.r(), gains.field.p);
    if y.dim() != p {
        return Err(Error::Shape(format!("observations have {} channels, expected p = {p}", y.dim())));
    }
    let mut kernels = Kernels::new(&gains.field);
    let mut ybuf = vec![0.0; p];
    let problem = OdeProblem::forward(vec![0.0; r], |pt: GridPoint, x: &[f64], dx: &mut [f64]| {
        let k = gains.k_at(pt);
        y.at(pt.t, &mut ybuf);
        kernels.filter(gains.field.at(pt.half_index), k.as_slice(), x, &ybuf, dx);
    });
    rk4_with(problem, &gains.grid, accumulation).map_err(|e| match e {
        Error::NonFinite { node } => Error::FilterDiverged { node },
        other => other,
    })
}

/// `⟨ε⁻¹(I + K(T))⁻¹ x̂(T), ℓ1⟩`.
pub fn estimate(gains: &GainTrajectory, x_final: &DVector<f64>, l1: &DVector<f64>) -> Result<f64> {
    let v = gains.terminal_factor()?.solve(x_final).ok_or(Error::SingularTerminal)?;
    Ok(v.dot(l1) / gains.eps)
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct SuboptimalError {
    /// `ε⁻¹[⟨K z1, z1⟩(T) − ⟨G z1, z1⟩(T)]`, the integral carried by the ODE for `G`.
    pub value: f64,
    /// Same expression with the integral by the trapezoid rule on the nodes.
    pub trapezoid: f64,
    /// `ε⁻¹[⟨z1, z1⟩(T) − ∫‖Φz1‖²]`, as printed next to the filter equations.
    pub printed: f64,
    /// `⟨ℓ1, K(T)z1(T)⟩ = min 𝒯_ε`.
    pub tikhonov_value: f64,
}

pub fn suboptimal_error(gains: &GainTrajectory, z1: &[DVector<f64>], l1: &DVector<f64>) -> SuboptimalError {
    let n = gains.grid.steps();
    let eps = gains.eps;
    let zt = &z1[n];
    let kz = &gains.k[n] * zt;
    let integrand: Vec<f64> = (0..=n).map(|k| (gains.phi(k) * &z1[k]).norm_squared()).collect();
    let integral = trapezoid(&integrand, &gains.grid);
    let gz = (&gains.g_final * zt).dot(zt);
    SuboptimalError {
        value: (kz.dot(zt) - gz) / eps,
        trapezoid: (kz.dot(zt) - integral) / eps,
        printed: (zt.dot(zt) - integral) / eps,
        tikhonov_value: l1.dot(&kz),
    }
}

/// Full regularized dual solution in canonical coordinates.
#[derive(Clone, Debug)]
pub struct DualTrajectory {
    pub z1: Vec<DVector<f64>>,
    pub p1: Vec<DVector<f64>>,
    pub z2: Vec<DVector<f64>>,
    pub p2: Vec<DVector<f64>>,
    pub d2: DVector<f64>,
    /// `û_ε = ε⁻¹ R H̃ p`.
    pub u: Vec<DVector<f64>>,
}

impl DualTrajectory {
    pub fn z(&self, node: usize) -> DVector<f64> {
        stack(&self.z1[node], &self.z2[node])
    }

    pub fn p(&self, node: usize) -> DVector<f64> {
        stack(&self.p1[node], &self.p2[node])
    }

    /// `d = (0, d2)`, the kernel part of the dual in canonical coordinates.
    pub fn d(&self) -> DVector<f64> {
        stack(&DVector::zeros(self.z1[0].len()), &self.d2)
    }
}

fn stack(a: &DVector<f64>, b: &DVector<f64>) -> DVector<f64> {
    let mut out = DVector::zeros(a.len() + b.len());
    out.rows_mut(0, a.len()).copy_from(a);
    out.rows_mut(a.len(), b.len()).copy_from(b);
    out
}

/// `p1 = Kz1`, then `p2`, `z2`, `d2` from the algebraic part and `û`.
pub fn reconstruct_duals(canon: &CanonicalSystem, gains: &GainTrajectory, z1: &[DVector<f64>]) -> Result<DualTrajectory> {
    let eps = gains.eps;
    let mr = canon.m() - canon.r();
    let mut out = DualTrajectory {
        z1: z1.to_vec(),
        p1: Vec::with_capacity(z1.len()),
        z2: Vec::with_capacity(z1.len()),
        p2: Vec::with_capacity(z1.len()),
        d2: DVector::zeros(mr),
        u: Vec::with_capacity(z1.len()),
    };
    for (node, z1k) in z1.iter().enumerate() {
        let c = gains.field.full_at(2 * node);
        let p1 = &gains.k[node] * z1k;
        let p2 = &c.m * (&c.b * z1k * eps - c.a.transpose() * &p1);
        let z2 = if mr > 0 {
            let b = &c.blocks;
            let rhs = (-b.q2.transpose() - &b.c4 * &c.m * &c.b) * z1k + (&b.c4 * &c.m * c.a.transpose() - &b.c3) * &p1 / eps;
            b.q4.clone().cholesky().ok_or(Error::NotSpd { what: "Q kernel block".into() })?.solve(&rhs)
        } else {
            DVector::zeros(0)
        };
        let p = stack(&p1, &p2);
        out.u.push(&c.blocks.r * &c.blocks.h * &p / eps);
        out.p1.push(p1);
        out.p2.push(p2);
        out.z2.push(z2);
    }
    if mr > 0 {
        let chol = canon.q0_4.clone().cholesky().ok_or(Error::NotSpd { what: "Q0 kernel block".into() })?;
        out.d2 = chol.solve(&(canon.q0_2.transpose() * &z1[0]));
    }
    Ok(out)
}

/// Largest residual of each line of the regularized optimality system
/// (canonical coordinates), with derivatives taken from the gain and dual
/// equations at the nodes.
#[derive(Clone, Copy, Debug, Default, Serialize)]
pub struct BvpResiduals {
    pub adjoint_differential: f64,
    pub adjoint_algebraic: f64,
    pub state_differential: f64,
    pub state_algebraic: f64,
    pub control: f64,
    pub terminal: f64,
    pub initial: f64,
    pub initial_kernel: f64,
}

impl BvpResiduals {
    pub fn max(&self) -> f64 {
        [
            self.adjoint_differential,
            self.adjoint_algebraic,
            self.state_differential,
            self.state_algebraic,
            self.control,
            self.terminal,
            self.initial,
            self.initial_kernel,
        ]
        .into_iter()
        .fold(0.0, f64::max)
    }
}

pub fn bvp_residuals(canon: &CanonicalSystem, gains: &GainTrajectory, duals: &DualTrajectory, l1: &DVector<f64>) -> BvpResiduals {
    let eps = gains.eps;
    let (r, m, n) = (canon.r(), canon.m(), canon.n());
    let mut res = BvpResiduals::default();
    let amax = |v: DVector<f64>| v.amax();
    for node in 0..=gains.grid.steps() {
        let c = gains.field.full_at(2 * node);
        let b = &c.blocks;
        let ct = b.c_full();
        let qinv = b.q_inverse_full();
        let z = duals.z(node);
        let p = duals.p(node);
        let az = &c.c_eps + &c.q_eps * &gains.k[node];
        let dz1 = &az * &duals.z1[node];
        let dp1 = &gains.k_dot[node] * &duals.z1[node] + &gains.k[node] * &dz1;

        let line1 = -ct.transpose() * &z + b.h.transpose() * &duals.u[node] + &p;
        res.adjoint_differential = res.adjoint_differential.max(amax(&dz1 - line1.rows(0, r)));
        if n > r {
            res.adjoint_algebraic = res.adjoint_algebraic.max(amax(line1.rows(r, n - r).into_owned()));
        }
        let line2 = &ct * &p + &qinv * &z * eps;
        res.state_differential = res.state_differential.max(amax(&dp1 - line2.rows(0, r)));
        if m > r {
            res.state_algebraic = res.state_algebraic.max(amax(line2.rows(r, m - r).into_owned()));
        }
        res.control = res.control.max(amax(&duals.u[node] * eps - &b.r * &b.h * &p));
    }
    let last = gains.grid.steps();
    res.terminal = amax(&duals.z1[last] + &duals.p1[last] - l1);
    let top = &canon.q0_1 * &duals.z1[0] - &canon.q0_2 * &duals.d2;
    res.initial = amax(&duals.p1[0] / eps - top);
    if m > r {
        res.initial_kernel = amax(canon.q0_2.transpose() * &duals.z1[0] - &canon.q0_4 * &duals.d2);
    }
    res
}

#[derive(Clone, Debug, Serialize)]
pub struct Diagnostics {
    pub riccati_max_asymmetry: f64,
    pub riccati_min_eigenvalue: f64,
    pub riccati_initial_error: f64,
    pub grid_steps: usize,
    pub grid_steps_used: usize,
    pub coefficient_violations: Vec<String>,
}

#[derive(Clone, Debug, Serialize)]
pub struct EstimateReport {
    /// `û_ε(y)`; absent when no observations were supplied.
    pub estimate: Option<f64>,
    pub sigma_hat: f64,
    pub sigma_hat_trapezoid: f64,
    pub sigma_hat_printed: f64,
    pub tikhonov_value: f64,
    pub eps: f64,
    pub r: usize,
    pub l1: Vec<f64>,
    pub l2: Vec<f64>,
    pub x_hat_final: Vec<f64>,
    pub compensated: bool,
    pub diagnostics: Diagnostics,
}

/// Everything a single ε-run produces.
#[derive(Clone, Debug)]
pub struct EstimateRun {
    pub report: EstimateReport,
    pub gains: GainTrajectory,
    pub z1: Vec<DVector<f64>>,
    pub x_hat: Option<Vec<DVector<f64>>>,
}

/// Full stored pipeline for one direction `ℓ` (original coordinates).
pub fn run_estimate(
    canon: &CanonicalSystem,
    l: &DVector<f64>,
    eps: f64,
    grid: &TimeGrid,
    y: Option<&ObservationRecord>,
    options: &FilterOptions,
) -> Result<EstimateRun> {
    if l.len() != canon.m() {
        return Err(Error::Shape(format!("l has length {}, expected m = {}", l.len(), canon.m())));
    }
    check_eps(eps, options)?;
    let work = working_grid(canon, eps, grid, options)?;
    let gains = solve_riccati(canon, eps, &work, options)?;
    let (l1, l2) = split_direction(l, &canon.transform);
    let z1 = solve_z1(&gains, &l1, options.accumulation)?;
    let sigma = suboptimal_error(&gains, &z1, &l1);
    let x_hat = y.map(|y| run_filter(&gains, y, options.accumulation)).transpose()?;
    let (estimate_value, x_final) = match &x_hat {
        Some(x) => {
            let xt = x[work.steps()].clone();
            (Some(estimate(&gains, &xt, &l1)?), xt.as_slice().to_vec())
        }
        None => (None, Vec::new()),
    };
    let mut violations: Vec<String> = Vec::new();
    for h in [0, work.steps(), 2 * work.steps()] {
        violations.extend(gains.field.full_at(h).invariant_violations());
    }
    let diagnostics = Diagnostics {
        riccati_max_asymmetry: gains.max_asymmetry(),
        riccati_min_eigenvalue: gains.min_eigenvalue(),
        riccati_initial_error: (&gains.k[0] - &canon.q4_tilde * eps).amax(),
        grid_steps: grid.steps(),
        grid_steps_used: work.steps(),
        coefficient_violations: violations,
    };
    let report = EstimateReport {
        estimate: estimate_value,
        sigma_hat: sigma.value,
        sigma_hat_trapezoid: sigma.trapezoid,
        sigma_hat_printed: sigma.printed,
        tikhonov_value: sigma.tikhonov_value,
        eps,
        r: canon.r(),
        l1: l1.as_slice().to_vec(),
        l2: l2.as_slice().to_vec(),
        x_hat_final: x_final,
        compensated: options.accumulation == Accumulation::Compensated,
        diagnostics,
    };
    Ok(EstimateRun { report, gains, z1, x_hat })
}

/// One node of the streaming pass, at base-grid resolution.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct StreamSample {
    pub t: f64,
    /// Estimate for the horizon `[t0, t]`.
    pub estimate: Option<f64>,
    /// Error bound for the horizon `[t0, t]`.
    pub sigma_hat: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct StreamSummary {
    pub eps: f64,
    pub grid_steps_used: usize,
    pub final_sample: StreamSample,
    pub k_final: Vec<f64>,
}

/// Forward-only pass over `K`, `G` and (with observations) `x̂`; nothing is
/// stored. `visit` sees every node of `grid` (not of the refined grid).
pub fn stream<V>(
    canon: &CanonicalSystem,
    l: &DVector<f64>,
    eps: f64,
    grid: &TimeGrid,
    y: Option<&ObservationRecord>,
    options: &FilterOptions,
    mut visit: V,
) -> Result<StreamSummary>
where
    V: FnMut(StreamSample),
{
    check_eps(eps, options)?;
    let work = working_grid(canon, eps, grid, options)?;
    let factor = work.steps() / grid.steps();
    let field = CoefficientField::build(canon, eps, &work)?;
    let (r, p) = (field.r, field.p);
    let rr = r * r;
    let (l1, _) = split_direction(l, &canon.transform);
    if let Some(y) = y {
        if y.dim() != p {
            return Err(Error::Shape(format!("observations have {} channels, expected p = {p}", y.dim())));
        }
    }
    let with_x = y.is_some();
    let mut initial = vec![0.0; 2 * rr + if with_x { r } else { 0 }];
    initial[..rr].copy_from_slice((&canon.q4_tilde * eps).as_slice());

    let mut kernels = Kernels::new(&field);
    let mut ybuf = vec![0.0; p];
    let problem = OdeProblem::forward(initial, |pt: GridPoint, s: &[f64], ds: &mut [f64]| {
        let c = field.at(pt.half_index);
        let (k, rest) = s.split_at(rr);
        let (g, x) = rest.split_at(rr);
        let (dk, drest) = ds.split_at_mut(rr);
        let (dg, dx) = drest.split_at_mut(rr);
        kernels.riccati(c, k, dk);
        symmetrize_in_place(dk, r);
        kernels.sensitivity(c, k, g, dg);
        symmetrize_in_place(dg, r);
        if let Some(y) = y {
            y.at(pt.t, &mut ybuf);
            kernels.filter(c, k, x, &ybuf, dx);
        }
    });

    let mut last = None;
    let mut failure = None;
    let eye = DMatrix::<f64>::identity(r, r);
    let end = integrate(problem, &work, options.accumulation, |node, s| {
        if failure.is_some() || node % factor != 0 {
            return;
        }
        if let Err(e) = blowup_check(&s[..rr], node, &work) {
            failure = Some(e);
            return;
        }
        let k = to_matrix(&s[..rr], r, r);
        let g = to_matrix(&s[rr..2 * rr], r, r);
        let lu = (&eye + &k).lu();
        let z = lu.solve(&l1).unwrap_or_else(|| DVector::from_element(r, f64::NAN));
        let sigma_hat = ((&k - &g) * &z).dot(&z) / eps;
        let estimate = with_x.then(|| {
            let x = DVector::from_column_slice(&s[2 * rr..]);
            lu.solve(&x).map_or(f64::NAN, |v| v.dot(&l1) / eps)
        });
        let sample = StreamSample { t: work.node(node), estimate, sigma_hat };
        last = Some(sample);
        visit(sample);
    })
    .map_err(|e| match e {
        Error::NonFinite { node } => Error::RiccatiBlowup { node, t: work.node(node) },
        other => other,
    })?;
    if let Some(e) = failure {
        return Err(e);
    }
    Ok(StreamSummary {
        eps,
        grid_steps_used: work.steps(),
        final_sample: last.expect("grid has nodes"),
        k_final: end[..rr].to_vec(),
    })
}
