//! The estimation plant `d(Fx)/dt = C(t)x + f`, `y = H(t)x + eta`, its
//! uncertainty weights, and the uniform time grids everything is sampled on.

use std::fmt;
use std::sync::Arc;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::numerics::is_spd;

/// Uniform grid `t_k = t0 + k (T - t0) / N`, `k = 0..=N`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TimeGrid {
    t0: f64,
    t_final: f64,
    steps: usize,
}

impl TimeGrid {
    pub fn new(t0: f64, t_final: f64, steps: usize) -> Result<Self> {
        if !(t0.is_finite() && t_final.is_finite()) || t0 >= t_final {
            return Err(Error::InvalidInput(format!("grid needs t0 < T, got [{t0}, {t_final}]")));
        }
        if steps < 2 {
            return Err(Error::InvalidInput(format!("grid needs at least 2 steps, got {steps}")));
        }
        Ok(Self { t0, t_final, steps })
    }

    pub fn t0(&self) -> f64 {
        self.t0
    }

    pub fn t_final(&self) -> f64 {
        self.t_final
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn node_count(&self) -> usize {
        self.steps + 1
    }

    pub fn step(&self) -> f64 {
        (self.t_final - self.t0) / self.steps as f64
    }

    pub fn node(&self, k: usize) -> f64 {
        if k == self.steps {
            self.t_final
        } else {
            self.t0 + k as f64 * self.step()
        }
    }

    /// Midpoint of interval `[t_k, t_{k+1}]`.
    pub fn midpoint(&self, k: usize) -> f64 {
        self.t0 + (k as f64 + 0.5) * self.step()
    }

    /// Time of a half-step index (`2k` node, `2k + 1` midpoint).
    pub fn half_node(&self, half_index: usize) -> f64 {
        if half_index % 2 == 0 {
            self.node(half_index / 2)
        } else {
            self.midpoint(half_index / 2)
        }
    }

    pub fn nodes(&self) -> impl Iterator<Item = f64> + '_ {
        (0..=self.steps).map(move |k| self.node(k))
    }

    /// Same horizon, `factor` times as many steps.
    pub fn refined(&self, factor: usize) -> Self {
        Self { steps: self.steps * factor.max(1), ..*self }
    }
}

pub type MatrixRule = Arc<dyn Fn(f64) -> DMatrix<f64> + Send + Sync>;

/// A continuous matrix-valued function of time.
#[derive(Clone)]
pub enum MatrixEvaluator {
    Constant(DMatrix<f64>),
    /// Piecewise-linear interpolation of samples; clamped outside the sample range.
    Samples { times: Vec<f64>, values: Vec<DMatrix<f64>> },
    /// Closed-form rule with a declared shape.
    Rule { name: String, rows: usize, cols: usize, rule: MatrixRule },
}

impl fmt::Debug for MatrixEvaluator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Constant(m) => f.debug_tuple("Constant").field(m).finish(),
            Self::Samples { times, .. } => write!(f, "Samples({} points)", times.len()),
            Self::Rule { name, rows, cols, .. } => write!(f, "Rule({name}, {rows}x{cols})"),
        }
    }
}

impl From<DMatrix<f64>> for MatrixEvaluator {
    fn from(m: DMatrix<f64>) -> Self {
        Self::Constant(m)
    }
}

impl MatrixEvaluator {
    pub fn constant(m: DMatrix<f64>) -> Self {
        Self::Constant(m)
    }

    pub fn samples(times: Vec<f64>, values: Vec<DMatrix<f64>>) -> Result<Self> {
        if times.is_empty() || times.len() != values.len() {
            return Err(Error::InvalidInput("samples need equally many times and values (>= 1)".into()));
        }
        if times.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::InvalidInput("sample times must be strictly increasing".into()));
        }
        let shape = values[0].shape();
        if values.iter().any(|v| v.shape() != shape) {
            return Err(Error::Shape("all samples must share one shape".into()));
        }
        Ok(Self::Samples { times, values })
    }

    pub fn rule<F>(name: impl Into<String>, rows: usize, cols: usize, rule: F) -> Self
    where
        F: Fn(f64) -> DMatrix<f64> + Send + Sync + 'static,
    {
        Self::Rule { name: name.into(), rows, cols, rule: Arc::new(rule) }
    }

    pub fn shape(&self) -> (usize, usize) {
        match self {
            Self::Constant(m) => m.shape(),
            Self::Samples { values, .. } => values[0].shape(),
            Self::Rule { rows, cols, .. } => (*rows, *cols),
        }
    }

    pub fn is_constant(&self) -> bool {
        match self {
            Self::Constant(_) => true,
            Self::Samples { values, .. } => values.len() == 1,
            Self::Rule { .. } => false,
        }
    }

    pub fn eval(&self, t: f64) -> DMatrix<f64> {
        match self {
            Self::Constant(m) => m.clone(),
            Self::Rule { rule, .. } => rule(t),
            Self::Samples { times, values } => {
                let last = times.len() - 1;
                if t <= times[0] {
                    return values[0].clone();
                }
                if t >= times[last] {
                    return values[last].clone();
                }
                let k = times.partition_point(|&s| s <= t) - 1;
                let theta = (t - times[k]) / (times[k + 1] - times[k]);
                &values[k] * (1.0 - theta) + &values[k + 1] * theta
            }
        }
    }
}

/// `d(Fx)/dt = C(t)x + f`, `y = H(t)x + eta` on `[t0, T]`.
#[derive(Clone, Debug)]
pub struct DaeSystem {
    pub f: DMatrix<f64>,
    pub c: MatrixEvaluator,
    pub h: MatrixEvaluator,
    pub t0: f64,
    pub t_final: f64,
}

impl DaeSystem {
    pub fn new(f: DMatrix<f64>, c: impl Into<MatrixEvaluator>, h: impl Into<MatrixEvaluator>, t0: f64, t_final: f64) -> Self {
        Self { f, c: c.into(), h: h.into(), t0, t_final }
    }

    /// Number of equations (rows of F).
    pub fn m(&self) -> usize {
        self.f.nrows()
    }

    /// State dimension (columns of F).
    pub fn n(&self) -> usize {
        self.f.ncols()
    }

    /// Observation dimension.
    pub fn p(&self) -> usize {
        self.h.shape().0
    }

    pub fn grid(&self, steps: usize) -> Result<TimeGrid> {
        TimeGrid::new(self.t0, self.t_final, steps)
    }
}

/// Weights of the ellipsoidal input set and of the noise correlation bound.
#[derive(Clone, Debug)]
pub struct UncertaintyModel {
    pub q0: DMatrix<f64>,
    pub q: MatrixEvaluator,
    pub r: MatrixEvaluator,
}

impl UncertaintyModel {
    pub fn new(q0: DMatrix<f64>, q: impl Into<MatrixEvaluator>, r: impl Into<MatrixEvaluator>) -> Self {
        Self { q0, q: q.into(), r: r.into() }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Violation {
    EmptyF,
    NoStates,
    NoObservations,
    NonFiniteF,
    Horizon { t0: f64, t_final: f64 },
    GridEndpoints { grid: (f64, f64), system: (f64, f64) },
    Shape { what: &'static str, t: f64, found: (usize, usize), expected: (usize, usize) },
    NonFinite { what: &'static str, t: f64 },
    NotPositiveDefinite { what: &'static str, t: Option<f64> },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::EmptyF => write!(f, "F has no rows (m = 0)"),
            Self::NoStates => write!(f, "F has no columns (n = 0)"),
            Self::NoObservations => write!(f, "H has no rows (p = 0)"),
            Self::NonFiniteF => write!(f, "F has non-finite entries"),
            Self::Horizon { t0, t_final } => write!(f, "horizon needs t0 < T, got [{t0}, {t_final}]"),
            Self::GridEndpoints { grid, system } => {
                write!(f, "grid [{}, {}] differs from horizon [{}, {}]", grid.0, grid.1, system.0, system.1)
            }
            Self::Shape { what, t, found, expected } => write!(
                f,
                "{what} shape mismatch at t = {t}: found {}x{}, expected {}x{}",
                found.0, found.1, expected.0, expected.1
            ),
            Self::NonFinite { what, t } => write!(f, "{what} has non-finite entries at t = {t}"),
            Self::NotPositiveDefinite { what, t: None } => write!(f, "{what} not positive definite"),
            Self::NotPositiveDefinite { what, t: Some(t) } => {
                write!(f, "{what} not positive definite at t = {t}")
            }
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn into_result(self) -> Result<()> {
        if self.is_valid() {
            Ok(())
        } else {
            let msgs: Vec<String> = self.violations.iter().map(|v| v.to_string()).collect();
            Err(Error::InvalidInput(msgs.join("; ")))
        }
    }
}

/// Check every structural and definiteness assumption at all grid nodes and
/// midpoints. Never fails; findings are report entries.
pub fn validate(system: &DaeSystem, weights: &UncertaintyModel, grid: &TimeGrid) -> ValidationReport {
    let mut out = Vec::new();
    let (m, n) = system.f.shape();
    let p = system.p();
    if m == 0 {
        out.push(Violation::EmptyF);
    }
    if n == 0 {
        out.push(Violation::NoStates);
    }
    if p == 0 {
        out.push(Violation::NoObservations);
    }
    if system.f.iter().any(|v| !v.is_finite()) {
        out.push(Violation::NonFiniteF);
    }
    if !(system.t0 < system.t_final) {
        out.push(Violation::Horizon { t0: system.t0, t_final: system.t_final });
    }
    let tol = 1e-12 * (1.0 + system.t_final.abs().max(system.t0.abs()));
    if (grid.t0() - system.t0).abs() > tol || (grid.t_final() - system.t_final).abs() > tol {
        out.push(Violation::GridEndpoints {
            grid: (grid.t0(), grid.t_final()),
            system: (system.t0, system.t_final),
        });
    }
    if weights.q0.shape() != (m, m) {
        out.push(Violation::Shape { what: "Q0", t: grid.t0(), found: weights.q0.shape(), expected: (m, m) });
    } else if m > 0 && !is_spd(&weights.q0) {
        out.push(Violation::NotPositiveDefinite { what: "Q0", t: None });
    }

    let checks: [(&'static str, &MatrixEvaluator, (usize, usize), bool); 4] = [
        ("C", &system.c, (m, n), false),
        ("H", &system.h, (p, n), false),
        ("Q", &weights.q, (m, m), true),
        ("R", &weights.r, (p, p), true),
    ];
    for (what, eval, expected, spd) in checks {
        for half in 0..=2 * grid.steps() {
            let t = grid.half_node(half);
            let value = eval.eval(t);
            if value.shape() != expected {
                out.push(Violation::Shape { what, t, found: value.shape(), expected });
                break;
            }
            if value.iter().any(|v| !v.is_finite()) {
                out.push(Violation::NonFinite { what, t });
                break;
            }
            if spd && expected.0 > 0 && !is_spd(&value) {
                out.push(Violation::NotPositiveDefinite { what, t: Some(t) });
                break;
            }
            if eval.is_constant() {
                break;
            }
        }
    }
    ValidationReport { violations: out }
}
