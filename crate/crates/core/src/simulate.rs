//! Ground-truth trajectories and observation records.
//!
//! In canonical coordinates the plant splits into `x1' = C̃1x1 + C̃2x2 + f̃1`
//! and the constraint `0 = C̃3x1 + C̃4x2 + f̃2`. The free part `x2` is
//! supplied by the scenario (the pencil leaves it undetermined), `x1` is
//! integrated with RK4, and the constraint is checked at every node.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::filter::ObservationRecord;
use crate::model::{MatrixEvaluator, TimeGrid};
use crate::numerics::{rk4, OdeProblem};
use crate::reduction::CanonicalSystem;

/// Observation noise `η`.
#[derive(Clone, Debug, PartialEq)]
pub enum NoiseSpec {
    None,
    /// A fixed vector at every instant (an adversarial realization rather
    /// than a zero-mean process).
    Constant(DVector<f64>),
    /// Independent uniform samples on `[−a_i, a_i]` per node and channel,
    /// from ChaCha8 seeded with `seed`. Without `amplitude`, `a_i` is chosen
    /// so that `Σ_i R_ii a_i²/3 · (T − t0) ≤ 1`.
    Uniform { seed: u64, amplitude: Option<DVector<f64>> },
}

/// A scenario, in canonical coordinates.
#[derive(Clone, Debug)]
pub struct ScenarioSpec {
    /// `x1(t0)`, length `r`.
    pub x1_initial: DVector<f64>,
    /// `x2(t)`, an `(n − r) × 1` evaluator; `None` means zero.
    pub free: Option<MatrixEvaluator>,
    /// `f(t)` in original coordinates, `m × 1`; `None` means zero.
    pub input: Option<MatrixEvaluator>,
    pub noise: NoiseSpec,
}

/// Largest constraint residual accepted, relative to `1 + max |x|`.
pub const CONSISTENCY_TOL: f64 = 1e-8;

#[derive(Clone, Debug)]
pub struct Trajectory {
    pub grid: TimeGrid,
    /// State in original coordinates.
    pub x: Vec<DVector<f64>>,
    /// State in canonical coordinates.
    pub x_canonical: Vec<DVector<f64>>,
    /// `‖C̃3x1 + C̃4x2 + f̃2‖∞` at each node.
    pub algebraic_residual: Vec<f64>,
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct TrajectorySummary {
    pub grid_steps: usize,
    pub max_algebraic_residual: f64,
}

impl Trajectory {
    pub fn summary(&self) -> TrajectorySummary {
        TrajectorySummary {
            grid_steps: self.grid.steps(),
            max_algebraic_residual: self.algebraic_residual.iter().copied().fold(0.0, f64::max),
        }
    }
}

fn column(ev: &Option<MatrixEvaluator>, t: f64, len: usize) -> DVector<f64> {
    match ev {
        Some(ev) => ev.eval(t).column(0).into_owned(),
        None => DVector::zeros(len),
    }
}

fn check_column(ev: &Option<MatrixEvaluator>, rows: usize, what: &str) -> Result<()> {
    match ev {
        Some(ev) if ev.shape() != (rows, 1) => {
            Err(Error::Shape(format!("{what} is {:?}, expected {rows}x1", ev.shape())))
        }
        _ => Ok(()),
    }
}

pub fn simulate(canon: &CanonicalSystem, scenario: &ScenarioSpec, grid: &TimeGrid) -> Result<Trajectory> {
    let (m, n, r) = (canon.m(), canon.n(), canon.r());
    if scenario.x1_initial.len() != r {
        return Err(Error::Shape(format!("x1(t0) has length {}, expected r = {r}", scenario.x1_initial.len())));
    }
    check_column(&scenario.free, n - r, "free components")?;
    check_column(&scenario.input, m, "input")?;
    let u = &canon.transform.u;
    let constant_c = canon.system.c.is_constant();
    let c_const = canon.c_tilde(grid.t0());
    let c_at = |t: f64| if constant_c { c_const.clone() } else { canon.c_tilde(t) };

    let problem = OdeProblem::forward(scenario.x1_initial.as_slice().to_vec(), |p, x1: &[f64], dx: &mut [f64]| {
        let c = c_at(p.t);
        let x2 = column(&scenario.free, p.t, n - r);
        let f = u * column(&scenario.input, p.t, m);
        let x1 = DVector::from_column_slice(x1);
        let d = c.view((0, 0), (r, r)) * x1 + c.view((0, r), (r, n - r)) * x2 + f.rows(0, r);
        dx.copy_from_slice(d.as_slice());
    });
    let x1 = rk4(problem, grid)?;

    let back = canon.transform.state_from_canonical();
    let mut x = Vec::with_capacity(x1.len());
    let mut x_canonical = Vec::with_capacity(x1.len());
    let mut algebraic_residual = Vec::with_capacity(x1.len());
    for (k, (t, x1k)) in grid.nodes().zip(&x1).enumerate() {
        let x2 = column(&scenario.free, t, n - r);
        let mut xt = DVector::zeros(n);
        xt.rows_mut(0, r).copy_from(x1k);
        xt.rows_mut(r, n - r).copy_from(&x2);
        let res = if m > r {
            let c = c_at(t);
            let f = u * column(&scenario.input, t, m);
            (c.rows(r, m - r) * &xt + f.rows(r, m - r)).amax()
        } else {
            0.0
        };
        if res > CONSISTENCY_TOL * (1.0 + xt.amax()) {
            return Err(Error::InconsistentScenario { node: k, residual: res });
        }
        algebraic_residual.push(res);
        x.push(&back * &xt);
        x_canonical.push(xt);
    }
    Ok(Trajectory { grid: *grid, x, x_canonical, algebraic_residual })
}

/// Default uniform amplitude: `a² = 3 / (p (T − t0) max R_ii)`.
pub fn default_amplitude(r: &DMatrix<f64>, span: f64) -> f64 {
    let p = r.nrows() as f64;
    let rmax = r.diagonal().max().max(f64::MIN_POSITIVE);
    (3.0 / (p * span * rmax)).sqrt()
}

/// `y_k = H(t_k)x_k + η_k` (original coordinates).
pub fn observe(canon: &CanonicalSystem, trajectory: &Trajectory, noise: &NoiseSpec) -> Result<ObservationRecord> {
    let grid = &trajectory.grid;
    let p = canon.p();
    let span = grid.t_final() - grid.t0();
    let mut rng = match noise {
        NoiseSpec::Uniform { seed, .. } => Some(ChaCha8Rng::seed_from_u64(*seed)),
        _ => None,
    };
    let mut samples = Vec::with_capacity(grid.node_count());
    for (t, x) in grid.nodes().zip(&trajectory.x) {
        let mut y = canon.system.h.eval(t) * x;
        match noise {
            NoiseSpec::None => {}
            NoiseSpec::Constant(eta) => {
                if eta.len() != p {
                    return Err(Error::Shape(format!("noise has length {}, expected p = {p}", eta.len())));
                }
                y += eta;
            }
            NoiseSpec::Uniform { amplitude, .. } => {
                let amp = match amplitude {
                    Some(a) if a.len() != p => {
                        return Err(Error::Shape(format!("noise amplitude has length {}, expected p = {p}", a.len())))
                    }
                    Some(a) => a.clone(),
                    None => DVector::from_element(p, default_amplitude(&canon.weights.r.eval(t), span)),
                };
                let rng = rng.as_mut().expect("seeded above");
                for i in 0..p {
                    y[i] += if amp[i] > 0.0 { rng.gen_range(-amp[i]..=amp[i]) } else { 0.0 };
                }
            }
        }
        samples.push(y);
    }
    ObservationRecord::new(grid.nodes().collect(), samples)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::example;
    use crate::model::{DaeSystem, UncertaintyModel};
    use crate::reduction::{svd_reduce, to_canonical};

    fn canon() -> CanonicalSystem {
        let sys = example::system();
        to_canonical(&sys, &example::weights(), &svd_reduce(&sys.f)).unwrap()
    }

    fn grid(n: usize) -> TimeGrid {
        TimeGrid::new(0.0, 1.0, n).unwrap()
    }

    #[test]
    fn example_matches_closed_form() {
        let cs = canon();
        let g = grid(1000);
        let traj = simulate(&cs, &example::scenario(), &g).unwrap();
        for (t, x) in g.nodes().zip(&traj.x) {
            assert!((x - example::true_state(t)).amax() < 1e-8);
        }
        let x2_end = -0.2 + 2.0 * 1f64.cos() - 2.0;
        assert!((traj.x[g.steps()][1] - x2_end).abs() < 1e-6);
    }

    #[test]
    fn example_observations_follow_h() {
        let cs = canon();
        let g = grid(100);
        let sc = example::scenario();
        let y = observe(&cs, &simulate(&cs, &sc, &g).unwrap(), &sc.noise).unwrap();
        for (k, t) in g.nodes().enumerate() {
            let x = example::true_state(t);
            let yk = y.sample(k);
            assert!((yk[0] - (x[0] - 0.1)).abs() < 1e-8);
            assert!((yk[1] - (x[3] - 0.2)).abs() < 1e-8);
            assert!((yk[2] - (x[1] + 0.3)).abs() < 1e-8);
        }
    }

    #[test]
    fn seeded_noise_is_reproducible() {
        let cs = canon();
        let g = grid(50);
        let sc = example::scenario();
        let traj = simulate(&cs, &sc, &g).unwrap();
        let noise = NoiseSpec::Uniform { seed: 42, amplitude: None };
        let a = observe(&cs, &traj, &noise).unwrap();
        let b = observe(&cs, &traj, &noise).unwrap();
        assert_eq!(a, b);
        let c = observe(&cs, &traj, &NoiseSpec::Uniform { seed: 43, amplitude: None }).unwrap();
        assert_ne!(a, c);
        let amp = default_amplitude(&DMatrix::identity(3, 3), 1.0);
        let clean = observe(&cs, &traj, &NoiseSpec::None).unwrap();
        for k in 0..a.len() {
            for i in 0..3 {
                assert!((a.sample(k)[i] - clean.sample(k)[i]).abs() <= amp);
            }
        }
    }

    #[test]
    fn zero_dynamics_keep_state_constant() {
        let f = DMatrix::from_row_slice(2, 3, &[1., 0., 0., 0., 1., 0.]);
        let sys = DaeSystem::new(f, DMatrix::zeros(2, 3), DMatrix::identity(3, 3), 0.0, 1.0);
        let w = UncertaintyModel::new(DMatrix::identity(2, 2), DMatrix::identity(2, 2), DMatrix::identity(3, 3));
        let cs = to_canonical(&sys, &w, &svd_reduce(&sys.f)).unwrap();
        let sc = ScenarioSpec { x1_initial: DVector::from_row_slice(&[0.5, -1.0]), free: None, input: None, noise: NoiseSpec::None };
        let traj = simulate(&cs, &sc, &grid(10)).unwrap();
        assert!(traj.x.iter().all(|x| (x - &traj.x[0]).amax() == 0.0));
        let y = observe(&cs, &traj, &NoiseSpec::None).unwrap();
        assert_eq!(y.sample(0), traj.x[0].as_slice());
    }

    #[test]
    fn superposition_in_initial_state_and_input() {
        let cs = canon();
        let g = grid(40);
        let input = |a: f64| Some(MatrixEvaluator::rule("f", 2, 1, move |t| DMatrix::from_column_slice(2, 1, &[a * t, a])));
        let run = |x0: [f64; 2], a: f64| {
            let sc = ScenarioSpec { x1_initial: DVector::from_row_slice(&x0), free: None, input: input(a), noise: NoiseSpec::None };
            simulate(&cs, &sc, &g).unwrap().x
        };
        let (a, b, s) = (run([1.0, 0.0], 0.0), run([0.0, 2.0], 1.0), run([1.0, 2.0], 1.0));
        for k in 0..=g.steps() {
            assert!((&a[k] + &b[k] - &s[k]).amax() < 1e-12);
        }
    }

    #[test]
    fn inconsistent_constraint_is_rejected() {
        // x1' = x2, 0 = x1 + x2: a free x2 ≡ 0 violates the constraint.
        let f = DMatrix::from_row_slice(2, 2, &[1., 0., 0., 0.]);
        let c = DMatrix::from_row_slice(2, 2, &[0., 1., 1., 1.]);
        let sys = DaeSystem::new(f, c, DMatrix::identity(2, 2), 0.0, 1.0);
        let w = UncertaintyModel::new(DMatrix::identity(2, 2), DMatrix::identity(2, 2), DMatrix::identity(2, 2));
        let cs = to_canonical(&sys, &w, &svd_reduce(&sys.f)).unwrap();
        let sc = ScenarioSpec { x1_initial: DVector::from_row_slice(&[1.0]), free: None, input: None, noise: NoiseSpec::None };
        assert!(matches!(simulate(&cs, &sc, &grid(10)), Err(Error::InconsistentScenario { node: 0, .. })));
    }
}
