//! Simulate the bundled scenario with seeded uniform noise, then estimate
//! ⟨ℓ, Fx(T)⟩ and compare with the truth.

use minimax_dae::example;
use minimax_dae::filter::{run_estimate, FilterOptions};
use minimax_dae::reduction::{svd_reduce, to_canonical};
use minimax_dae::simulate::{observe, simulate, NoiseSpec};
use nalgebra::DVector;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let sys = example::system();
    let canon = to_canonical(&sys, &example::weights(), &svd_reduce(&sys.f))?;
    let grid = sys.grid(2000)?;
    let mut scenario = example::scenario();
    scenario.noise = NoiseSpec::Uniform { seed: 42, amplitude: None };
    let traj = simulate(&canon, &scenario, &grid)?;
    let y = observe(&canon, &traj, &scenario.noise)?;

    let l = DVector::from_row_slice(&[0.0, 1.0]);
    let run = run_estimate(&canon, &l, 1e-6, &grid, Some(&y), &FilterOptions::default())?;
    let truth = l.dot(&(&sys.f * traj.x.last().unwrap()));
    let est = run.report.estimate.unwrap();
    println!("estimate {est:.6}  truth {truth:.6}  |error| {:.3e}  bound {:.6}", (est - truth).abs(), run.report.sigma_hat);
    Ok(())
}
