//! δ* and the ε-sweep for an observable and a non-observable direction.

use minimax_dae::example;
use minimax_dae::filter::FilterOptions;
use minimax_dae::observability::{epsilon_sweep, geometric_schedule};
use minimax_dae::reduction::{svd_reduce, to_canonical};
use nalgebra::DVector;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let sys = example::system();
    let canon = to_canonical(&sys, &example::weights(), &svd_reduce(&sys.f))?;
    let grid = sys.grid(1000)?;
    let schedule = geometric_schedule(1e-2, 1e-6, 5);
    for l in [[0.0, 1.0], [1.0, 0.0]] {
        let v = epsilon_sweep(&canon, &DVector::from_row_slice(&l), &schedule, &grid, &FilterOptions::default())?;
        println!(
            "l = {l:?}: observable {} (δ* = {:.3e}, half grid {:?}, tol {:.1e}), σ̂ slope {:.3}",
            v.observable, v.delta, v.delta_half_grid, v.tolerance, v.growth_rate
        );
        for e in &v.sweep {
            println!("  eps {:.0e}  sigma_hat {:?}", e.eps, e.sigma_hat);
        }
    }
    Ok(())
}
