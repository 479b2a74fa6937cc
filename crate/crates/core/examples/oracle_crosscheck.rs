//! Filter duals against the directly minimized discretized Tikhonov functional.

use minimax_dae::cli::filter_duals_on;
use minimax_dae::example;
use minimax_dae::filter::FilterOptions;
use minimax_dae::oracle::tikhonov_minimize;
use minimax_dae::reduction::{svd_reduce, to_canonical};
use nalgebra::DVector;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let sys = example::system();
    let canon = to_canonical(&sys, &example::weights(), &svd_reduce(&sys.f))?;
    let l = DVector::from_row_slice(&[0.0, 1.0]);
    let eps = 1e-4;
    for n in [500, 1000, 2000] {
        let grid = sys.grid(n)?;
        let oracle = tikhonov_minimize(&canon, &l, eps, &grid)?;
        let (value, u, _) = filter_duals_on(&canon, &l, eps, &grid, &FilterOptions::default())?;
        let du = u.iter().zip(&oracle.u).map(|(a, b)| (a - b).amax()).fold(0.0, f64::max);
        println!(
            "N = {n:5}: oracle 𝒯 {:.10}  filter 𝒯 {value:.10}  rel {:.2e}  max |Δu| {du:.2e}",
            oracle.tikhonov_value,
            (value - oracle.tikhonov_value).abs() / oracle.tikhonov_value
        );
    }
    Ok(())
}
