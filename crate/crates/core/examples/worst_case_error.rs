//! Worst-case error of the exact minimax weights of the bundled example, and
//! the admissibility residual of the ε-filter's weights as ε shrinks (they
//! solve the adjoint equations only up to the regularization residual).

use minimax_dae::cli::filter_duals_on;
use minimax_dae::example;
use minimax_dae::filter::FilterOptions;
use minimax_dae::error::Error;
use minimax_dae::oracle::worst_case_error;
use minimax_dae::reduction::{svd_reduce, to_canonical};
use nalgebra::DVector;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let sys = example::system();
    let canon = to_canonical(&sys, &example::weights(), &svd_reduce(&sys.f))?;
    let grid = sys.grid(1000)?;
    let l = DVector::from_row_slice(&[0.0, 1.0]);
    let exact = worst_case_error(&canon, &l, &example::optimal_weights(1.0, &grid), &grid)?;
    println!("σ(T, ℓ, û) = {:.8}  closed form {:.8}", exact.value, example::gain(1.0));
    for eps in [1e-2, 1e-3, 1e-4, 1e-5, 1e-6] {
        let (_, u, _) = filter_duals_on(&canon, &l, eps, &grid, &FilterOptions::default())?;
        match worst_case_error(&canon, &l, &u, &grid) {
            Ok(w) => println!("eps {eps:.0e}: σ(T, ℓ, û_ε) = {:.6}", w.value),
            Err(Error::Infinite { residual, tolerance }) => {
                println!("eps {eps:.0e}: inadmissible, residual {residual:.2e} (tol {tolerance:.1e})")
            }
            Err(e) => return Err(e.into()),
        }
    }
    Ok(())
}
