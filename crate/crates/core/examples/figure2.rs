//! Optimal vs. ε-filter estimate of x2 on the bundled example, printed as CSV.
//!
//!     cargo run --release --example figure2 > figure2.csv

use minimax_dae::cli::figure2;
use minimax_dae::filter::FilterOptions;
use nalgebra::DVector;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let l = DVector::from_row_slice(&[0.0, 1.0]);
    let fig = figure2(&l, 1e-6, 2000, &FilterOptions::default())?;
    println!("t,optimal_estimate,suboptimal_estimate,suboptimal_error,x2_true");
    for r in fig.rows.iter().step_by(100) {
        println!(
            "{:.3},{:.6},{:.6},{:.6},{:.6}",
            r.t, r.optimal_estimate, r.suboptimal_estimate, r.suboptimal_error, r.x2_true
        );
    }
    eprintln!("final error bound {:.6}", fig.summary.final_sample.sigma_hat);
    Ok(())
}
