//! SVD reduction of a random rank-deficient descriptor matrix.

use minimax_dae::reduction::svd_reduce;
use nalgebra::DMatrix;

fn main() {
    // 3 × 5, rank 2.
    let a = DMatrix::from_row_slice(3, 2, &[1.0, 0.0, 2.0, 1.0, 0.0, 3.0]);
    let b = DMatrix::from_row_slice(2, 5, &[1.0, -1.0, 0.0, 2.0, 0.5, 0.0, 1.0, 1.0, -1.0, 0.0]);
    let f = a * b;
    let tf = svd_reduce(&f);
    println!("rank {}", tf.r);
    println!("singular values² {:?}", tf.d.as_slice());
    println!("‖UᵀSV − F‖_max = {:.2e}", (tf.reconstruct() - &f).amax());
    println!("‖UᵀU − I‖_max = {:.2e}", (tf.u.transpose() * &tf.u - DMatrix::identity(3, 3)).amax());
}
