use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};

/// Relative singular-value cutoff shared by every rank and kernel decision.
pub const RANK_TOL: f64 = 1e-10;

/// Full singular value decomposition `a = u * diag(singular) * v_t` with
/// square orthogonal `u` (rows×rows) and `v_t` (cols×cols), singular values
/// sorted in decreasing order.
#[derive(Clone, Debug)]
pub struct FullSvd {
    pub u: DMatrix<f64>,
    pub singular: DVector<f64>,
    pub v_t: DMatrix<f64>,
}

impl FullSvd {
    pub fn rank(&self) -> usize {
        numerical_rank(&self.singular)
    }
}

pub fn numerical_rank(singular: &DVector<f64>) -> usize {
    let largest = singular.iter().cloned().fold(0.0, f64::max);
    if largest == 0.0 {
        return 0;
    }
    singular.iter().filter(|&&s| s > RANK_TOL * largest).count()
}

pub fn full_svd(a: &DMatrix<f64>) -> FullSvd {
    let (rows, cols) = a.shape();
    let k = rows.min(cols);
    if k == 0 {
        return FullSvd {
            u: DMatrix::identity(rows, rows),
            singular: DVector::zeros(0),
            v_t: DMatrix::identity(cols, cols),
        };
    }
    // nalgebra's bidiagonal SVD loses accuracy on rank-deficient input, so
    // the factorization itself is delegated to faer.
    let fa = faer::Mat::<f64>::from_fn(rows, cols, |i, j| a[(i, j)]);
    let svd = fa.svd().expect("SVD of a finite matrix converges");
    let (u, s, v) = (svd.U(), svd.S(), svd.V());
    let s = s.column_vector();
    FullSvd {
        u: DMatrix::from_fn(rows, rows, |i, j| u[(i, j)]),
        singular: DVector::from_fn(k, |i, _| s[i]),
        v_t: DMatrix::from_fn(cols, cols, |i, j| v[(j, i)]),
    }
}

/// Moore-Penrose pseudoinverse via SVD with the shared rank tolerance.
pub fn pinv(a: &DMatrix<f64>) -> DMatrix<f64> {
    let (rows, cols) = a.shape();
    if rows == 0 || cols == 0 {
        return DMatrix::zeros(cols, rows);
    }
    let svd = full_svd(a);
    let mut out = DMatrix::zeros(cols, rows);
    for i in 0..svd.rank() {
        out += svd.v_t.row(i).transpose() * svd.u.column(i).transpose() / svd.singular[i];
    }
    out
}

/// Orthonormal basis (as columns) of the kernel of `a`; `cols × 0` when the
/// kernel is trivial.
pub fn null_basis(a: &DMatrix<f64>) -> DMatrix<f64> {
    let (_, cols) = a.shape();
    if cols == 0 {
        return DMatrix::zeros(0, 0);
    }
    let svd = full_svd(a);
    let rank = svd.rank();
    svd.v_t.rows(rank, cols - rank).transpose()
}

pub fn symmetrize(a: &DMatrix<f64>) -> DMatrix<f64> {
    (a + a.transpose()) * 0.5
}

/// Largest absolute entry of `a - a'`.
pub fn asymmetry(a: &DMatrix<f64>) -> f64 {
    (a - a.transpose()).amax()
}

pub fn min_eigenvalue(sym: &DMatrix<f64>) -> f64 {
    if sym.nrows() == 0 {
        return f64::INFINITY;
    }
    SymmetricEigen::new(symmetrize(sym)).eigenvalues.min()
}

pub fn max_abs_eigenvalue(sym: &DMatrix<f64>) -> f64 {
    if sym.nrows() == 0 {
        return 0.0;
    }
    SymmetricEigen::new(symmetrize(sym)).eigenvalues.amax()
}

/// Symmetric and positive definite, decided by a Cholesky factorization of
/// the symmetric part after checking the asymmetry is at round-off level.
pub fn is_spd(a: &DMatrix<f64>) -> bool {
    if !a.is_square() || a.iter().any(|v| !v.is_finite()) {
        return false;
    }
    if a.nrows() == 0 {
        return true;
    }
    let scale = a.amax().max(f64::MIN_POSITIVE);
    if asymmetry(a) > 1e-10 * scale {
        return false;
    }
    symmetrize(a).cholesky().is_some() && min_eigenvalue(a) > 0.0
}

pub fn spd_inverse(a: &DMatrix<f64>, what: &str) -> Result<DMatrix<f64>> {
    if a.nrows() == 0 {
        return Ok(DMatrix::zeros(0, 0));
    }
    if !is_spd(a) {
        return Err(Error::NotSpd { what: what.to_owned() });
    }
    let chol = symmetrize(a).cholesky().ok_or_else(|| Error::NotSpd { what: what.to_owned() })?;
    Ok(symmetrize(&chol.inverse()))
}

/// `a^{-1/2}` of a symmetric positive definite matrix via its eigen-decomposition.
pub fn spd_sqrt_inv(a: &DMatrix<f64>, what: &str) -> Result<DMatrix<f64>> {
    spd_power(a, -0.5, what)
}

pub fn spd_sqrt(a: &DMatrix<f64>, what: &str) -> Result<DMatrix<f64>> {
    spd_power(a, 0.5, what)
}

fn spd_power(a: &DMatrix<f64>, power: f64, what: &str) -> Result<DMatrix<f64>> {
    if a.nrows() == 0 {
        return Ok(DMatrix::zeros(0, 0));
    }
    if !is_spd(a) {
        return Err(Error::NotSpd { what: what.to_owned() });
    }
    let eig = SymmetricEigen::new(symmetrize(a));
    let d = eig.eigenvalues.map(|l| l.powf(power));
    let v = &eig.eigenvectors;
    Ok(symmetrize(&(v * DMatrix::from_diagonal(&d) * v.transpose())))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn rank_deficient(rows: usize, cols: usize, rank: usize, seed: &[f64]) -> DMatrix<f64> {
        let mut it = seed.iter().cycle();
        let a = DMatrix::from_fn(rows, rank, |_, _| *it.next().unwrap());
        let b = DMatrix::from_fn(rank, cols, |_, _| *it.next().unwrap());
        a * b
    }

    #[test]
    fn pinv_of_identity_is_identity() {
        let i = DMatrix::<f64>::identity(4, 4);
        assert!((pinv(&i) - &i).amax() < 1e-15);
    }

    #[test]
    fn kernel_of_full_column_rank_is_empty() {
        // F' of the bundled example: 4x2 with orthonormal columns.
        let ft = DMatrix::from_row_slice(4, 2, &[1., 0., 0., 1., 0., 0., 0., 0.]);
        assert_eq!(null_basis(&ft).shape(), (2, 0));
        let f = ft.transpose();
        let k = null_basis(&f);
        assert_eq!(k.shape(), (4, 2));
        assert!((&f * &k).amax() < 1e-14);
    }

    #[test]
    fn full_svd_of_wide_and_tall_matrices_is_orthogonal() {
        let a = DMatrix::from_row_slice(2, 3, &[1., 2., 3., 4., 5., 6.]);
        for m in [a.clone(), a.transpose()] {
            let s = full_svd(&m);
            let (r, c) = m.shape();
            assert!((&s.u * s.u.transpose() - DMatrix::identity(r, r)).amax() < 1e-12);
            assert!((&s.v_t * s.v_t.transpose() - DMatrix::identity(c, c)).amax() < 1e-12);
            let mut sigma = DMatrix::zeros(r, c);
            for i in 0..s.singular.len() {
                sigma[(i, i)] = s.singular[i];
            }
            assert!((&s.u * sigma * &s.v_t - &m).amax() < 1e-12);
        }
    }

    #[test]
    fn empty_inputs() {
        assert_eq!(pinv(&DMatrix::zeros(0, 3)).shape(), (3, 0));
        assert_eq!(spd_inverse(&DMatrix::zeros(0, 0), "x").unwrap().shape(), (0, 0));
        assert_eq!(numerical_rank(&DVector::zeros(3)), 0);
    }

    #[test]
    fn sqrt_inv_whitens() {
        let q = DMatrix::from_row_slice(3, 3, &[4., 1., 0.5, 1., 3., 0.2, 0.5, 0.2, 2.]);
        let s = spd_sqrt_inv(&q, "q").unwrap();
        assert!((&s * &q * &s - DMatrix::identity(3, 3)).amax() < 1e-9);
    }

    #[test]
    fn not_spd_is_rejected() {
        let q = DMatrix::from_row_slice(2, 2, &[1., 0., 0., 0.]);
        assert!(matches!(spd_sqrt_inv(&q, "Q0"), Err(Error::NotSpd { .. })));
        let asym = DMatrix::from_row_slice(2, 2, &[2., 1., 0., 2.]);
        assert!(!is_spd(&asym));
    }

    proptest! {
        #[test]
        fn penrose_identities(
            rows in 1usize..6, cols in 1usize..6, rank in 1usize..4,
            seed in proptest::collection::vec(-2.0f64..2.0, 40)
        ) {
            let a = rank_deficient(rows, cols, rank.min(rows).min(cols), &seed);
            prop_assume!(a.amax() > 1e-3);
            let p = pinv(&a);
            let scale = 1.0 + a.amax() * p.amax();
            prop_assert!((&a * &p * &a - &a).amax() < 1e-9 * scale * a.amax().max(1.0));
            prop_assert!((&p * &a * &p - &p).amax() < 1e-9 * scale * p.amax().max(1.0));
            prop_assert!(asymmetry(&(&a * &p)) < 1e-9 * scale);
            prop_assert!(asymmetry(&(&p * &a)) < 1e-9 * scale);
        }

        #[test]
        fn null_basis_is_orthonormal_kernel(
            rows in 1usize..6, cols in 1usize..7, rank in 1usize..4,
            seed in proptest::collection::vec(-2.0f64..2.0, 40)
        ) {
            let a = rank_deficient(rows, cols, rank.min(rows).min(cols), &seed);
            let k = null_basis(&a);
            prop_assert!((&a * &k).amax() < 1e-9 * (1.0 + a.amax()));
            prop_assert!((k.transpose() * &k - DMatrix::identity(k.ncols(), k.ncols())).amax() < 1e-10);
            let svd = full_svd(&a);
            prop_assert_eq!(k.ncols(), cols - svd.rank());
        }
    }
}
