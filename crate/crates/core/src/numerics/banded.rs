//! Sparse banded linear least squares by sequential Givens rotations.
//!
//! Rows are stored as a dense slice starting at some column. After sorting
//! rows by their first column, the triangular factor `R` has an upper
//! bandwidth no larger than the longest row, so each row is folded into `R`
//! in `O(w^2)` work.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

#[derive(Clone, Debug)]
struct Row {
    start: usize,
    values: Vec<f64>,
    rhs: f64,
    group: usize,
}

#[derive(Clone, Debug)]
pub struct BandedLeastSquares {
    ncols: usize,
    groups: usize,
    rows: Vec<Row>,
}

#[derive(Clone, Debug)]
pub struct LeastSquaresSolution {
    pub x: DVector<f64>,
    /// Sum of squared residuals per row group, evaluated at `x` (ridge rows excluded).
    pub group_residuals: Vec<f64>,
    /// Ratio of the largest to the smallest pivot of `R`.
    pub condition_estimate: f64,
}

impl LeastSquaresSolution {
    pub fn residual(&self) -> f64 {
        self.group_residuals.iter().sum()
    }
}

impl BandedLeastSquares {
    pub fn new(ncols: usize) -> Self {
        Self { ncols, groups: 1, rows: Vec::new() }
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn push_row(&mut self, start: usize, values: Vec<f64>, rhs: f64, group: usize) {
        assert!(start + values.len() <= self.ncols, "row exceeds column count");
        self.groups = self.groups.max(group + 1);
        self.rows.push(Row { start, values, rhs, group });
    }

    /// Push every row of `block` (columns `start..start + block.ncols()`),
    /// scaled by `scale`, against `scale * rhs`.
    pub fn push_block(
        &mut self,
        start: usize,
        block: &DMatrix<f64>,
        rhs: &DVector<f64>,
        scale: f64,
        group: usize,
    ) {
        assert_eq!(block.nrows(), rhs.len());
        for i in 0..block.nrows() {
            let values = block.row(i).iter().map(|v| v * scale).collect();
            self.push_row(start, values, scale * rhs[i], group);
        }
    }

    /// Minimize `sum_rows (a.x - b)^2 + ridge * |x|^2`.
    ///
    /// Columns that receive no pivot (rank deficiency without ridge) are
    /// set to zero, which still yields a minimizer of the residual.
    pub fn solve(&self, ridge: f64) -> Result<LeastSquaresSolution> {
        let n = self.ncols;
        let mut order: Vec<usize> = (0..self.rows.len()).collect();
        order.sort_by_key(|&i| self.rows[i].start);
        let w = self.rows.iter().map(|r| r.values.len()).max().unwrap_or(1).max(1);

        let mut r = vec![0.0; n * w];
        let mut filled = vec![false; n];
        let mut qtb = vec![0.0; n];
        let mut buf = vec![0.0; w];

        let ridge_sqrt = ridge.max(0.0).sqrt();
        let mut ridge_cursor = 0;
        let mut fold = |start: usize, values: &[f64], rhs: f64| {
            buf.fill(0.0);
            buf[..values.len()].copy_from_slice(values);
            let mut rhs = rhs;
            let mut j = start;
            while j < n {
                if buf[0] != 0.0 {
                    let rj = &mut r[j * w..(j + 1) * w];
                    if !filled[j] {
                        rj.copy_from_slice(&buf);
                        qtb[j] = rhs;
                        filled[j] = true;
                        return;
                    }
                    let (a, b) = (rj[0], buf[0]);
                    let hyp = a.hypot(b);
                    let (c, s) = (a / hyp, b / hyp);
                    for (ri, bi) in rj.iter_mut().zip(buf.iter_mut()) {
                        let (x, y) = (*ri, *bi);
                        *ri = c * x + s * y;
                        *bi = -s * x + c * y;
                    }
                    let (x, y) = (qtb[j], rhs);
                    qtb[j] = c * x + s * y;
                    rhs = -s * x + c * y;
                }
                buf.rotate_left(1);
                buf[w - 1] = 0.0;
                j += 1;
                if buf.iter().all(|v| *v == 0.0) {
                    return;
                }
            }
        };

        for &i in &order {
            let row = &self.rows[i];
            if ridge_sqrt > 0.0 {
                while ridge_cursor < n && ridge_cursor <= row.start {
                    fold(ridge_cursor, &[ridge_sqrt], 0.0);
                    ridge_cursor += 1;
                }
            }
            fold(row.start, &row.values, row.rhs);
        }
        if ridge_sqrt > 0.0 {
            while ridge_cursor < n {
                fold(ridge_cursor, &[ridge_sqrt], 0.0);
                ridge_cursor += 1;
            }
        }

        let max_pivot = (0..n).filter(|&j| filled[j]).map(|j| r[j * w].abs()).fold(0.0, f64::max);
        let tiny = max_pivot * 1e-15;
        let mut min_pivot = f64::INFINITY;
        let mut x = DVector::zeros(n);
        for j in (0..n).rev() {
            let pivot = r[j * w];
            if !filled[j] || pivot.abs() <= tiny {
                continue;
            }
            min_pivot = min_pivot.min(pivot.abs());
            let mut acc = qtb[j];
            for k in 1..w.min(n - j) {
                acc -= r[j * w + k] * x[j + k];
            }
            x[j] = acc / pivot;
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("least-squares solution is not finite".into()));
        }
        let condition_estimate = if min_pivot.is_finite() { max_pivot / min_pivot } else { f64::INFINITY };

        let group_residuals = self.group_residuals(&x);
        Ok(LeastSquaresSolution { x, group_residuals, condition_estimate })
    }

    /// Sum of squared residuals per row group at an arbitrary `x`.
    pub fn group_residuals(&self, x: &DVector<f64>) -> Vec<f64> {
        let mut out = vec![0.0; self.groups];
        for row in &self.rows {
            let dot: f64 = row.values.iter().zip(x.rows(row.start, row.values.len()).iter()).map(|(a, b)| a * b).sum();
            out[row.group] += (dot - row.rhs).powi(2);
        }
        out
    }

    /// Dense copy of the system, for tests and small problems.
    pub fn to_dense(&self) -> (DMatrix<f64>, DVector<f64>) {
        let mut a = DMatrix::zeros(self.rows.len(), self.ncols);
        let mut b = DVector::zeros(self.rows.len());
        for (i, row) in self.rows.iter().enumerate() {
            for (k, v) in row.values.iter().enumerate() {
                a[(i, row.start + k)] = *v;
            }
            b[i] = row.rhs;
        }
        (a, b)
    }
}
