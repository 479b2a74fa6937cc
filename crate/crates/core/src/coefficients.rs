//! ε-dependent coefficients of the regularized reduced boundary-value problem
//! and the gain map `Φ = [K; M(εB − A'K)]`.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::numerics::{asymmetry, max_abs_eigenvalue, min_eigenvalue, spd_inverse, symmetrize};
use crate::reduction::{CanonicalBlocks, CanonicalSystem};

#[derive(Clone, Debug)]
pub struct EpsCoefficients {
    pub t: f64,
    pub eps: f64,
    pub w: DMatrix<f64>,
    pub m: DMatrix<f64>,
    pub a: DMatrix<f64>,
    pub b: DMatrix<f64>,
    pub c_eps: DMatrix<f64>,
    pub q_eps: DMatrix<f64>,
    pub s_eps: DMatrix<f64>,
    pub q4_tilde: DMatrix<f64>,
    /// `Q4⁻¹` (empty when `m = r`).
    pub q4_inv: DMatrix<f64>,
    pub blocks: CanonicalBlocks,
    /// Largest asymmetry of `Q_ε`, `S_ε`, `W` before symmetrization.
    pub raw_asymmetry: f64,
}

pub fn assemble(canon: &CanonicalSystem, t: f64, eps: f64) -> Result<EpsCoefficients> {
    if !(eps > 0.0) || !eps.is_finite() {
        return Err(Error::SingularW { t, eps });
    }
    let b = canon.blocks_at(t)?;
    let r = canon.r();
    let nr = canon.n() - r;
    let q4_inv = spd_inverse(&b.q4, "Q kernel block")?;

    let c4t_q4i = b.c4.transpose() * &q4_inv;
    let c3t_q4i = b.c3.transpose() * &q4_inv;

    let w_raw = DMatrix::identity(nr, nr) * eps + &b.s4 + &c4t_q4i * &b.c4;
    let w = symmetrize(&w_raw);
    let m = if nr == 0 {
        DMatrix::zeros(0, 0)
    } else {
        w.clone().cholesky().ok_or(Error::SingularW { t, eps })?.inverse()
    };
    let m = symmetrize(&m);
    let a = &c3t_q4i * &b.c4 + &b.s2;
    let bb = b.c2.transpose() - &c4t_q4i * b.q2.transpose();

    let amb = &a * &m * &bb;
    let c_eps = -b.c1.transpose() + &c3t_q4i * b.q2.transpose() + amb;
    let q_raw = (&a * &m * a.transpose()) * (-1.0 / eps)
        + DMatrix::identity(r, r)
        + (&b.s1 + &c3t_q4i * &b.c3) * (1.0 / eps);
    let s_raw = (&b.q1 - &b.q2 * &q4_inv * b.q2.transpose() + bb.transpose() * &m * &bb) * eps;
    let raw_asymmetry = [asymmetry(&q_raw), asymmetry(&s_raw), if nr > 0 { asymmetry(&w_raw) } else { 0.0 }]
        .into_iter()
        .fold(0.0, f64::max);

    Ok(EpsCoefficients {
        t,
        eps,
        w,
        m,
        a,
        b: bb,
        c_eps,
        q_eps: symmetrize(&q_raw),
        s_eps: symmetrize(&s_raw),
        q4_tilde: canon.q4_tilde.clone(),
        q4_inv,
        blocks: b,
        raw_asymmetry,
    })
}

/// `Φ = [K; M(εB − A'K)]`, `n × r`.
pub fn phi(coeffs: &EpsCoefficients, k: &DMatrix<f64>) -> DMatrix<f64> {
    let r = k.nrows();
    let nr = coeffs.m.nrows();
    let mut out = DMatrix::zeros(r + nr, r);
    out.view_mut((0, 0), (r, r)).copy_from(k);
    if nr > 0 {
        let bottom = &coeffs.m * (&coeffs.b * coeffs.eps - coeffs.a.transpose() * k);
        out.view_mut((r, 0), (nr, r)).copy_from(&bottom);
    }
    out
}

impl EpsCoefficients {
    /// Definiteness checks: `S_ε ≻ 0`, `Q_ε ⪰ 0` (relative slack 1e-9),
    /// `W ≻ 0`. Returns the list of failures.
    pub fn invariant_violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        if self.s_eps.clone().cholesky().is_none() {
            out.push(format!("S_eps not positive definite at t = {}", self.t));
        }
        let scale = max_abs_eigenvalue(&self.q_eps);
        if min_eigenvalue(&self.q_eps) < -1e-9 * scale.max(1.0) {
            out.push(format!("Q_eps not positive semidefinite at t = {}", self.t));
        }
        if self.w.nrows() > 0 && self.w.clone().cholesky().is_none() {
            out.push(format!("W not positive definite at t = {}", self.t));
        }
        out
    }
}
