//! SVD reduction of `F` to `[I_r 0; 0 0]` and the block splitting of every
//! coefficient.
//!
//! With `F = U' S V`, `S = [D^½ 0; 0 0]` and `Λ = diag(D^½, I)`, the change of
//! variables `x̃ = Λ V x` turns the plant into
//!
//! ```text
//! d(F̃x̃)/dt = C̃x̃ + Uf,   y = H̃x̃ + η,   F̃ = [I_r 0; 0 0]
//! C̃ = U C V'Λ⁻¹,   H̃ = H V'Λ⁻¹,   Q̃0 = U Q0 U',   Q̃ = U Q U'
//! ```
//!
//! and `⟨ℓ, Fx⟩ = ⟨Uℓ, F̃x̃⟩`. Blocks of dimension zero are empty matrices.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::model::{DaeSystem, MatrixEvaluator, UncertaintyModel};
use crate::numerics::{full_svd, spd_inverse, symmetrize, RANK_TOL};

#[derive(Clone, Debug)]
pub struct CanonicalTransform {
    /// `m × m`, rows are left singular vectors.
    pub u: DMatrix<f64>,
    /// `n × n`, rows are right singular vectors.
    pub v: DMatrix<f64>,
    /// Squared nonzero singular values (eigenvalues of `FF'`).
    pub d: DVector<f64>,
    pub r: usize,
}

impl CanonicalTransform {
    pub fn m(&self) -> usize {
        self.u.nrows()
    }

    pub fn n(&self) -> usize {
        self.v.nrows()
    }

    /// `S = [D^½ 0; 0 0]`, `m × n`.
    pub fn s(&self) -> DMatrix<f64> {
        let mut s = DMatrix::zeros(self.m(), self.n());
        for i in 0..self.r {
            s[(i, i)] = self.d[i].sqrt();
        }
        s
    }

    /// `U' S V`.
    pub fn reconstruct(&self) -> DMatrix<f64> {
        self.u.transpose() * self.s() * &self.v
    }

    /// `Λ⁻¹ = diag(D^-½, I)`.
    pub fn lambda_inv(&self) -> DMatrix<f64> {
        let mut l = DMatrix::identity(self.n(), self.n());
        for i in 0..self.r {
            l[(i, i)] = 1.0 / self.d[i].sqrt();
        }
        l
    }

    /// `V'Λ⁻¹`: canonical state to original state.
    pub fn state_from_canonical(&self) -> DMatrix<f64> {
        self.v.transpose() * self.lambda_inv()
    }
}

/// SVD of `F` with a deterministic basis choice: inside every cluster of
/// equal singular values (and inside both kernels) the singular vectors are
/// rotated to be as close as possible to the coordinate axes with the same
/// indices. An `F` that is already `[I_r 0; 0 0]` gets `U = I`, `V = I`.
pub fn svd_reduce(f: &DMatrix<f64>) -> CanonicalTransform {
    let (m, n) = f.shape();
    let svd = full_svd(f);
    let r = svd.rank();
    let mut v_cols = svd.v_t.transpose();
    let largest = svd.singular.iter().cloned().fold(0.0, f64::max);

    let mut start = 0;
    while start < r {
        let mut end = start + 1;
        while end < r && (svd.singular[start] - svd.singular[end]).abs() <= RANK_TOL * largest {
            end += 1;
        }
        align_to_axes(&mut v_cols, start, end);
        start = end;
    }
    align_to_axes(&mut v_cols, r, n);

    let mut u_cols = DMatrix::zeros(m, m);
    for i in 0..r {
        let col = f * v_cols.column(i) / svd.singular[i];
        u_cols.set_column(i, &col);
    }
    if m > r {
        u_cols.columns_mut(r, m - r).copy_from(&svd.u.columns(r, m - r));
        align_to_axes(&mut u_cols, r, m);
    }
    let d = DVector::from_iterator(r, svd.singular.iter().take(r).map(|s| s * s));
    CanonicalTransform { u: u_cols.transpose(), v: v_cols.transpose(), d, r }
}

/// Orthogonal Procrustes: replace columns `start..end` of `cols` by the
/// rotation of their span closest to the identity columns `start..end`.
fn align_to_axes(cols: &mut DMatrix<f64>, start: usize, end: usize) {
    let k = end.saturating_sub(start);
    if k == 0 {
        return;
    }
    let block = cols.columns(start, k).into_owned();
    let target = block.rows(start, k).into_owned();
    let rot = if k == 1 {
        let pivot = if target[(0, 0)].abs() > 1e-12 {
            target[(0, 0)]
        } else {
            let i = block.column(0).iamax();
            block[(i, 0)]
        };
        DMatrix::from_element(1, 1, pivot.signum())
    } else {
        let svd = target.svd(true, true);
        svd.u.unwrap() * svd.v_t.unwrap()
    };
    cols.columns_mut(start, k).copy_from(&(block * rot));
}

/// Coefficient blocks at one instant. `q*` are blocks of `Q̃⁻¹`; the `s*`
/// blocks split `H̃'RH̃`.
#[derive(Clone, Debug)]
pub struct CanonicalBlocks {
    pub t: f64,
    pub c1: DMatrix<f64>,
    pub c2: DMatrix<f64>,
    pub c3: DMatrix<f64>,
    pub c4: DMatrix<f64>,
    pub q1: DMatrix<f64>,
    pub q2: DMatrix<f64>,
    pub q4: DMatrix<f64>,
    pub s1: DMatrix<f64>,
    pub s2: DMatrix<f64>,
    pub s4: DMatrix<f64>,
    /// `H̃ = H V'Λ⁻¹`, `p × n`.
    pub h: DMatrix<f64>,
    pub r: DMatrix<f64>,
}

impl CanonicalBlocks {
    /// `C̃` reassembled from its blocks.
    pub fn c_full(&self) -> DMatrix<f64> {
        join(&self.c1, &self.c2, &self.c3, &self.c4)
    }

    /// `Q̃⁻¹` reassembled from its blocks.
    pub fn q_inverse_full(&self) -> DMatrix<f64> {
        join(&self.q1, &self.q2, &self.q2.transpose(), &self.q4)
    }
}

fn join(a: &DMatrix<f64>, b: &DMatrix<f64>, c: &DMatrix<f64>, d: &DMatrix<f64>) -> DMatrix<f64> {
    let (r1, c1) = a.shape();
    let mut out = DMatrix::zeros(r1 + c.nrows(), c1 + b.ncols());
    out.view_mut((0, 0), a.shape()).copy_from(a);
    out.view_mut((0, c1), b.shape()).copy_from(b);
    out.view_mut((r1, 0), c.shape()).copy_from(c);
    out.view_mut((r1, c1), d.shape()).copy_from(d);
    out
}

/// The plant in canonical coordinates, with evaluators that transform and
/// split on demand.
#[derive(Clone, Debug)]
pub struct CanonicalSystem {
    pub transform: CanonicalTransform,
    pub system: DaeSystem,
    pub weights: UncertaintyModel,
    /// `U Q0⁻¹ U'` split into blocks.
    pub q0_1: DMatrix<f64>,
    pub q0_2: DMatrix<f64>,
    pub q0_4: DMatrix<f64>,
    /// `Q0₁ − Q0₂ (Q0₄)⁻¹ Q0₂'`.
    pub q4_tilde: DMatrix<f64>,
    right: DMatrix<f64>,
}

pub fn to_canonical(system: &DaeSystem, weights: &UncertaintyModel, tf: &CanonicalTransform) -> Result<CanonicalSystem> {
    if tf.r == 0 {
        return Err(Error::RankZero);
    }
    let (m, n, r) = (system.m(), system.n(), tf.r);
    if tf.m() != m || tf.n() != n {
        return Err(Error::Shape(format!("transform is {}x{}, system F is {m}x{n}", tf.m(), tf.n())));
    }
    let q0_inv = spd_inverse(&weights.q0, "Q0")?;
    let q0t = symmetrize(&(&tf.u * q0_inv * tf.u.transpose()));
    let q0_1 = q0t.view((0, 0), (r, r)).into_owned();
    let q0_2 = q0t.view((0, r), (r, m - r)).into_owned();
    let q0_4 = q0t.view((r, r), (m - r, m - r)).into_owned();
    let q4_tilde = if m > r {
        symmetrize(&(&q0_1 - &q0_2 * spd_inverse(&q0_4, "Q0 kernel block")? * q0_2.transpose()))
    } else {
        q0_1.clone()
    };
    if q4_tilde.clone().cholesky().is_none() {
        return Err(Error::NotSpd { what: "reduced initial weight".into() });
    }
    Ok(CanonicalSystem {
        transform: tf.clone(),
        system: system.clone(),
        weights: weights.clone(),
        q0_1,
        q0_2,
        q0_4,
        q4_tilde,
        right: tf.state_from_canonical(),
    })
}

/// `(ℓ1, ℓ2) = Uℓ` split at `r`.
pub fn split_direction(l: &DVector<f64>, tf: &CanonicalTransform) -> (DVector<f64>, DVector<f64>) {
    let lt = &tf.u * l;
    let r = tf.r;
    (lt.rows(0, r).into_owned(), lt.rows(r, lt.len() - r).into_owned())
}

impl CanonicalSystem {
    pub fn r(&self) -> usize {
        self.transform.r
    }

    pub fn m(&self) -> usize {
        self.system.m()
    }

    pub fn n(&self) -> usize {
        self.system.n()
    }

    pub fn p(&self) -> usize {
        self.system.p()
    }

    pub fn t0(&self) -> f64 {
        self.system.t0
    }

    pub fn t_final(&self) -> f64 {
        self.system.t_final
    }

    pub fn is_time_invariant(&self) -> bool {
        self.system.c.is_constant()
            && self.system.h.is_constant()
            && self.weights.q.is_constant()
            && self.weights.r.is_constant()
    }

    pub fn c_tilde(&self, t: f64) -> DMatrix<f64> {
        &self.transform.u * self.system.c.eval(t) * &self.right
    }

    pub fn h_tilde(&self, t: f64) -> DMatrix<f64> {
        self.system.h.eval(t) * &self.right
    }

    /// `U Q U'`, the canonical input weight.
    pub fn q_tilde(&self, t: f64) -> DMatrix<f64> {
        symmetrize(&(&self.transform.u * self.weights.q.eval(t) * self.transform.u.transpose()))
    }

    pub fn q0_tilde(&self) -> DMatrix<f64> {
        symmetrize(&(&self.transform.u * &self.weights.q0 * self.transform.u.transpose()))
    }

    pub fn blocks_at(&self, t: f64) -> Result<CanonicalBlocks> {
        let (m, n, r) = (self.m(), self.n(), self.r());
        let c = self.c_tilde(t);
        let h = self.h_tilde(t);
        let rw = self.weights.r.eval(t);
        let s = symmetrize(&(h.transpose() * &rw * &h));
        let qi = spd_inverse(&self.q_tilde(t), "Q")?;
        Ok(CanonicalBlocks {
            t,
            c1: c.view((0, 0), (r, r)).into_owned(),
            c2: c.view((0, r), (r, n - r)).into_owned(),
            c3: c.view((r, 0), (m - r, r)).into_owned(),
            c4: c.view((r, r), (m - r, n - r)).into_owned(),
            q1: qi.view((0, 0), (r, r)).into_owned(),
            q2: qi.view((0, r), (r, m - r)).into_owned(),
            q4: qi.view((r, r), (m - r, m - r)).into_owned(),
            s1: s.view((0, 0), (r, r)).into_owned(),
            s2: s.view((0, r), (r, n - r)).into_owned(),
            s4: s.view((r, r), (n - r, n - r)).into_owned(),
            h,
            r: rw,
        })
    }

    /// The same plant written in canonical coordinates as an ordinary
    /// [`DaeSystem`], for solvers that work on any system.
    pub fn canonical_plant(&self) -> (DaeSystem, UncertaintyModel) {
        let (m, n, r, p) = (self.m(), self.n(), self.r(), self.p());
        let mut f = DMatrix::zeros(m, n);
        for i in 0..r {
            f[(i, i)] = 1.0;
        }
        let u = self.transform.u.clone();
        let right = self.right.clone();
        let wrap = |name: &str, rows, cols, src: &MatrixEvaluator, rule: Box<dyn Fn(DMatrix<f64>) -> DMatrix<f64> + Send + Sync>| {
            match src {
                MatrixEvaluator::Constant(a) => MatrixEvaluator::Constant(rule(a.clone())),
                other => {
                    let other = other.clone();
                    MatrixEvaluator::rule(name, rows, cols, move |t| rule(other.eval(t)))
                }
            }
        };
        let (u1, u2, u3) = (u.clone(), u.clone(), u.clone());
        let r1 = right.clone();
        let c = wrap("canonical C", m, n, &self.system.c, Box::new(move |c| &u1 * c * &r1));
        let h = wrap("canonical H", p, n, &self.system.h, Box::new(move |h| h * &right));
        let q = wrap("canonical Q", m, m, &self.weights.q, Box::new(move |q| symmetrize(&(&u2 * q * u2.transpose()))));
        let q0 = symmetrize(&(&u3 * &self.weights.q0 * u3.transpose()));
        (
            DaeSystem::new(f, c, h, self.t0(), self.t_final()),
            UncertaintyModel::new(q0, q, self.weights.r.clone()),
        )
    }
}
