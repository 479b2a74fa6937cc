//! Coefficients sampled on the half-step lattice of a grid, stored as flat
//! column-major slices so the ODE right-hand sides run without allocating.

use nalgebra::DMatrix;

use crate::coefficients::{assemble, EpsCoefficients};
use crate::error::Result;
use crate::model::TimeGrid;
use crate::reduction::CanonicalSystem;

#[derive(Clone, Debug)]
pub(crate) struct FlatCoefficients {
    pub c: Vec<f64>,
    pub q: Vec<f64>,
    pub s: Vec<f64>,
    /// `εMB`, `(n−r) × r`.
    pub emb: Vec<f64>,
    /// `MA'`, `(n−r) × r`.
    pub mat: Vec<f64>,
    /// `H̃'R`, `n × p`.
    pub hr: Vec<f64>,
}

impl FlatCoefficients {
    fn new(e: &EpsCoefficients) -> Self {
        let hr = e.blocks.h.transpose() * &e.blocks.r;
        Self {
            c: e.c_eps.as_slice().to_vec(),
            q: e.q_eps.as_slice().to_vec(),
            s: e.s_eps.as_slice().to_vec(),
            emb: (&e.m * &e.b * e.eps).as_slice().to_vec(),
            mat: (&e.m * e.a.transpose()).as_slice().to_vec(),
            hr: hr.as_slice().to_vec(),
        }
    }
}

/// ε-coefficients on every node and midpoint of a grid; a single entry when
/// the canonical system is time-invariant.
#[derive(Clone, Debug)]
pub(crate) struct CoefficientField {
    pub r: usize,
    pub nr: usize,
    pub p: usize,
    entries: Vec<FlatCoefficients>,
    /// Full coefficients at the same lattice points (kept for the dual reconstruction).
    pub full: Vec<EpsCoefficients>,
}

impl CoefficientField {
    pub fn build(canon: &CanonicalSystem, eps: f64, grid: &TimeGrid) -> Result<Self> {
        let full = if canon.is_time_invariant() {
            vec![assemble(canon, grid.t0(), eps)?]
        } else {
            (0..=2 * grid.steps()).map(|h| assemble(canon, grid.half_node(h), eps)).collect::<Result<Vec<_>>>()?
        };
        let entries = full.iter().map(FlatCoefficients::new).collect();
        Ok(Self { r: canon.r(), nr: canon.n() - canon.r(), p: canon.p(), entries, full })
    }

    #[inline]
    pub fn at(&self, half_index: usize) -> &FlatCoefficients {
        if self.entries.len() == 1 {
            &self.entries[0]
        } else {
            &self.entries[half_index]
        }
    }

    pub fn full_at(&self, half_index: usize) -> &EpsCoefficients {
        if self.full.len() == 1 {
            &self.full[0]
        } else {
            &self.full[half_index]
        }
    }

    /// Largest `‖C_ε‖ + √(‖Q_ε‖‖S_ε‖)` over the lattice (Frobenius norms):
    /// a bound on the decay rate of the closed-loop gain dynamics.
    /// Half the Jacobian norm of the Riccati field, both near equilibrium
    /// (`‖K‖ ~ √(‖S‖/‖Q‖)`) and in the initial transient (`‖K‖ ~ k0`).
    pub fn stiffness(&self, k0: f64) -> f64 {
        let norm = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
        self.entries
            .iter()
            .map(|e| norm(&e.c) + (norm(&e.q) * norm(&e.s)).sqrt().max(norm(&e.q) * k0))
            .fold(0.0, f64::max)
    }
}

/// `out = a (ar×ak) * b (ak×bc)`, all column-major.
#[inline]
pub(crate) fn mul(a: &[f64], b: &[f64], out: &mut [f64], ar: usize, ak: usize, bc: usize) {
    for j in 0..bc {
        for i in 0..ar {
            let mut acc = 0.0;
            for l in 0..ak {
                acc += a[i + l * ar] * b[l + j * ak];
            }
            out[i + j * ar] = acc;
        }
    }
}

/// `out = a' (ak×ar)' * b (ak×bc)`.
#[inline]
pub(crate) fn mul_tn(a: &[f64], b: &[f64], out: &mut [f64], ak: usize, ar: usize, bc: usize) {
    for j in 0..bc {
        for i in 0..ar {
            let mut acc = 0.0;
            for l in 0..ak {
                acc += a[l + i * ak] * b[l + j * ak];
            }
            out[i + j * ar] = acc;
        }
    }
}

/// Workspace-carrying evaluator of the gain, sensitivity and filter
/// right-hand sides.
pub(crate) struct Kernels {
    r: usize,
    nr: usize,
    p: usize,
    t1: Vec<f64>,
    t2: Vec<f64>,
    az: Vec<f64>,
    b2: Vec<f64>,
    drive: Vec<f64>,
}

impl Kernels {
    pub fn new(field: &CoefficientField) -> Self {
        let (r, nr, p) = (field.r, field.nr, field.p);
        Self {
            r,
            nr,
            p,
            t1: vec![0.0; r * r],
            t2: vec![0.0; r * r],
            az: vec![0.0; r * r],
            b2: vec![0.0; nr * r],
            drive: vec![0.0; r * p],
        }
    }

    /// `K' = S_ε − KC_ε − C_ε'K − KQ_εK`.
    pub fn riccati(&mut self, c: &FlatCoefficients, k: &[f64], out: &mut [f64]) {
        let r = self.r;
        mul(k, &c.c, &mut self.t1, r, r, r);
        mul(k, &c.q, &mut self.t2, r, r, r);
        mul(&self.t2, k, out, r, r, r);
        for j in 0..r {
            for i in 0..r {
                let ij = i + j * r;
                out[ij] = c.s[ij] - self.t1[ij] - self.t1[j + i * r] - out[ij];
            }
        }
    }

    /// `A_z = C_ε + Q_εK` into the workspace.
    fn closed_loop(&mut self, c: &FlatCoefficients, k: &[f64]) {
        let r = self.r;
        mul(&c.q, k, &mut self.az, r, r, r);
        for (a, ci) in self.az.iter_mut().zip(&c.c) {
            *a += ci;
        }
    }

    /// Bottom block of `Φ`: `εMB − MA'K`.
    fn phi_bottom(&mut self, c: &FlatCoefficients, k: &[f64]) {
        let (r, nr) = (self.r, self.nr);
        if nr == 0 {
            return;
        }
        mul(&c.mat, k, &mut self.b2, nr, r, r);
        for (b, e) in self.b2.iter_mut().zip(&c.emb) {
            *b = e - *b;
        }
    }

    /// `G' = Φ'Φ − A_z'G − GA_z`.
    pub fn sensitivity(&mut self, c: &FlatCoefficients, k: &[f64], g: &[f64], out: &mut [f64]) {
        let (r, nr) = (self.r, self.nr);
        self.closed_loop(c, k);
        self.phi_bottom(c, k);
        // Φ'Φ = KK + B2'B2.
        mul(k, k, out, r, r, r);
        if nr > 0 {
            mul_tn(&self.b2, &self.b2, &mut self.t1, nr, r, r);
            for (o, t) in out.iter_mut().zip(&self.t1) {
                *o += t;
            }
        }
        mul(g, &self.az, &mut self.t2, r, r, r);
        for j in 0..r {
            for i in 0..r {
                let ij = i + j * r;
                out[ij] -= self.t2[ij] + self.t2[j + i * r];
            }
        }
    }

    /// `x' = −(C_ε' + KQ_ε)x + Φ'H̃'R y`.
    pub fn filter(&mut self, c: &FlatCoefficients, k: &[f64], x: &[f64], y: &[f64], out: &mut [f64]) {
        let (r, nr, p) = (self.r, self.nr, self.p);
        self.closed_loop(c, k);
        // (C' + KQ) = A_z' since K, Q symmetric.
        for i in 0..r {
            let mut acc = 0.0;
            for l in 0..r {
                acc += self.az[l + i * r] * x[l];
            }
            out[i] = -acc;
        }
        self.phi_bottom(c, k);
        let n = r + nr;
        // drive = K * hr_top + B2' * hr_bottom, r × p.
        for j in 0..p {
            for i in 0..r {
                let mut acc = 0.0;
                for l in 0..r {
                    acc += k[i + l * r] * c.hr[l + j * n];
                }
                for l in 0..nr {
                    acc += self.b2[l + i * nr] * c.hr[r + l + j * n];
                }
                self.drive[i + j * r] = acc;
            }
        }
        for i in 0..r {
            let mut acc = 0.0;
            for j in 0..p {
                acc += self.drive[i + j * r] * y[j];
            }
            out[i] += acc;
        }
    }

    /// `z' = (C_ε + Q_εK) z`.
    pub fn dual(&mut self, c: &FlatCoefficients, k: &[f64], z: &[f64], out: &mut [f64]) {
        let r = self.r;
        self.closed_loop(c, k);
        mul(&self.az, z, out, r, r, 1);
    }
}

pub(crate) fn to_matrix(v: &[f64], rows: usize, cols: usize) -> DMatrix<f64> {
    DMatrix::from_column_slice(rows, cols, v)
}
