//! Small dense linear-algebra helpers on top of `nalgebra`.
//!
//! Complex vectors are lifted to real ones by interleaving real and imaginary
//! parts: `x = (x0, x1, ..)` maps to `(Re x0, Im x0, Re x1, Im x1, ..)`, and a
//! complex matrix entry `a + jb` becomes the 2×2 block `[[a, -b], [b, a]]`.
//! This keeps complex column `c` at real columns `2c` and `2c + 1`.

use nalgebra::{DMatrix, DVector};

use crate::C64;

pub type CMat = DMatrix<C64>;
pub type CVec = DVector<C64>;
pub type RMat = DMatrix<f64>;
pub type RVec = DVector<f64>;

/// `diag(d) * m`.
pub fn diag_mul(d: &[C64], m: &CMat) -> CMat {
    assert_eq!(d.len(), m.nrows());
    let mut out = m.clone();
    for (r, &s) in d.iter().enumerate() {
        for c in 0..m.ncols() {
            out[(r, c)] *= s;
        }
    }
    out
}

/// `diag(d) * v`.
pub fn diag_mul_vec(d: &[C64], v: &CVec) -> CVec {
    assert_eq!(d.len(), v.len());
    CVec::from_iterator(v.len(), d.iter().zip(v.iter()).map(|(a, b)| a * b))
}

/// Singular values in descending order.
pub fn singular_values(m: &CMat) -> Vec<f64> {
    let mut sv: Vec<f64> = m.clone().singular_values().iter().copied().collect();
    sv.sort_by(|a, b| b.total_cmp(a));
    sv
}

/// Number of singular values above `rel_tol * sigma_max`.
pub fn numerical_rank(m: &CMat, rel_tol: f64) -> usize {
    let sv = singular_values(m);
    match sv.first() {
        None => 0,
        Some(&max) if max == 0.0 => 0,
        Some(&max) => sv.iter().filter(|&&s| s > rel_tol * max).count(),
    }
}

/// 2-norm condition number `sigma_max / sigma_min` (infinite when singular).
pub fn condition_number(m: &CMat) -> f64 {
    let sv = singular_values(m);
    let (Some(&max), Some(&min)) = (sv.first(), sv.last()) else {
        return f64::INFINITY;
    };
    if min == 0.0 {
        f64::INFINITY
    } else {
        (max / min).max(1.0)
    }
}

/// Thin orthonormal basis of the column span of `m` by Householder QR.
///
/// Returns `None` if some `|R_kk|` falls below `rel_tol * max |R_jj|`.
pub fn orthonormal_columns(m: &CMat, rel_tol: f64) -> Option<CMat> {
    let qr = m.clone().qr();
    let r = qr.r();
    let diag: Vec<f64> = (0..r.nrows().min(r.ncols())).map(|k| r[(k, k)].norm()).collect();
    let max = diag.iter().copied().fold(0.0, f64::max);
    if max == 0.0 || diag.iter().any(|&d| d < rel_tol * max) {
        return None;
    }
    Some(qr.q())
}

/// Least-squares solution of `a x ≈ b` for tall, full column rank `a`.
///
/// Returns `None` when the triangular factor is rank deficient at `rel_tol`.
pub fn least_squares(a: &CMat, b: &CVec, rel_tol: f64) -> Option<CVec> {
    LeastSquares::new(a, rel_tol).map(|ls| ls.solve(b))
}

/// Pre-factored least-squares solver (`a = QR`, reused across right-hand sides).
#[derive(Debug, Clone)]
pub struct LeastSquares {
    q: CMat,
    r: CMat,
}

impl LeastSquares {
    pub fn new(a: &CMat, rel_tol: f64) -> Option<Self> {
        assert!(a.nrows() >= a.ncols());
        let qr = a.clone().qr();
        let r = qr.r();
        let diag: Vec<f64> = (0..r.ncols()).map(|k| r[(k, k)].norm()).collect();
        let max = diag.iter().copied().fold(0.0, f64::max);
        if max == 0.0 || diag.iter().any(|&d| d < rel_tol * max) {
            return None;
        }
        Some(Self { q: qr.q(), r })
    }

    pub fn solve(&self, b: &CVec) -> CVec {
        let rhs = self.q.adjoint() * b;
        let k = self.r.ncols();
        let mut x = CVec::zeros(k);
        for i in (0..k).rev() {
            let mut acc = rhs[i];
            for j in i + 1..k {
                acc -= self.r[(i, j)] * x[j];
            }
            x[i] = acc / self.r[(i, i)];
        }
        x
    }
}

/// `‖a - b‖_F / max(‖b‖_F, tiny)`.
pub fn relative_residual(a: &CMat, b: &CMat) -> f64 {
    let denom = a.norm().max(b.norm()).max(f64::MIN_POSITIVE);
    (a - b).norm() / denom
}

/// Real 2m×2k lift of a complex m×k matrix (interleaved convention).
pub fn embed_matrix(g: &CMat) -> RMat {
    let mut out = RMat::zeros(2 * g.nrows(), 2 * g.ncols());
    for r in 0..g.nrows() {
        for c in 0..g.ncols() {
            let z = g[(r, c)];
            out[(2 * r, 2 * c)] = z.re;
            out[(2 * r, 2 * c + 1)] = -z.im;
            out[(2 * r + 1, 2 * c)] = z.im;
            out[(2 * r + 1, 2 * c + 1)] = z.re;
        }
    }
    out
}

pub fn embed_vector(v: &CVec) -> RVec {
    RVec::from_iterator(2 * v.len(), v.iter().flat_map(|z| [z.re, z.im]))
}

/// Inverse of [`embed_vector`].
pub fn reconstruct_vector(v: &[f64]) -> CVec {
    assert!(v.len() % 2 == 0);
    CVec::from_iterator(v.len() / 2, v.chunks_exact(2).map(|p| C64::new(p[0], p[1])))
}
