//! Dense linear-algebra helpers on top of nalgebra.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use crate::error::{Error, Result};

pub fn cholesky(m: &DMatrix<f64>, what: &str) -> Result<Cholesky<f64, Dyn>> {
    Cholesky::new(symmetrize(m))
        .ok_or_else(|| Error::invalid(format!("{what} is not positive definite")))
}

pub fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

pub fn spd_inverse(m: &DMatrix<f64>, what: &str) -> Result<DMatrix<f64>> {
    Ok(symmetrize(&cholesky(m, what)?.inverse()))
}

/// `log det` of an SPD matrix from its Cholesky factor.
pub fn chol_logdet(ch: &Cholesky<f64, Dyn>) -> f64 {
    2.0 * ch.l_dirty().diagonal().iter().map(|v| v.ln()).sum::<f64>()
}

pub fn is_symmetric(m: &DMatrix<f64>, tol: f64) -> bool {
    m.is_square()
        && (0..m.nrows())
            .all(|i| (0..i).all(|j| (m[(i, j)] - m[(j, i)]).abs() <= tol * (1.0 + m[(i, j)].abs())))
}

/// Largest eigenvalue of a symmetric PSD matrix: exact for small matrices,
/// padded power iteration otherwise.
pub fn max_eigenvalue_psd(m: &DMatrix<f64>) -> f64 {
    let n = m.nrows();
    if n == 0 {
        return 0.0;
    }
    if n <= 500 {
        return symmetrize(m).symmetric_eigenvalues().max().max(0.0);
    }
    let mut v = DVector::from_fn(n, |i, _| 1.0 + (i as f64 * 0.618_034).fract());
    v /= v.norm();
    let mut lambda = 0.0;
    for _ in 0..500 {
        let mv = m * &v;
        let norm = mv.norm();
        if norm == 0.0 {
            return 0.0;
        }
        let next = v.dot(&mv);
        v = mv / norm;
        if (next - lambda).abs() <= 1e-10 * next.abs().max(1e-300) {
            lambda = next;
            break;
        }
        lambda = next;
    }
    // Rayleigh quotient underestimates; pad slightly so it can serve as a
    // Lipschitz bound.
    lambda.max(0.0) * 1.01
}
