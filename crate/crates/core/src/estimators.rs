//! Monte Carlo estimates of the forward-KL gradient and Hessian in `w`
//!
//! ```text
//! ∇_w KL(π_A ‖ π_w) = E_{π_w}[f_X(θ)] − E_{π_A}[f_X(θ)]
//! ∇²_w KL(π_A ‖ π_w) = Cov_{π_w}(f_X(θ), f_X(θ))
//! ```
//!
//! Inputs are log-likelihood matrices with one row per sample and one column
//! per data row.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::column_means;
use crate::weights::WeightVector;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GradientEstimate {
    pub g_hat: DVector<f64>,
    pub p_samples: usize,
    pub q_samples: usize,
    pub per_coordinate_stderr: DVector<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HessianEstimate {
    pub h_hat: DMatrix<f64>,
}

impl HessianEstimate {
    /// `Ĥ + εI` with `ε = 1e−8 · max(1, tr(Ĥ)/n)`.
    pub fn regularized(&self) -> DMatrix<f64> {
        let n = self.h_hat.nrows();
        let eps = 1e-8 * (self.h_hat.trace() / n.max(1) as f64).max(1.0);
        &self.h_hat + DMatrix::identity(n, n) * eps
    }
}

fn column_variances(m: &DMatrix<f64>, means: &DVector<f64>) -> DVector<f64> {
    let s = m.nrows();
    if s < 2 {
        return DVector::zeros(m.ncols());
    }
    DVector::from_iterator(
        m.ncols(),
        m.column_iter()
            .zip(means.iter())
            .map(|(c, mu)| c.iter().map(|v| (v - mu).powi(2)).sum::<f64>() / (s - 1) as f64),
    )
}

pub fn forward_kl_gradient(
    loglik_w: &DMatrix<f64>,
    loglik_a: &DMatrix<f64>,
) -> Result<GradientEstimate> {
    if loglik_w.ncols() != loglik_a.ncols() {
        return Err(Error::invalid(format!(
            "column counts differ: {} vs {}",
            loglik_w.ncols(),
            loglik_a.ncols()
        )));
    }
    let (p, q) = (loglik_w.nrows(), loglik_a.nrows());
    if p == 0 || q == 0 {
        return Err(Error::invalid(
            "gradient estimate needs at least one sample from each posterior",
        ));
    }
    let mw = column_means(loglik_w);
    let ma = column_means(loglik_a);
    let vw = column_variances(loglik_w, &mw);
    let va = column_variances(loglik_a, &ma);
    let stderr = vw.zip_map(&va, |a, b| (a / p as f64 + b / q as f64).sqrt());
    Ok(GradientEstimate {
        g_hat: mw - ma,
        p_samples: p,
        q_samples: q,
        per_coordinate_stderr: stderr,
    })
}

/// Difference of two precomputed column means, for callers that cache the
/// target term.
pub(crate) fn gradient_from_means(
    loglik_w: &DMatrix<f64>,
    target_mean: &DVector<f64>,
    target_var: &DVector<f64>,
    q: usize,
) -> GradientEstimate {
    let p = loglik_w.nrows();
    let mw = column_means(loglik_w);
    let vw = column_variances(loglik_w, &mw);
    let stderr = vw.zip_map(target_var, |a, b| (a / p as f64 + b / q as f64).sqrt());
    GradientEstimate {
        g_hat: mw - target_mean,
        p_samples: p,
        q_samples: q,
        per_coordinate_stderr: stderr,
    }
}

pub(crate) fn means_and_variances(m: &DMatrix<f64>) -> (DVector<f64>, DVector<f64>) {
    let mu = column_means(m);
    let var = column_variances(m, &mu);
    (mu, var)
}

/// Sample covariance of the rows, divisor `P − 1`.
pub fn hessian_estimate(loglik_w: &DMatrix<f64>) -> Result<HessianEstimate> {
    let centered = centered(loglik_w)?;
    let p = loglik_w.nrows() as f64;
    let h = centered.tr_mul(&centered) / (p - 1.0);
    Ok(HessianEstimate {
        h_hat: (&h + h.transpose()) * 0.5,
    })
}

/// Diagonal of [`hessian_estimate`] without forming the full matrix.
pub fn hessian_diagonal(loglik_w: &DMatrix<f64>) -> Result<DVector<f64>> {
    if loglik_w.nrows() < 2 {
        return Err(Error::invalid(
            "Hessian estimate needs at least two samples",
        ));
    }
    let mu = column_means(loglik_w);
    Ok(column_variances(loglik_w, &mu))
}

fn centered(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if m.nrows() < 2 {
        return Err(Error::invalid(
            "Hessian estimate needs at least two samples",
        ));
    }
    let mu = column_means(m);
    let mut c = m.clone();
    for (mut col, mean) in c.column_iter_mut().zip(mu.iter()) {
        col.add_scalar_mut(-mean);
    }
    Ok(c)
}

/// Reverse-KL gradient `∇_w KL(π_w ‖ π_A)` from `π_w` samples, where
/// `logratio[j] = log π(θⱼ) − log π_A(θⱼ)` (prior over target):
///
/// ```text
/// −mean(f)·mean(r) + mean(r·f) + Cov(f, fᵀw)
/// ```
///
/// `logratio = None` means the target has no density.
pub fn reverse_kl_gradient(
    loglik_w: &DMatrix<f64>,
    logratio: Option<&DVector<f64>>,
    w: &WeightVector,
) -> Result<DVector<f64>> {
    let r = logratio
        .ok_or_else(|| Error::Unsupported("reverse KL needs the target log-density".into()))?;
    let (p, n) = loglik_w.shape();
    if r.len() != p {
        return Err(Error::invalid(format!(
            "logratio has {} entries for {p} samples",
            r.len()
        )));
    }
    w.check_len(n)?;
    if p < 2 {
        return Err(Error::invalid(
            "reverse-KL gradient needs at least two samples",
        ));
    }
    let pf = p as f64;
    let f_mean = column_means(loglik_w);
    let r_mean = r.mean();
    let rf_mean = loglik_w.tr_mul(r) / pf;
    let wv = DVector::from_column_slice(w.as_slice());
    let s = loglik_w * &wv;
    let s_mean = s.mean();
    let cov = centered(loglik_w)?.tr_mul(&s.add_scalar(-s_mean)) / (pf - 1.0);
    Ok(-f_mean * r_mean + rf_mean + cov)
}

/// Predicted objective change `ĝᵀs (+ ½ sᵀĤs)` for a step `s`.
pub fn taylor_decrease(g: &GradientEstimate, h: Option<&HessianEstimate>, step: &[f64]) -> f64 {
    let s = DVector::from_column_slice(step);
    let lin = g.g_hat.dot(&s);
    match h {
        Some(h) => lin + 0.5 * s.dot(&(&h.h_hat * &s)),
        None => lin,
    }
}
