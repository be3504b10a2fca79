//! Shared machinery for models with a Gaussian likelihood
//! `yᵢ ~ N(xᵢβ, σ²)` parameterized by `(β, …, log σ)` with `log σ` last.
//! The weighted log-likelihood depends on `w` only through weighted
//! sufficient statistics, so a bound density costs `O(k²)` per evaluation.

use nalgebra::{DMatrix, DVector};

use crate::data::Dataset;
use crate::model::{LogDensity, Model};
use crate::special::LN_2PI;

/// `xᵢ β` where the design optionally carries an implicit leading one.
#[inline]
pub(crate) fn linear_predictor(data: &Dataset, intercept: bool, i: usize, beta: &[f64]) -> f64 {
    let x = data.x();
    let (offset, mut acc) = if intercept { (1, beta[0]) } else { (0, 0.0) };
    for j in 0..x.ncols() {
        acc += x[(i, j)] * beta[j + offset];
    }
    acc
}

#[inline]
pub(crate) fn gaussian_row_loglik(
    data: &Dataset,
    intercept: bool,
    i: usize,
    beta: &[f64],
    log_sigma: f64,
) -> f64 {
    let y = data.y().expect("checked by model")[i];
    let r = y - linear_predictor(data, intercept, i, beta);
    -0.5 * LN_2PI - log_sigma - 0.5 * r * r * (-2.0 * log_sigma).exp()
}

/// Adds `scale · ∇` of the Gaussian row log-likelihood to `grad[..k]` and
/// `grad[sigma_idx]`.
#[allow(clippy::too_many_arguments)]
pub(crate) fn gaussian_row_loglik_grad(
    data: &Dataset,
    intercept: bool,
    i: usize,
    theta: &[f64],
    k: usize,
    sigma_idx: usize,
    scale: f64,
    grad: &mut [f64],
) -> f64 {
    let beta = &theta[..k];
    let log_sigma = theta[sigma_idx];
    let y = data.y().expect("checked by model")[i];
    let r = y - linear_predictor(data, intercept, i, beta);
    let inv_s2 = (-2.0 * log_sigma).exp();
    let x = data.x();
    let c = scale * r * inv_s2;
    let offset = usize::from(intercept);
    if intercept {
        grad[0] += c;
    }
    for j in 0..x.ncols() {
        grad[j + offset] += c * x[(i, j)];
    }
    grad[sigma_idx] += scale * (-1.0 + r * r * inv_s2);
    -0.5 * LN_2PI - log_sigma - 0.5 * r * r * inv_s2
}

pub(crate) fn gaussian_loglik_rows(
    data: &Dataset,
    intercept: bool,
    beta: &[f64],
    log_sigma: f64,
    out: &mut [f64],
) {
    let y = data.y().expect("checked by model");
    let x = data.x();
    let inv_s2 = (-2.0 * log_sigma).exp();
    let c = -0.5 * LN_2PI - log_sigma;
    let (offset, b0) = if intercept { (1, beta[0]) } else { (0, 0.0) };
    // column-major traversal: accumulate predictions column by column
    let mut pred = vec![b0; out.len()];
    for j in 0..x.ncols() {
        let bj = beta[j + offset];
        for (p, xv) in pred.iter_mut().zip(x.column(j).iter()) {
            *p += bj * xv;
        }
    }
    for ((o, p), yv) in out.iter_mut().zip(&pred).zip(y.iter()) {
        let r = yv - p;
        *o = c - 0.5 * r * r * inv_s2;
    }
}

/// Weighted sufficient statistics around a weighted least-squares reference
/// point: `Σw`, `XᵀWX`, `XᵀWr` and `rᵀWr` with `r = y − Xβ_ref`.
#[derive(Debug, Clone)]
pub(crate) struct GaussianStats {
    sum_w: f64,
    xtwx: DMatrix<f64>,
    xtwr: DVector<f64>,
    rtwr: f64,
    beta_ref: DVector<f64>,
}

impl GaussianStats {
    pub(crate) fn new(data: &Dataset, intercept: bool, w: &[f64]) -> Self {
        let design = data.design(intercept);
        let y = data.y().expect("checked by model");
        let (n, k) = design.shape();
        let mut xtwx = DMatrix::<f64>::zeros(k, k);
        let mut xtwy = DVector::<f64>::zeros(k);
        let mut sum_w = 0.0;
        for i in 0..n {
            let wi = w[i];
            if wi == 0.0 {
                continue;
            }
            sum_w += wi;
            let row = design.row(i);
            for a in 0..k {
                let xa = wi * row[a];
                xtwy[a] += xa * y[i];
                for b in 0..=a {
                    xtwx[(a, b)] += xa * row[b];
                }
            }
        }
        for a in 0..k {
            for b in 0..a {
                xtwx[(b, a)] = xtwx[(a, b)];
            }
        }
        let ridge = 1e-9 * (1.0 + xtwx.diagonal().max());
        let reg = &xtwx + DMatrix::identity(k, k) * ridge;
        let beta_ref = reg
            .cholesky()
            .map_or_else(|| DVector::zeros(k), |c| c.solve(&xtwy));
        let mut xtwr = DVector::zeros(k);
        let mut rtwr = 0.0;
        for i in 0..n {
            let wi = w[i];
            if wi == 0.0 {
                continue;
            }
            let row = design.row(i);
            let r = y[i] - row.transpose().dot(&beta_ref);
            rtwr += wi * r * r;
            for a in 0..k {
                xtwr[a] += wi * row[a] * r;
            }
        }
        Self {
            sum_w,
            xtwx,
            xtwr,
            rtwr,
            beta_ref,
        }
    }

    /// Weighted Gaussian log-likelihood; adds its gradient to
    /// `grad_beta` and `grad_log_sigma`.
    pub(crate) fn loglik_grad(
        &self,
        beta: &[f64],
        log_sigma: f64,
        grad_beta: &mut [f64],
        grad_log_sigma: &mut f64,
    ) -> f64 {
        let k = self.beta_ref.len();
        let delta = DVector::from_fn(k, |i, _| beta[i] - self.beta_ref[i]);
        let xd = &self.xtwx * &delta;
        let q = (self.rtwr - 2.0 * delta.dot(&self.xtwr) + delta.dot(&xd)).max(0.0);
        let inv_s2 = (-2.0 * log_sigma).exp();
        for a in 0..k {
            grad_beta[a] += (self.xtwr[a] - xd[a]) * inv_s2;
        }
        *grad_log_sigma += -self.sum_w + q * inv_s2;
        -0.5 * self.sum_w * LN_2PI - self.sum_w * log_sigma - 0.5 * q * inv_s2
    }
}

/// Weighted log-joint of a Gaussian-likelihood model evaluated through
/// [`GaussianStats`].
pub(crate) struct GaussianLinearDensity<'a, M: Model + ?Sized> {
    pub(crate) model: &'a M,
    pub(crate) stats: GaussianStats,
    /// number of linear coefficients at the front of θ
    pub(crate) k: usize,
}

impl<M: Model + ?Sized> LogDensity for GaussianLinearDensity<'_, M> {
    fn dim(&self) -> usize {
        self.model.dim()
    }

    fn logp_grad(&self, theta: &[f64], grad: &mut [f64]) -> f64 {
        let lp = self.model.logprior_grad(theta, grad);
        let last = theta.len() - 1;
        let (head, tail) = grad.split_at_mut(last);
        let ll = self.stats.loglik_grad(
            &theta[..self.k],
            theta[last],
            &mut head[..self.k],
            &mut tail[0],
        );
        lp + ll
    }
}

/// Ridge-regularized OLS fit and residual scale, for sampler starting points.
pub(crate) fn ols_start(data: &Dataset, intercept: bool) -> (Vec<f64>, f64) {
    let w = vec![1.0; data.n()];
    let stats = GaussianStats::new(data, intercept, &w);
    let dof = (data.n() as f64 - stats.beta_ref.len() as f64).max(1.0);
    let sigma = (stats.rtwr / dof).sqrt().max(1e-3);
    (stats.beta_ref.iter().copied().collect(), sigma.ln())
}
