//! Conjugate linear regression with a normal-inverse-gamma prior
//!
//! ```text
//! σ² ~ Inv-Gamma(a, b),   β | σ² ~ N(μ, σ² Λ⁻¹),   yᵢ | β, σ² ~ N(xᵢβ, σ²)
//! ```
//!
//! The weighted posterior stays NIG, so the posterior, the KL divergence
//! between two members, and the gradient and Hessian of the attack objective
//! all have closed forms. Parameters are sampled as `θ = (β, log σ)`.

use nalgebra::{DMatrix, DVector};
use rand::RngCore;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::gaussian_linear::{
    gaussian_loglik_rows, gaussian_row_loglik, gaussian_row_loglik_grad, ols_start,
    GaussianLinearDensity, GaussianStats,
};
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::linalg::{chol_logdet, cholesky, spd_inverse, symmetrize};
use crate::model::{LogDensity, Model};
use crate::special::{digamma, ln_gamma, trigamma, LN_2PI};
use crate::weights::WeightVector;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NigParams {
    pub mu: DVector<f64>,
    /// precision of β in units of σ²
    pub lambda: DMatrix<f64>,
    pub a: f64,
    pub b: f64,
}

impl NigParams {
    pub fn new(mu: DVector<f64>, lambda: DMatrix<f64>, a: f64, b: f64) -> Result<Self> {
        let p = Self { mu, lambda, a, b };
        p.validate()?;
        Ok(p)
    }

    /// Prior `N(0, σ² I/precision)` on β with `Inv-Gamma(a, b)` on σ².
    pub fn isotropic(d: usize, precision: f64, a: f64, b: f64) -> Result<Self> {
        Self::new(DVector::zeros(d), DMatrix::identity(d, d) * precision, a, b)
    }

    pub fn validate(&self) -> Result<()> {
        let d = self.mu.len();
        if self.lambda.shape() != (d, d) {
            return Err(Error::invalid(format!(
                "Λ is {:?}, expected {d}×{d}",
                self.lambda.shape()
            )));
        }
        if !(self.a > 0.0 && self.b > 0.0 && self.a.is_finite() && self.b.is_finite()) {
            return Err(Error::invalid(format!(
                "NIG shape and scale must be positive, got a = {}, b = {}",
                self.a, self.b
            )));
        }
        if self
            .mu
            .iter()
            .chain(self.lambda.iter())
            .any(|v| !v.is_finite())
        {
            return Err(Error::invalid("NIG parameters have non-finite entries"));
        }
        cholesky(&self.lambda, "Λ")?;
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.mu.len()
    }

    /// `Λ⁻¹`
    pub fn scale_matrix(&self) -> Result<DMatrix<f64>> {
        spd_inverse(&self.lambda, "Λ")
    }

    /// Marginal posterior sd of each β coordinate, `√(b/(a−1) · Λ⁻¹ⱼⱼ)`;
    /// infinite when `a ≤ 1`.
    pub fn beta_sd(&self) -> Result<DVector<f64>> {
        let s = self.scale_matrix()?;
        let factor = if self.a > 1.0 {
            self.b / (self.a - 1.0)
        } else {
            f64::INFINITY
        };
        Ok(s.diagonal().map(|v| (factor * v).sqrt()))
    }

    /// Normalized log-density on `θ = (β, log σ)`, optionally writing its
    /// gradient.
    pub fn log_density(&self, theta: &[f64], grad: Option<&mut [f64]>) -> Result<f64> {
        let logdet = chol_logdet(&cholesky(&self.lambda, "Λ")?);
        Ok(self.log_density_with(theta, logdet, grad))
    }

    pub(crate) fn log_density_with(
        &self,
        theta: &[f64],
        lambda_logdet: f64,
        grad: Option<&mut [f64]>,
    ) -> f64 {
        let d = self.dim();
        let u = theta[d];
        let delta = DVector::from_fn(d, |i, _| theta[i] - self.mu[i]);
        let ld = &self.lambda * &delta;
        let q = delta.dot(&ld);
        let e = (-2.0 * u).exp();
        if let Some(g) = grad {
            for i in 0..d {
                g[i] = -ld[i] * e;
            }
            g[d] = -2.0 * self.a + 2.0 * self.b * e - d as f64 + q * e;
        }
        self.a * self.b.ln() - ln_gamma(self.a) + std::f64::consts::LN_2
            - 2.0 * self.a * u
            - self.b * e
            - 0.5 * d as f64 * LN_2PI
            - d as f64 * u
            + 0.5 * lambda_logdet
            - 0.5 * q * e
    }
}

fn check_design(prior: &NigParams, data: &Dataset) -> Result<()> {
    if data.p() != prior.dim() {
        return Err(Error::invalid(format!(
            "design has {} columns but the prior has dimension {}",
            data.p(),
            prior.dim()
        )));
    }
    data.response()?;
    Ok(())
}

/// Weighted conjugate update; `data.x()` is the full design matrix.
pub fn nig_weighted_posterior(
    prior: &NigParams,
    data: &Dataset,
    w: &WeightVector,
) -> Result<NigParams> {
    check_design(prior, data)?;
    w.check_len(data.n())?;
    let x = data.x();
    let y = data.response()?;
    let d = prior.dim();
    let mut xtwx = DMatrix::zeros(d, d);
    let mut xtwy = DVector::zeros(d);
    let mut sum_w = 0.0;
    for (i, &wi) in w.as_slice().iter().enumerate() {
        if wi == 0.0 {
            continue;
        }
        sum_w += wi;
        let row = x.row(i);
        for a in 0..d {
            xtwy[a] += wi * row[a] * y[i];
            for b in 0..d {
                xtwx[(a, b)] += wi * row[a] * row[b];
            }
        }
    }
    let lambda_n = symmetrize(&(&prior.lambda + xtwx));
    let chol = lambda_n
        .clone()
        .cholesky()
        .ok_or_else(|| Error::Internal("posterior precision is not positive definite".into()))?;
    let mu_n = chol.solve(&(&prior.lambda * &prior.mu + xtwy));
    // b₀ + ½(μ₀ᵀΛ₀μ₀ + yᵀWy − μₙᵀΛₙμₙ) rearranged into a sum of nonnegative terms
    let resid = y - x * &mu_n;
    let rss: f64 = resid
        .iter()
        .zip(w.as_slice())
        .map(|(r, wi)| wi * r * r)
        .sum();
    let dmu = &mu_n - &prior.mu;
    let b_n = prior.b + 0.5 * (rss + dmu.dot(&(&prior.lambda * &dmu)));
    Ok(NigParams {
        mu: mu_n,
        lambda: lambda_n,
        a: prior.a + 0.5 * sum_w,
        b: b_n,
    })
}

/// `KL(p ‖ q)`: the inverse-gamma KL of the σ² marginals plus the expected
/// KL of the conditional Gaussians for β.
pub fn nig_kl(p: &NigParams, q: &NigParams) -> Result<f64> {
    if p.dim() != q.dim() {
        return Err(Error::invalid("NIG dimensions differ"));
    }
    let d = p.dim() as f64;
    let gamma = (p.a - q.a) * digamma(p.a) - ln_gamma(p.a)
        + ln_gamma(q.a)
        + q.a * (p.b.ln() - q.b.ln())
        + p.a * (q.b - p.b) / p.b;
    let chol_p = cholesky(&p.lambda, "Λ_p")?;
    let chol_q = cholesky(&q.lambda, "Λ_q")?;
    let trace = chol_p.solve(&q.lambda).trace();
    let dmu = &p.mu - &q.mu;
    let quad = dmu.dot(&(&q.lambda * &dmu));
    let gauss = 0.5 * (trace - d + chol_logdet(&chol_p) - chol_logdet(&chol_q) + p.a / p.b * quad);
    Ok((gamma + gauss).max(0.0))
}

/// Closed-form `E[log N(yᵢ | xᵢβ, σ²)]` under an NIG distribution, for every
/// row of the design.
pub fn nig_expected_loglik(params: &NigParams, data: &Dataset) -> Result<DVector<f64>> {
    check_design(params, data)?;
    let (e, k_diag) = residuals_and_leverage(params, data)?;
    let c = -0.5 * LN_2PI - 0.5 * (params.b.ln() - digamma(params.a));
    let ratio = params.a / params.b;
    Ok(DVector::from_fn(data.n(), |i, _| {
        c - 0.5 * (e[i] * e[i] * ratio + k_diag[i])
    }))
}

fn residuals_and_leverage(
    params: &NigParams,
    data: &Dataset,
) -> Result<(DVector<f64>, DVector<f64>)> {
    let x = data.x();
    let e = data.response()? - x * &params.mu;
    let chol = cholesky(&params.lambda, "Λ")?;
    // kᵢᵢ = xᵢ Λ⁻¹ xᵢᵀ = ‖L⁻¹ xᵢᵀ‖²
    let z = chol
        .l()
        .solve_lower_triangular(&x.transpose())
        .ok_or_else(|| Error::Internal("triangular solve failed".into()))?;
    let k = DVector::from_iterator(data.n(), z.column_iter().map(|c| c.norm_squared()));
    Ok((e, k))
}

/// Exact `∇_w KL(π_A ‖ π_w) = E_{π_w}[f_X] − E_{π_A}[f_X]`.
pub fn nig_exact_gradient(
    prior: &NigParams,
    data: &Dataset,
    w: &WeightVector,
    target: &NigParams,
) -> Result<DVector<f64>> {
    let post = nig_weighted_posterior(prior, data, w)?;
    Ok(nig_expected_loglik(&post, data)? - nig_expected_loglik(target, data)?)
}

/// Exact `Cov_{π_w}(f_X, f_X)` for an NIG distribution. Writing
/// `eᵢ = yᵢ − xᵢμ` and `K = XΛ⁻¹Xᵀ`,
///
/// ```text
/// Hᵢⱼ = ¼ψ'(a) − ¼(eᵢ² + eⱼ²)/b + ¼eᵢ²eⱼ² a/b² + (a/b) eᵢeⱼKᵢⱼ + ½Kᵢⱼ²
/// ```
pub fn nig_loglik_covariance(params: &NigParams, data: &Dataset) -> Result<DMatrix<f64>> {
    check_design(params, data)?;
    let x = data.x();
    let e = data.response()? - x * &params.mu;
    let s = params.scale_matrix()?;
    let k = x * s * x.transpose();
    let (a, b) = (params.a, params.b);
    let tg = 0.25 * trigamma(a);
    let n = data.n();
    Ok(DMatrix::from_fn(n, n, |i, j| {
        let (ei2, ej2) = (e[i] * e[i], e[j] * e[j]);
        tg - 0.25 * (ei2 + ej2) / b
            + 0.25 * ei2 * ej2 * a / (b * b)
            + a / b * e[i] * e[j] * k[(i, j)]
            + 0.5 * k[(i, j)] * k[(i, j)]
    }))
}

/// Diagonal of [`nig_loglik_covariance`] in `O(n d²)`.
pub fn nig_loglik_variance(params: &NigParams, data: &Dataset) -> Result<DVector<f64>> {
    check_design(params, data)?;
    let (e, k) = residuals_and_leverage(params, data)?;
    let (a, b) = (params.a, params.b);
    let tg = 0.25 * trigamma(a);
    Ok(DVector::from_fn(data.n(), |i, _| {
        let e2 = e[i] * e[i];
        tg - 0.5 * e2 / b + 0.25 * e2 * e2 * a / (b * b) + a / b * e2 * k[i] + 0.5 * k[i] * k[i]
    }))
}

/// Exact Hessian of the attack objective, `Cov_{π_w}(f_X, f_X)`.
pub fn nig_exact_hessian(
    prior: &NigParams,
    data: &Dataset,
    w: &WeightVector,
) -> Result<DMatrix<f64>> {
    nig_loglik_covariance(&nig_weighted_posterior(prior, data, w)?, data)
}

/// NIG linear regression as a [`Model`], `θ = (β, log σ)`.
#[derive(Debug, Clone)]
pub struct NigLinReg {
    prior: NigParams,
    intercept: bool,
    prior_logdet: f64,
}

impl NigLinReg {
    /// `prior.dim()` counts the intercept when `intercept` is set.
    pub fn new(prior: NigParams, intercept: bool) -> Result<Self> {
        prior.validate()?;
        let prior_logdet = chol_logdet(&cholesky(&prior.lambda, "Λ₀")?);
        Ok(Self {
            prior,
            intercept,
            prior_logdet,
        })
    }

    pub fn prior(&self) -> &NigParams {
        &self.prior
    }

    pub fn intercept(&self) -> bool {
        self.intercept
    }

    /// The dataset whose covariates are this model's design matrix.
    pub fn design_data(&self, data: &Dataset) -> Dataset {
        if self.intercept {
            data.with_intercept()
        } else {
            data.clone()
        }
    }

    pub fn posterior(&self, data: &Dataset, w: &WeightVector) -> Result<NigParams> {
        nig_weighted_posterior(&self.prior, &self.design_data(data), w)
    }

    fn k(&self) -> usize {
        self.prior.dim()
    }
}

impl Model for NigLinReg {
    fn name(&self) -> &'static str {
        "nig_linreg"
    }

    fn dim(&self) -> usize {
        self.k() + 1
    }

    fn param_names(&self) -> Vec<String> {
        let mut names: Vec<String> = (0..self.k()).map(|j| format!("beta[{j}]")).collect();
        names.push("log_sigma".into());
        names
    }

    fn check_data(&self, data: &Dataset) -> Result<()> {
        data.response()?;
        let cols = data.p() + usize::from(self.intercept);
        if cols != self.k() {
            return Err(Error::invalid(format!(
                "nig_linreg expects {} covariates{}, dataset has {}",
                self.k() - usize::from(self.intercept),
                if self.intercept {
                    " plus intercept"
                } else {
                    ""
                },
                data.p()
            )));
        }
        Ok(())
    }

    fn loglik_row(&self, data: &Dataset, i: usize, theta: &[f64]) -> f64 {
        gaussian_row_loglik(data, self.intercept, i, &theta[..self.k()], theta[self.k()])
    }

    fn loglik_row_grad(
        &self,
        data: &Dataset,
        i: usize,
        theta: &[f64],
        scale: f64,
        grad: &mut [f64],
    ) -> f64 {
        gaussian_row_loglik_grad(
            data,
            self.intercept,
            i,
            theta,
            self.k(),
            self.k(),
            scale,
            grad,
        )
    }

    fn loglik_rows(&self, data: &Dataset, theta: &[f64], out: &mut [f64]) {
        gaussian_loglik_rows(
            data,
            self.intercept,
            &theta[..self.k()],
            theta[self.k()],
            out,
        );
    }

    fn logprior(&self, theta: &[f64]) -> f64 {
        self.prior.log_density_with(theta, self.prior_logdet, None)
    }

    fn logprior_grad(&self, theta: &[f64], grad: &mut [f64]) -> f64 {
        self.prior
            .log_density_with(theta, self.prior_logdet, Some(grad))
    }

    fn weighted_density<'a>(&'a self, data: &'a Dataset, w: &'a [f64]) -> Box<dyn LogDensity + 'a> {
        Box::new(GaussianLinearDensity {
            model: self,
            stats: GaussianStats::new(data, self.intercept, w),
            k: self.k(),
        })
    }

    fn initial_point(&self, data: &Dataset) -> Vec<f64> {
        let (mut beta, log_sigma) = ols_start(data, self.intercept);
        beta.push(log_sigma);
        beta
    }

    fn as_nig(&self) -> Option<&NigLinReg> {
        Some(self)
    }

    fn simulate_response(
        &self,
        data: &Dataset,
        i: usize,
        theta: &[f64],
        rng: &mut dyn RngCore,
    ) -> Result<f64> {
        let mean =
            super::gaussian_linear::linear_predictor(data, self.intercept, i, &theta[..self.k()]);
        let sd = theta[self.k()].exp();
        Ok(mean + sd * Normal::new(0.0, 1.0).expect("unit normal").sample(rng))
    }
}

#[cfg(test)]
mod tests {
    use approx::assert_relative_eq;

    use super::*;
    use crate::model::{loglik_matrix, ParamVector};

    fn one_d() -> (NigParams, Dataset) {
        let prior = NigParams::new(
            DVector::from_vec(vec![0.0]),
            DMatrix::from_element(1, 1, 1.0),
            2.0,
            2.0,
        )
        .unwrap();
        let data = Dataset::from_rows(&[vec![1.0]], Some(vec![2.0])).unwrap();
        (prior, data)
    }

    fn small_problem() -> (NigParams, Dataset) {
        let rows: Vec<Vec<f64>> = (0..7)
            .map(|i| vec![1.0, (i as f64 * 0.7).sin() * 2.0])
            .collect();
        let y: Vec<f64> = (0..7)
            .map(|i| 0.5 + 0.3 * rows[i][1] + ((i * 13 % 7) as f64 - 3.0) * 0.2)
            .collect();
        let prior =
            NigParams::new(DVector::zeros(2), DMatrix::identity(2, 2) * 0.01, 2.0, 2.0).unwrap();
        (prior, Dataset::from_rows(&rows, Some(y)).unwrap())
    }

    /// Textbook unweighted conjugate update written with explicit inverses.
    fn conjugate_update_oracle(prior: &NigParams, x: &DMatrix<f64>, y: &DVector<f64>) -> NigParams {
        let lambda = &prior.lambda + x.transpose() * x;
        let inv = lambda.clone().try_inverse().unwrap();
        let mu = &inv * (&prior.lambda * &prior.mu + x.transpose() * y);
        let a = prior.a + x.nrows() as f64 / 2.0;
        let b = prior.b
            + 0.5
                * (y.dot(y) + prior.mu.dot(&(&prior.lambda * &prior.mu))
                    - mu.dot(&(&lambda * &mu)));
        NigParams { mu, lambda, a, b }
    }

    #[test]
    fn one_dimensional_hand_example() {
        let (prior, data) = one_d();
        let post = nig_weighted_posterior(&prior, &data, &WeightVector::ones(1)).unwrap();
        assert_relative_eq!(post.lambda[(0, 0)], 2.0);
        assert_relative_eq!(post.mu[0], 1.0);
        assert_relative_eq!(post.a, 2.5);
        assert_relative_eq!(post.b, 3.0);
    }

    #[test]
    fn zero_weights_return_prior() {
        let (prior, data) = small_problem();
        let post = nig_weighted_posterior(&prior, &data, &WeightVector::zeros(7)).unwrap();
        assert_eq!(post.a, prior.a);
        assert_eq!(post.b, prior.b);
        assert_eq!(post.mu, prior.mu);
        assert_eq!(post.lambda, prior.lambda);
    }

    #[test]
    fn unit_weights_match_textbook_update() {
        let (prior, data) = small_problem();
        let post = nig_weighted_posterior(&prior, &data, &WeightVector::ones(7)).unwrap();
        let oracle = conjugate_update_oracle(&prior, data.x(), data.y().unwrap());
        assert_relative_eq!(post.a, oracle.a, max_relative = 1e-12);
        assert_relative_eq!(post.b, oracle.b, max_relative = 1e-9);
        assert!((post.mu - oracle.mu).amax() < 1e-9);
    }

    #[test]
    fn replication_equals_duplicated_rows() {
        let (prior, data) = small_problem();
        let mut w = vec![1.0; 7];
        w[2] = 2.0;
        w[5] = 0.0;
        let post = nig_weighted_posterior(&prior, &data, &WeightVector::new(w).unwrap()).unwrap();
        let keep = [0usize, 1, 2, 2, 3, 4, 6];
        let x = DMatrix::from_fn(keep.len(), 2, |r, c| data.x()[(keep[r], c)]);
        let y = DVector::from_fn(keep.len(), |r, _| data.y().unwrap()[keep[r]]);
        let oracle = conjugate_update_oracle(&prior, &x, &y);
        assert_relative_eq!(post.b, oracle.b, max_relative = 1e-9);
        assert!((post.mu - oracle.mu).amax() < 1e-9);
    }

    #[test]
    fn kl_is_zero_on_equal_arguments() {
        let (prior, data) = small_problem();
        let post = nig_weighted_posterior(&prior, &data, &WeightVector::ones(7)).unwrap();
        assert!(nig_kl(&post, &post).unwrap().abs() < 1e-12);
        assert!(nig_kl(&prior, &post).unwrap() > 0.0);
    }

    #[test]
    fn exact_gradient_zero_at_own_posterior() {
        let (prior, data) = small_problem();
        let w = WeightVector::new(vec![1.0, 2.0, 0.0, 1.0, 1.5, 1.0, 0.5]).unwrap();
        let post = nig_weighted_posterior(&prior, &data, &w).unwrap();
        let g = nig_exact_gradient(&prior, &data, &w, &post).unwrap();
        assert!(g.amax() < 1e-14);
    }

    #[test]
    fn exact_gradient_matches_kl_finite_differences() {
        let (prior, data) = small_problem();
        let target = {
            let mut t = nig_weighted_posterior(&prior, &data, &WeightVector::ones(7)).unwrap();
            t.mu[1] = 0.0;
            t
        };
        let w0 = vec![1.0, 1.3, 0.4, 1.0, 2.0, 0.8, 1.0];
        let g = nig_exact_gradient(
            &prior,
            &data,
            &WeightVector::new(w0.clone()).unwrap(),
            &target,
        )
        .unwrap();
        let kl = |w: &[f64]| {
            nig_kl(
                &target,
                &nig_weighted_posterior(&prior, &data, &WeightVector::new(w.to_vec()).unwrap())
                    .unwrap(),
            )
            .unwrap()
        };
        for i in 0..7 {
            let h = 1e-5;
            let mut wp = w0.clone();
            let mut wm = w0.clone();
            wp[i] += h;
            wm[i] -= h;
            let fd = (kl(&wp) - kl(&wm)) / (2.0 * h);
            assert_relative_eq!(g[i], fd, max_relative = 1e-5, epsilon = 1e-9);
        }
    }

    #[test]
    fn exact_hessian_matches_gradient_finite_differences() {
        let (prior, data) = small_problem();
        let target = nig_weighted_posterior(&prior, &data, &WeightVector::zeros(7)).unwrap();
        let w0 = vec![1.0, 1.3, 0.4, 1.0, 2.0, 0.8, 1.0];
        let h = nig_exact_hessian(&prior, &data, &WeightVector::new(w0.clone()).unwrap()).unwrap();
        let grad = |w: &[f64]| {
            nig_exact_gradient(
                &prior,
                &data,
                &WeightVector::new(w.to_vec()).unwrap(),
                &target,
            )
            .unwrap()
        };
        for j in 0..7 {
            let step = 1e-5;
            let mut wp = w0.clone();
            let mut wm = w0.clone();
            wp[j] += step;
            wm[j] -= step;
            let col = (grad(&wp) - grad(&wm)) / (2.0 * step);
            for i in 0..7 {
                assert_relative_eq!(h[(i, j)], col[i], max_relative = 1e-5, epsilon = 1e-8);
            }
        }
        let post = nig_weighted_posterior(&prior, &data, &WeightVector::new(w0).unwrap()).unwrap();
        let var = nig_loglik_variance(&post, &data).unwrap();
        for i in 0..7 {
            assert_relative_eq!(var[i], h[(i, i)], max_relative = 1e-12);
        }
    }

    #[test]
    fn log_density_is_normalized_in_one_dimension() {
        // integrate exp(log density) over (β, log σ) on a grid
        let (prior, _) = one_d();
        let (mut total, hb, hu) = (0.0, 0.02, 0.01);
        for bi in -1000..1000 {
            for ui in -300..300 {
                let theta = [bi as f64 * hb, ui as f64 * hu];
                total += prior.log_density(&theta, None).unwrap().exp() * hb * hu;
            }
        }
        assert!((total - 1.0).abs() < 1e-4, "{total}");
    }

    #[test]
    fn model_gradient_matches_finite_differences() {
        let (prior, data) = small_problem();
        let model = NigLinReg::new(prior, false).unwrap();
        let w = vec![1.0, 2.0, 0.0, 1.0, 1.5, 1.0, 0.5];
        let density = model.weighted_density(&data, &w);
        let theta = [0.4, 0.2, -0.3];
        let mut g = vec![0.0; 3];
        density.logp_grad(&theta, &mut g);
        for j in 0..3 {
            let mut tp = theta;
            let mut tm = theta;
            tp[j] += 1e-6;
            tm[j] -= 1e-6;
            let fd = (density.logp(&tp) - density.logp(&tm)) / 2e-6;
            assert_relative_eq!(g[j], fd, max_relative = 1e-5, epsilon = 1e-7);
        }
        // sufficient-statistic density agrees with the row-wise sum
        let direct = crate::model::weighted_logjoint(
            &model,
            &data,
            &WeightVector::new(w.clone()).unwrap(),
            &ParamVector::new(theta.to_vec()).unwrap(),
        )
        .unwrap();
        assert_relative_eq!(density.logp(&theta), direct, max_relative = 1e-10);
    }

    #[test]
    fn loglik_single_row_example() {
        let prior = NigParams::isotropic(1, 1.0, 2.0, 2.0).unwrap();
        let model = NigLinReg::new(prior, false).unwrap();
        let data = Dataset::from_rows(&[vec![1.0], vec![1.0]], Some(vec![2.0, 2.0])).unwrap();
        let m = loglik_matrix(&model, &data, &[ParamVector::new(vec![2.0, 0.0]).unwrap()]).unwrap();
        assert_relative_eq!(m[(0, 0)], -0.5 * LN_2PI, max_relative = 1e-14);
        assert_eq!(m[(0, 0)], m[(0, 1)]);
        assert!(loglik_matrix(&model, &data, &[ParamVector::new(vec![2.0]).unwrap()]).is_err());
    }
}
