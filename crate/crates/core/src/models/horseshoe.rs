//! Linear regression with a horseshoe prior on the slopes
//!
//! ```text
//! τ, λⱼ, σ ~ C⁺(1),   βⱼ | τ, λⱼ ~ N(0, τ²λⱼ²),   α ~ N(0, σ_α²)
//! yᵢ ~ N(α + βᵀxᵢ, σ²)
//! ```
//!
//! sampled as `θ = (α, β₁…β_d, log τ, log λ₁…log λ_d, log σ)`.

use rand::RngCore;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::gaussian_linear::{
    gaussian_loglik_rows, gaussian_row_loglik, gaussian_row_loglik_grad, linear_predictor,
    ols_start, GaussianLinearDensity, GaussianStats,
};
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::model::{LogDensity, Model};
use crate::special::{half_cauchy_log_scale_dlogpdf, half_cauchy_log_scale_logpdf, normal_logpdf};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HorseshoeSpec {
    pub prior_scale_alpha: f64,
    pub dims: usize,
}

#[derive(Debug, Clone)]
pub struct HorseshoeLinReg {
    spec: HorseshoeSpec,
}

impl HorseshoeLinReg {
    pub fn new(spec: HorseshoeSpec) -> Result<Self> {
        if !(spec.prior_scale_alpha > 0.0 && spec.prior_scale_alpha.is_finite()) {
            return Err(Error::invalid(
                "horseshoe intercept prior scale must be positive",
            ));
        }
        if spec.dims == 0 {
            return Err(Error::invalid(
                "horseshoe model needs at least one covariate",
            ));
        }
        Ok(Self { spec })
    }

    fn d(&self) -> usize {
        self.spec.dims
    }

    fn log_tau_idx(&self) -> usize {
        self.d() + 1
    }

    fn log_lambda_idx(&self, j: usize) -> usize {
        self.d() + 2 + j
    }

    fn sigma_idx(&self) -> usize {
        2 * self.d() + 2
    }
}

impl Model for HorseshoeLinReg {
    fn name(&self) -> &'static str {
        "horseshoe_linreg"
    }

    fn dim(&self) -> usize {
        2 * self.d() + 3
    }

    fn param_names(&self) -> Vec<String> {
        let d = self.d();
        let mut names = vec!["alpha".to_string()];
        names.extend((0..d).map(|j| format!("beta[{j}]")));
        names.push("log_tau".into());
        names.extend((0..d).map(|j| format!("log_lambda[{j}]")));
        names.push("log_sigma".into());
        names
    }

    fn check_data(&self, data: &Dataset) -> Result<()> {
        data.response()?;
        if data.p() != self.d() {
            return Err(Error::invalid(format!(
                "horseshoe model expects {} covariates, dataset has {}",
                self.d(),
                data.p()
            )));
        }
        Ok(())
    }

    fn loglik_row(&self, data: &Dataset, i: usize, theta: &[f64]) -> f64 {
        gaussian_row_loglik(data, true, i, &theta[..=self.d()], theta[self.sigma_idx()])
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
            true,
            i,
            theta,
            self.d() + 1,
            self.sigma_idx(),
            scale,
            grad,
        )
    }

    fn loglik_rows(&self, data: &Dataset, theta: &[f64], out: &mut [f64]) {
        gaussian_loglik_rows(
            data,
            true,
            &theta[..=self.d()],
            theta[self.sigma_idx()],
            out,
        );
    }

    fn logprior(&self, theta: &[f64]) -> f64 {
        let mut g = vec![0.0; theta.len()];
        self.logprior_grad(theta, &mut g)
    }

    fn logprior_grad(&self, theta: &[f64], grad: &mut [f64]) -> f64 {
        grad.fill(0.0);
        let sa = self.spec.prior_scale_alpha;
        let mut lp = normal_logpdf(theta[0], 0.0, sa);
        grad[0] = -theta[0] / (sa * sa);
        let log_tau = theta[self.log_tau_idx()];
        lp += half_cauchy_log_scale_logpdf(log_tau, 1.0);
        grad[self.log_tau_idx()] += half_cauchy_log_scale_dlogpdf(log_tau, 1.0);
        for j in 0..self.d() {
            let li = self.log_lambda_idx(j);
            let log_lambda = theta[li];
            lp += half_cauchy_log_scale_logpdf(log_lambda, 1.0);
            grad[li] += half_cauchy_log_scale_dlogpdf(log_lambda, 1.0);
            let beta = theta[1 + j];
            let log_scale = log_tau + log_lambda;
            let z2 = beta * beta * (-2.0 * log_scale).exp();
            lp += -0.5 * crate::special::LN_2PI - log_scale - 0.5 * z2;
            grad[1 + j] = -beta * (-2.0 * log_scale).exp();
            grad[li] += -1.0 + z2;
            grad[self.log_tau_idx()] += -1.0 + z2;
        }
        let log_sigma = theta[self.sigma_idx()];
        lp += half_cauchy_log_scale_logpdf(log_sigma, 1.0);
        grad[self.sigma_idx()] = half_cauchy_log_scale_dlogpdf(log_sigma, 1.0);
        lp
    }

    fn weighted_density<'a>(&'a self, data: &'a Dataset, w: &'a [f64]) -> Box<dyn LogDensity + 'a> {
        Box::new(GaussianLinearDensity {
            model: self,
            stats: GaussianStats::new(data, true, w),
            k: self.d() + 1,
        })
    }

    fn initial_point(&self, data: &Dataset) -> Vec<f64> {
        let (beta, log_sigma) = ols_start(data, true);
        let d = self.d();
        let mean_abs = beta[1..].iter().map(|b| b.abs()).sum::<f64>() / d as f64;
        let tau = mean_abs.max(1e-2);
        let mut theta = beta.clone();
        theta.push(tau.ln());
        theta.extend(beta[1..].iter().map(|b| (b.abs() / tau).max(1e-2).ln()));
        theta.push(log_sigma);
        theta
    }

    fn simulate_response(
        &self,
        data: &Dataset,
        i: usize,
        theta: &[f64],
        rng: &mut dyn RngCore,
    ) -> Result<f64> {
        let mean = linear_predictor(data, true, i, &theta[..=self.d()]);
        let sd = theta[self.sigma_idx()].exp();
        Ok(mean + sd * Normal::new(0.0, 1.0).expect("unit normal").sample(rng))
    }
}
