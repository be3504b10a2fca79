//! Linear regression with independent Student-t priors on the coefficients
//! and on `log σ` (default `t(3, 0, 1000)`), used for the two-group
//! treatment-effect study. `θ = (β₀, β₁…β_p, log σ)`.

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
use crate::special::{student_t_dlogpdf, student_t_logpdf};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StudentTPriorSpec {
    pub dims: usize,
    pub df: f64,
    pub scale: f64,
}

impl Default for StudentTPriorSpec {
    fn default() -> Self {
        Self {
            dims: 1,
            df: 3.0,
            scale: 1000.0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct MicrocreditT {
    spec: StudentTPriorSpec,
}

impl MicrocreditT {
    pub fn new(spec: StudentTPriorSpec) -> Result<Self> {
        if !(spec.df > 0.0 && spec.scale > 0.0) {
            return Err(Error::invalid(
                "t prior needs positive degrees of freedom and scale",
            ));
        }
        if spec.dims == 0 {
            return Err(Error::invalid("microcredit_t needs at least one covariate"));
        }
        Ok(Self { spec })
    }

    fn k(&self) -> usize {
        self.spec.dims + 1
    }
}

impl Model for MicrocreditT {
    fn name(&self) -> &'static str {
        "microcredit_t"
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
        if data.p() != self.spec.dims {
            return Err(Error::invalid(format!(
                "microcredit_t expects {} covariates, dataset has {}",
                self.spec.dims,
                data.p()
            )));
        }
        Ok(())
    }

    fn loglik_row(&self, data: &Dataset, i: usize, theta: &[f64]) -> f64 {
        gaussian_row_loglik(data, true, i, &theta[..self.k()], theta[self.k()])
    }

    fn loglik_row_grad(
        &self,
        data: &Dataset,
        i: usize,
        theta: &[f64],
        scale: f64,
        grad: &mut [f64],
    ) -> f64 {
        gaussian_row_loglik_grad(data, true, i, theta, self.k(), self.k(), scale, grad)
    }

    fn loglik_rows(&self, data: &Dataset, theta: &[f64], out: &mut [f64]) {
        gaussian_loglik_rows(data, true, &theta[..self.k()], theta[self.k()], out);
    }

    fn logprior(&self, theta: &[f64]) -> f64 {
        theta
            .iter()
            .map(|t| student_t_logpdf(*t, self.spec.df, 0.0, self.spec.scale))
            .sum()
    }

    fn logprior_grad(&self, theta: &[f64], grad: &mut [f64]) -> f64 {
        for (g, t) in grad.iter_mut().zip(theta) {
            *g = student_t_dlogpdf(*t, self.spec.df, 0.0, self.spec.scale);
        }
        self.logprior(theta)
    }

    fn weighted_density<'a>(&'a self, data: &'a Dataset, w: &'a [f64]) -> Box<dyn LogDensity + 'a> {
        Box::new(GaussianLinearDensity {
            model: self,
            stats: GaussianStats::new(data, true, w),
            k: self.k(),
        })
    }

    fn initial_point(&self, data: &Dataset) -> Vec<f64> {
        let (mut beta, log_sigma) = ols_start(data, true);
        beta.push(log_sigma);
        beta
    }

    fn simulate_response(
        &self,
        data: &Dataset,
        i: usize,
        theta: &[f64],
        rng: &mut dyn RngCore,
    ) -> Result<f64> {
        let mean = linear_predictor(data, true, i, &theta[..self.k()]);
        let sd = theta[self.k()].exp();
        Ok(mean + sd * Normal::new(0.0, 1.0).expect("unit normal").sample(rng))
    }
}
