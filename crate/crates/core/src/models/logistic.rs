//! Bayesian logistic regression with an isotropic Gaussian prior on the
//! coefficients; the response must be 0/1.

use nalgebra::DMatrix;
use rand::{Rng, RngCore};
use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::model::{LogDensity, Model};
use crate::special::{log1p_exp, normal_logpdf, sigmoid};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogisticSpec {
    pub dims: usize,
    pub intercept: bool,
    pub prior_sd: f64,
}

#[derive(Debug, Clone)]
pub struct LogisticRegression {
    spec: LogisticSpec,
}

impl LogisticRegression {
    pub fn new(spec: LogisticSpec) -> Result<Self> {
        if !(spec.prior_sd > 0.0 && spec.prior_sd.is_finite()) {
            return Err(Error::invalid("logistic prior sd must be positive"));
        }
        Ok(Self { spec })
    }

    fn offset(&self) -> usize {
        usize::from(self.spec.intercept)
    }

    fn eta(&self, data: &Dataset, i: usize, theta: &[f64]) -> f64 {
        super::gaussian_linear::linear_predictor(data, self.spec.intercept, i, theta)
    }
}

impl Model for LogisticRegression {
    fn name(&self) -> &'static str {
        "logistic"
    }

    fn dim(&self) -> usize {
        self.spec.dims + self.offset()
    }

    fn param_names(&self) -> Vec<String> {
        let mut names = Vec::new();
        if self.spec.intercept {
            names.push("intercept".to_string());
        }
        names.extend((0..self.spec.dims).map(|j| format!("beta[{j}]")));
        names
    }

    fn check_data(&self, data: &Dataset) -> Result<()> {
        let y = data.response()?;
        if data.p() != self.spec.dims {
            return Err(Error::invalid(format!(
                "logistic model expects {} covariates, dataset has {}",
                self.spec.dims,
                data.p()
            )));
        }
        if let Some(v) = y.iter().find(|v| **v != 0.0 && **v != 1.0) {
            return Err(Error::invalid(format!(
                "logistic response must be 0 or 1, found {v}"
            )));
        }
        Ok(())
    }

    fn loglik_row(&self, data: &Dataset, i: usize, theta: &[f64]) -> f64 {
        let y = data.y().expect("checked by model")[i];
        let eta = self.eta(data, i, theta);
        y * eta - log1p_exp(eta)
    }

    fn loglik_row_grad(
        &self,
        data: &Dataset,
        i: usize,
        theta: &[f64],
        scale: f64,
        grad: &mut [f64],
    ) -> f64 {
        let y = data.y().expect("checked by model")[i];
        let eta = self.eta(data, i, theta);
        let r = scale * (y - sigmoid(eta));
        let off = self.offset();
        if off == 1 {
            grad[0] += r;
        }
        let x = data.x();
        for j in 0..self.spec.dims {
            grad[j + off] += r * x[(i, j)];
        }
        y * eta - log1p_exp(eta)
    }

    fn logprior(&self, theta: &[f64]) -> f64 {
        theta
            .iter()
            .map(|t| normal_logpdf(*t, 0.0, self.spec.prior_sd))
            .sum()
    }

    fn logprior_grad(&self, theta: &[f64], grad: &mut [f64]) -> f64 {
        let v = self.spec.prior_sd * self.spec.prior_sd;
        for (g, t) in grad.iter_mut().zip(theta) {
            *g = -t / v;
        }
        self.logprior(theta)
    }

    fn weighted_density<'a>(&'a self, data: &'a Dataset, w: &'a [f64]) -> Box<dyn LogDensity + 'a> {
        Box::new(LogisticDensity {
            model: self,
            data,
            w,
        })
    }

    fn initial_point(&self, _data: &Dataset) -> Vec<f64> {
        vec![0.0; self.dim()]
    }

    fn simulate_response(
        &self,
        data: &Dataset,
        i: usize,
        theta: &[f64],
        rng: &mut dyn RngCore,
    ) -> Result<f64> {
        let p = sigmoid(self.eta(data, i, theta));
        Ok(if rng.random::<f64>() < p { 1.0 } else { 0.0 })
    }
}

struct LogisticDensity<'a> {
    model: &'a LogisticRegression,
    data: &'a Dataset,
    w: &'a [f64],
}

impl LogDensity for LogisticDensity<'_> {
    fn dim(&self) -> usize {
        self.model.dim()
    }

    fn logp_grad(&self, theta: &[f64], grad: &mut [f64]) -> f64 {
        let mut lp = self.model.logprior_grad(theta, grad);
        for (i, &wi) in self.w.iter().enumerate() {
            if wi != 0.0 {
                lp += wi * self.model.loglik_row_grad(self.data, i, theta, wi, grad);
            }
        }
        lp
    }

    /// `−Σ wᵢ σ(ηᵢ)(1 − σ(ηᵢ)) x̃ᵢx̃ᵢᵀ − I/s²` with `x̃` the design row.
    fn hessian(&self, theta: &[f64]) -> DMatrix<f64> {
        let k = self.dim();
        let off = self.model.offset();
        let v = self.model.spec.prior_sd * self.model.spec.prior_sd;
        let mut h = DMatrix::identity(k, k) * (-1.0 / v);
        let x = self.data.x();
        let mut row = vec![1.0; k];
        for (i, &wi) in self.w.iter().enumerate() {
            if wi == 0.0 {
                continue;
            }
            for j in 0..self.model.spec.dims {
                row[j + off] = x[(i, j)];
            }
            let p = sigmoid(self.model.eta(self.data, i, theta));
            let c = wi * p * (1.0 - p);
            for a in 0..k {
                for b in 0..k {
                    h[(a, b)] -= c * row[a] * row[b];
                }
            }
        }
        h
    }
}
