//! Concrete Bayesian models and synthetic data generators.

pub(crate) mod gaussian_linear;
pub mod horseshoe;
pub mod logistic;
pub mod microcredit;
pub mod nig;
pub mod synthetic;

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

pub use horseshoe::{HorseshoeLinReg, HorseshoeSpec};
pub use logistic::{LogisticRegression, LogisticSpec};
pub use microcredit::{MicrocreditT, StudentTPriorSpec};
pub use nig::{
    nig_exact_gradient, nig_exact_hessian, nig_expected_loglik, nig_kl, nig_loglik_covariance,
    nig_loglik_variance, nig_weighted_posterior, NigLinReg, NigParams,
};
pub use synthetic::{
    gen_synthetic_logistic, gen_synthetic_regression, gen_two_group, SyntheticLogisticSpec,
    SyntheticRegressionSpec, TwoGroupSpec,
};

use crate::error::{Error, Result};
use crate::model::Model;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum ModelKind {
    NigLinreg,
    HorseshoeLinreg,
    Logistic,
    MicrocreditT,
}

impl ModelKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ModelKind::NigLinreg => "nig_linreg",
            ModelKind::HorseshoeLinreg => "horseshoe_linreg",
            ModelKind::Logistic => "logistic",
            ModelKind::MicrocreditT => "microcredit_t",
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "nig_linreg" => Ok(ModelKind::NigLinreg),
            "horseshoe_linreg" => Ok(ModelKind::HorseshoeLinreg),
            "logistic" => Ok(ModelKind::Logistic),
            "microcredit_t" => Ok(ModelKind::MicrocreditT),
            other => Err(Error::invalid(format!("unknown model kind `{other}`"))),
        }
    }
}

impl TryFrom<String> for ModelKind {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<ModelKind> for String {
    fn from(k: ModelKind) -> Self {
        k.as_str().to_string()
    }
}

/// Model configuration; fields that do not apply to `kind` are ignored.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelSpec {
    pub kind: ModelKind,
    /// NIG and logistic: include an intercept column
    pub intercept: bool,
    /// NIG prior mean (zeros when absent)
    pub mu0: Option<Vec<f64>>,
    /// NIG prior precision `Λ₀ = precision0 · I`
    pub precision0: f64,
    pub a0: f64,
    pub b0: f64,
    /// horseshoe intercept prior sd
    pub prior_scale_alpha: f64,
    /// logistic coefficient prior sd
    pub prior_sd: f64,
    /// microcredit t prior degrees of freedom and scale
    pub t_df: f64,
    pub t_scale: f64,
}

impl Default for ModelSpec {
    fn default() -> Self {
        Self {
            kind: ModelKind::NigLinreg,
            intercept: true,
            mu0: None,
            precision0: 0.01,
            a0: 2.0,
            b0: 2.0,
            prior_scale_alpha: 10.0,
            prior_sd: 10.0,
            t_df: 3.0,
            t_scale: 1000.0,
        }
    }
}

impl ModelSpec {
    pub fn of_kind(kind: ModelKind) -> Self {
        Self {
            kind,
            ..Self::default()
        }
    }

    /// The NIG prior for `n_features` covariates (plus intercept if set).
    pub fn nig_prior(&self, n_features: usize) -> Result<NigParams> {
        let d = n_features + usize::from(self.intercept);
        let mu = match &self.mu0 {
            Some(m) if m.len() != d => {
                return Err(Error::invalid(format!(
                    "mu0 has {} entries, model dimension is {d}",
                    m.len()
                )));
            }
            Some(m) => DVector::from_column_slice(m),
            None => DVector::zeros(d),
        };
        NigParams::new(
            mu,
            DMatrix::identity(d, d) * self.precision0,
            self.a0,
            self.b0,
        )
    }
}

/// Builds the model described by `spec` for data with `n_features` columns.
pub fn make_model(spec: &ModelSpec, n_features: usize) -> Result<Arc<dyn Model>> {
    Ok(match spec.kind {
        ModelKind::NigLinreg => {
            Arc::new(NigLinReg::new(spec.nig_prior(n_features)?, spec.intercept)?)
        }
        ModelKind::HorseshoeLinreg => Arc::new(HorseshoeLinReg::new(HorseshoeSpec {
            prior_scale_alpha: spec.prior_scale_alpha,
            dims: n_features,
        })?),
        ModelKind::Logistic => Arc::new(LogisticRegression::new(LogisticSpec {
            dims: n_features,
            intercept: spec.intercept,
            prior_sd: spec.prior_sd,
        })?),
        ModelKind::MicrocreditT => Arc::new(MicrocreditT::new(StudentTPriorSpec {
            dims: n_features,
            df: spec.t_df,
            scale: spec.t_scale,
        })?),
    })
}
