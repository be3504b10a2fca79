//! Attack heuristics over the integer weight vector `w`:
//! rounded relaxations (SGD, Adam, second order), FGSM and iterative
//! single-coordinate descent (ISCD).

mod fgsm;
mod iscd;
mod oracle;
mod quadratic;
mod r2;
mod trace;

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::feasible::FeasibleSet;
use crate::model::Model;
use crate::models::nig_kl;
use crate::rng::RngSeed;
use crate::samplers::HmcConfig;
use crate::targets::Target;
use crate::weights::{Budget, WeightVector};

pub use fgsm::{fgsm_weights, run_fgsm};
pub use iscd::{iscd_choose, run_iscd, IscdChoice};
pub use oracle::{
    make_oracle, Estimate, ExactNigOracle, GradientOracle, HessianMode, SamplingOracle,
};
pub use quadratic::{solve_quadratic_subproblem, InnerSolverConfig};
pub use r2::{run_2o_r2, run_adam_r2, run_sgd_r2};
pub use trace::{stopping_check, IterationRecord};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    SgdR2,
    AdamR2,
    SecondOrderR2,
    Fgsm,
    #[serde(rename = "iscd_1o")]
    Iscd1o,
    #[serde(rename = "iscd_2o")]
    Iscd2o,
}

impl Method {
    pub const ALL: [Method; 6] = [
        Method::SgdR2,
        Method::AdamR2,
        Method::SecondOrderR2,
        Method::Fgsm,
        Method::Iscd1o,
        Method::Iscd2o,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Method::SgdR2 => "sgd_r2",
            Method::AdamR2 => "adam_r2",
            Method::SecondOrderR2 => "second_order_r2",
            Method::Fgsm => "fgsm",
            Method::Iscd1o => "iscd_1o",
            Method::Iscd2o => "iscd_2o",
        }
    }

    pub fn is_iscd(self) -> bool {
        matches!(self, Method::Iscd1o | Method::Iscd2o)
    }

    pub fn is_relaxation(self) -> bool {
        matches!(self, Method::SgdR2 | Method::AdamR2 | Method::SecondOrderR2)
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| Error::invalid(format!("unknown attack method '{s}'")))
    }
}

/// `γ_t` for iteration `t = 0, 1, …`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LearningRate {
    Constant {
        gamma: f64,
    },
    /// `γ_t = 1 / (c (t + t0))`
    InverseT {
        c: f64,
        #[serde(default = "one")]
        t0: f64,
    },
}

fn one() -> f64 {
    1.0
}

impl LearningRate {
    pub fn at(&self, t: usize) -> f64 {
        match *self {
            LearningRate::Constant { gamma } => gamma,
            LearningRate::InverseT { c, t0 } => 1.0 / (c * (t as f64 + t0)),
        }
    }

    fn validate(&self) -> Result<()> {
        let ok = match *self {
            LearningRate::Constant { gamma } => gamma > 0.0 && gamma.is_finite(),
            LearningRate::InverseT { c, t0 } => c > 0.0 && c.is_finite() && t0 > 0.0,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::Config(format!("invalid learning rate {self:?}")))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AdamParams {
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    /// Adam step applied to the normalized pseudo-gradient
    pub step_size: f64,
}

impl Default for AdamParams {
    fn default() -> Self {
        Self {
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            step_size: 0.2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AttackConfig {
    pub method: Method,
    pub budget: Budget,
    pub p_samples: usize,
    pub q_samples: usize,
    pub learning_rate: LearningRate,
    pub adam: AdamParams,
    pub stop_ratio: f64,
    pub stop_patience: usize,
    /// iteration limit for the relaxation methods
    pub max_iters: usize,
    /// overrides the ISCD cap `B + max(5, ⌈0.1B⌉)`
    pub iscd_max_iters: Option<usize>,
    pub inner: InnerSolverConfig,
    pub seed: RngSeed,
}

impl Default for AttackConfig {
    fn default() -> Self {
        Self {
            method: Method::Iscd2o,
            budget: Budget { b_max: 0, l_max: 1 },
            p_samples: 1000,
            q_samples: 1000,
            learning_rate: LearningRate::Constant { gamma: 0.1 },
            adam: AdamParams::default(),
            stop_ratio: 0.01,
            stop_patience: 3,
            max_iters: 200,
            iscd_max_iters: None,
            inner: InnerSolverConfig::default(),
            seed: RngSeed::default(),
        }
    }
}

impl AttackConfig {
    pub fn new(method: Method, budget: Budget) -> Self {
        Self {
            method,
            budget,
            ..Self::default()
        }
    }

    pub fn iscd_iteration_cap(&self) -> usize {
        self.iscd_max_iters.unwrap_or_else(|| {
            let b = self.budget.b_max as usize;
            b + 5.max(b.div_ceil(10))
        })
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.p_samples == 0 || self.q_samples == 0 {
            return bad("p_samples and q_samples must be positive".into());
        }
        if !(self.stop_ratio > 0.0 && self.stop_ratio < 1.0) {
            return bad(format!(
                "stop_ratio must lie in (0, 1), got {}",
                self.stop_ratio
            ));
        }
        if self.max_iters == 0 {
            return bad("max_iters must be at least 1".into());
        }
        if self.stop_patience == 0 {
            return bad("stop_patience must be at least 1".into());
        }
        if self.budget.l_max == 0 {
            return bad("L must be at least 1".into());
        }
        let a = &self.adam;
        if !(0.0..1.0).contains(&a.beta1)
            || !(0.0..1.0).contains(&a.beta2)
            || a.eps <= 0.0
            || a.step_size <= 0.0
        {
            return bad(format!("invalid Adam parameters {a:?}"));
        }
        self.learning_rate.validate()?;
        self.inner.validate()
    }
}

/// How draws from `π_w` are obtained.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Backend {
    /// Closed-form NIG gradient and Hessian, no sampling.
    ExactGradient,
    /// Exact iid draws from the conjugate NIG posterior.
    NigSampler,
    /// HMC, warm-started across iterations.
    Hmc { hmc: HmcConfig },
    /// Draws from a Laplace approximation of `π_w`.
    Laplace,
}

/// Everything an attack needs besides its configuration.
#[derive(Debug, Clone)]
pub struct AttackProblem {
    pub model: Arc<dyn Model>,
    pub data: Dataset,
    pub target: Target,
    pub backend: Backend,
}

impl AttackProblem {
    pub fn new(
        model: Arc<dyn Model>,
        data: Dataset,
        target: Target,
        backend: Backend,
    ) -> Result<Self> {
        model.check_data(&data)?;
        if matches!(backend, Backend::ExactGradient | Backend::NigSampler)
            && model.as_nig().is_none()
        {
            return Err(Error::Config(format!(
                "backend {backend:?} needs the nig_linreg model"
            )));
        }
        if matches!(backend, Backend::ExactGradient) && target.nig().is_none() {
            return Err(Error::Config(
                "the exact-gradient backend needs an NIG target".into(),
            ));
        }
        Ok(Self {
            model,
            data,
            target,
            backend,
        })
    }

    pub fn n(&self) -> usize {
        self.data.n()
    }

    /// `KL(π_A ‖ π_w)` in closed form for NIG model and target.
    pub fn exact_objective(&self, w: &WeightVector) -> Option<Result<f64>> {
        let nig = self.model.as_nig()?;
        let target = self.target.nig()?;
        Some(
            nig.posterior(&self.data, w)
                .and_then(|post| nig_kl(target, &post)),
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttackResult {
    pub method: Method,
    pub w_star: WeightVector,
    pub relaxed_w: Option<WeightVector>,
    pub trace: Vec<IterationRecord>,
    pub seeds: Vec<RngSeed>,
    pub stop_reason: StopReason,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    ZeroBudget,
    SingleStep,
    Converged,
    NoImprovingMove,
    IterationCap,
}

/// Runs `cfg.method` with the oracle implied by the problem's backend.
pub fn run_attack(problem: &AttackProblem, cfg: &AttackConfig) -> Result<AttackResult> {
    cfg.validate()?;
    let mut oracle = make_oracle(problem, cfg)?;
    run_with_oracle(oracle.as_mut(), cfg)
}

/// Runs `cfg.method` against an arbitrary gradient oracle.
pub fn run_with_oracle(
    oracle: &mut dyn GradientOracle,
    cfg: &AttackConfig,
) -> Result<AttackResult> {
    cfg.validate()?;
    match cfg.method {
        Method::SgdR2 => run_sgd_r2(oracle, cfg),
        Method::AdamR2 => run_adam_r2(oracle, cfg),
        Method::SecondOrderR2 => run_2o_r2(oracle, cfg),
        Method::Fgsm => run_fgsm(oracle, cfg),
        Method::Iscd1o => run_iscd(oracle, cfg, 1),
        Method::Iscd2o => run_iscd(oracle, cfg, 2),
    }
}

pub(crate) fn feasible_set(oracle: &dyn GradientOracle, cfg: &AttackConfig) -> FeasibleSet {
    FeasibleSet::new(oracle.n(), cfg.budget)
}

pub(crate) fn zero_budget_result(
    n: usize,
    cfg: &AttackConfig,
    seeds: Vec<RngSeed>,
) -> AttackResult {
    AttackResult {
        method: cfg.method,
        w_star: WeightVector::ones(n),
        relaxed_w: cfg.method.is_relaxation().then(|| WeightVector::ones(n)),
        trace: Vec::new(),
        seeds,
        stop_reason: StopReason::ZeroBudget,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn method_names_round_trip() {
        for m in Method::ALL {
            assert_eq!(m.as_str().parse::<Method>().unwrap(), m);
            let json = serde_json::to_string(&m).unwrap();
            assert_eq!(json, format!("\"{}\"", m.as_str()));
        }
        assert!("nope".parse::<Method>().is_err());
    }

    #[test]
    fn iscd_cap_is_slightly_above_budget() {
        let mut c = AttackConfig::new(Method::Iscd2o, Budget::new(0, 2).unwrap());
        assert_eq!(c.iscd_iteration_cap(), 5);
        c.budget.b_max = 100;
        assert_eq!(c.iscd_iteration_cap(), 110);
        c.budget.b_max = 51;
        assert_eq!(c.iscd_iteration_cap(), 57);
    }

    #[test]
    fn config_validation() {
        let mut c = AttackConfig::new(Method::SgdR2, Budget::new(3, 2).unwrap());
        assert!(c.validate().is_ok());
        c.stop_ratio = 1.0;
        assert!(c.validate().is_err());
        c.stop_ratio = 0.01;
        c.p_samples = 0;
        assert!(c.validate().is_err());
    }

    #[test]
    fn inverse_t_schedule() {
        let lr = LearningRate::InverseT { c: 2.0, t0: 1.0 };
        assert_eq!(lr.at(0), 0.5);
        assert_eq!(lr.at(3), 0.125);
    }
}
