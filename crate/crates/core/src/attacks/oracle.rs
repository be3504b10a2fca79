//! Gradient (and optionally Hessian) estimates of `KL(π_A ‖ π_w)` in `w`.

use nalgebra::DVector;

use super::{AttackConfig, AttackProblem, Backend};
use crate::data::Dataset;
use crate::error::{Result, SamplerDiagnostics};
use crate::estimators::{
    gradient_from_means, hessian_diagonal, hessian_estimate, means_and_variances, GradientEstimate,
    HessianEstimate,
};
use crate::model::{loglik_matrix_rows, ParamVector};
use crate::models::{
    nig_expected_loglik, nig_kl, nig_loglik_covariance, nig_loglik_variance,
    nig_weighted_posterior, NigParams,
};
use crate::rng::RngSeed;
use crate::samplers::{laplace_approx, sample_nig_exact, sample_posterior, SampleBatch, WarmStart};
use crate::weights::WeightVector;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HessianMode {
    None,
    Diagonal,
    Full,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Estimate {
    pub gradient: GradientEstimate,
    pub hessian: Option<HessianEstimate>,
    /// filled for both `Diagonal` and `Full`
    pub hessian_diag: Option<DVector<f64>>,
    pub diagnostics: Option<SamplerDiagnostics>,
}

impl Estimate {
    pub fn from_gradient(g_hat: DVector<f64>) -> Self {
        let n = g_hat.len();
        Self {
            gradient: GradientEstimate {
                g_hat,
                p_samples: 0,
                q_samples: 0,
                per_coordinate_stderr: DVector::zeros(n),
            },
            hessian: None,
            hessian_diag: None,
            diagnostics: None,
        }
    }

    pub fn g(&self) -> &DVector<f64> {
        &self.gradient.g_hat
    }
}

pub trait GradientOracle {
    fn n(&self) -> usize;

    /// Estimate at `w`; `iteration` selects fresh random streams.
    fn estimate(
        &mut self,
        w: &WeightVector,
        iteration: usize,
        mode: HessianMode,
    ) -> Result<Estimate>;

    /// The exact objective, when available in closed form.
    fn objective(&self, _w: &WeightVector) -> Option<f64> {
        None
    }

    /// Seeds needed to replay the estimates.
    fn seeds(&self) -> Vec<RngSeed> {
        Vec::new()
    }
}

/// Closed-form NIG gradient and Hessian.
#[derive(Debug, Clone)]
pub struct ExactNigOracle {
    prior: NigParams,
    design: Dataset,
    target: NigParams,
    target_mean: DVector<f64>,
}

impl ExactNigOracle {
    /// `design.x()` is the full design matrix, intercept included.
    pub fn new(prior: NigParams, design: Dataset, target: NigParams) -> Result<Self> {
        let target_mean = nig_expected_loglik(&target, &design)?;
        Ok(Self {
            prior,
            design,
            target,
            target_mean,
        })
    }

    pub fn from_problem(problem: &AttackProblem) -> Result<Self> {
        let nig = problem.model.as_nig().ok_or_else(|| {
            crate::Error::Config("exact gradients need the nig_linreg model".into())
        })?;
        let target = problem
            .target
            .nig()
            .ok_or_else(|| crate::Error::Config("exact gradients need an NIG target".into()))?;
        Self::new(
            nig.prior().clone(),
            nig.design_data(&problem.data),
            target.clone(),
        )
    }
}

impl GradientOracle for ExactNigOracle {
    fn n(&self) -> usize {
        self.design.n()
    }

    fn estimate(
        &mut self,
        w: &WeightVector,
        _iteration: usize,
        mode: HessianMode,
    ) -> Result<Estimate> {
        let post = nig_weighted_posterior(&self.prior, &self.design, w)?;
        let mut est =
            Estimate::from_gradient(nig_expected_loglik(&post, &self.design)? - &self.target_mean);
        match mode {
            HessianMode::None => {}
            HessianMode::Diagonal => {
                est.hessian_diag = Some(nig_loglik_variance(&post, &self.design)?)
            }
            HessianMode::Full => {
                let h = nig_loglik_covariance(&post, &self.design)?;
                est.hessian_diag = Some(h.diagonal());
                est.hessian = Some(HessianEstimate { h_hat: h });
            }
        }
        Ok(est)
    }

    fn objective(&self, w: &WeightVector) -> Option<f64> {
        let post = nig_weighted_posterior(&self.prior, &self.design, w).ok()?;
        nig_kl(&self.target, &post).ok()
    }
}

const TARGET_STREAM: u64 = 1;
const TAINTED_STREAM: u64 = 2;

/// Monte Carlo estimates from `P` draws of `π_w` and `Q` draws of `π_A`.
/// Targets with a closed-form sampler are redrawn every iteration; targets
/// defined by MCMC are drawn once and reused.
pub struct SamplingOracle {
    problem: AttackProblem,
    p: usize,
    q: usize,
    seed: RngSeed,
    warm: Option<WarmStart>,
    mode_guess: Option<Vec<f64>>,
    cached_target: Option<(DVector<f64>, DVector<f64>)>,
}

impl SamplingOracle {
    pub fn new(problem: AttackProblem, p: usize, q: usize, seed: RngSeed) -> Self {
        Self {
            problem,
            p,
            q,
            seed,
            warm: None,
            mode_guess: None,
            cached_target: None,
        }
    }

    fn target_term(&mut self, iteration: usize) -> Result<(DVector<f64>, DVector<f64>)> {
        if let Some(c) = &self.cached_target {
            return Ok(c.clone());
        }
        let reuse = !self.problem.target.has_log_density();
        let seed = if reuse {
            self.seed.derive(TARGET_STREAM)
        } else {
            self.seed.derive2(TARGET_STREAM, iteration as u64)
        };
        let batch = self.problem.target.sample(self.q, seed)?;
        let m = loglik_matrix_rows(
            self.problem.model.as_ref(),
            &self.problem.data,
            &batch.thetas,
        )?;
        let mv = means_and_variances(&m);
        if reuse {
            self.cached_target = Some(mv.clone());
        }
        Ok(mv)
    }

    fn tainted_draws(&mut self, w: &WeightVector, iteration: usize) -> Result<SampleBatch> {
        let seed = self.seed.derive2(TAINTED_STREAM, iteration as u64);
        let pb = &self.problem;
        match &pb.backend {
            Backend::NigSampler | Backend::ExactGradient => {
                let nig = pb.model.as_nig().expect("checked at problem construction");
                sample_nig_exact(&nig.posterior(&pb.data, w)?, self.p, seed)
            }
            Backend::Hmc { hmc } => {
                let cfg = crate::samplers::HmcConfig {
                    samples: self.p,
                    seed,
                    ..hmc.clone()
                };
                let batch =
                    sample_posterior(pb.model.as_ref(), &pb.data, w, &cfg, self.warm.as_ref())?;
                self.warm = batch.warm_start_state.clone();
                Ok(batch)
            }
            Backend::Laplace => {
                let init = self
                    .mode_guess
                    .clone()
                    .unwrap_or_else(|| pb.model.initial_point(&pb.data));
                let approx =
                    laplace_approx(pb.model.as_ref(), &pb.data, w, &ParamVector::new(init)?)?;
                self.mode_guess = Some(approx.mean.iter().copied().collect());
                approx.sample(self.p, seed)
            }
        }
    }
}

impl GradientOracle for SamplingOracle {
    fn n(&self) -> usize {
        self.problem.n()
    }

    fn estimate(
        &mut self,
        w: &WeightVector,
        iteration: usize,
        mode: HessianMode,
    ) -> Result<Estimate> {
        w.check_len(self.n())?;
        let (t_mean, t_var) = self.target_term(iteration)?;
        let batch = self.tainted_draws(w, iteration)?;
        let m = loglik_matrix_rows(
            self.problem.model.as_ref(),
            &self.problem.data,
            &batch.thetas,
        )?;
        let gradient = gradient_from_means(&m, &t_mean, &t_var, self.q);
        let (hessian, hessian_diag) = match mode {
            HessianMode::None => (None, None),
            HessianMode::Diagonal => (None, Some(hessian_diagonal(&m)?)),
            HessianMode::Full => {
                let h = hessian_estimate(&m)?;
                let d = h.h_hat.diagonal();
                (Some(h), Some(d))
            }
        };
        Ok(Estimate {
            gradient,
            hessian,
            hessian_diag,
            diagnostics: batch.diagnostics,
        })
    }

    fn objective(&self, w: &WeightVector) -> Option<f64> {
        self.problem.exact_objective(w).and_then(|r| r.ok())
    }

    fn seeds(&self) -> Vec<RngSeed> {
        vec![
            self.seed,
            self.seed.derive(TARGET_STREAM),
            self.seed.derive(TAINTED_STREAM),
        ]
    }
}

pub fn make_oracle(problem: &AttackProblem, cfg: &AttackConfig) -> Result<Box<dyn GradientOracle>> {
    Ok(match problem.backend {
        Backend::ExactGradient => Box::new(ExactNigOracle::from_problem(problem)?),
        _ => Box::new(SamplingOracle::new(
            problem.clone(),
            cfg.p_samples,
            cfg.q_samples,
            cfg.seed,
        )),
    })
}
