//! Rounded relaxations: optimize over the continuous 𝒲, then round.

use nalgebra::DVector;

use super::oracle::{Estimate, GradientOracle, HessianMode};
use super::quadratic::solve_quadratic_subproblem;
use super::trace::{stopping_check, IterationRecord};
use super::{feasible_set, zero_budget_result, AttackConfig, AttackResult, Method, StopReason};
use crate::error::{Error, Result};
use crate::estimators::HessianEstimate;
use crate::feasible::{FeasibleSet, FEASIBILITY_TOL};
use crate::weights::WeightVector;

enum Stepper {
    Sgd,
    Adam { m: DVector<f64>, v: DVector<f64> },
    SecondOrder,
}

impl Stepper {
    fn hessian_mode(&self) -> HessianMode {
        match self {
            Stepper::SecondOrder => HessianMode::Full,
            _ => HessianMode::None,
        }
    }

    fn step(
        &mut self,
        fs: &FeasibleSet,
        w: &WeightVector,
        est: &Estimate,
        t: usize,
        cfg: &AttackConfig,
    ) -> Result<WeightVector> {
        let g = est.g();
        let wv = DVector::from_column_slice(w.as_slice());
        match self {
            Stepper::Sgd => {
                let gamma = cfg.learning_rate.at(t);
                fs.project((&wv - g * gamma).as_slice())
            }
            Stepper::Adam { m, v } => {
                let gamma = cfg.learning_rate.at(t);
                let projected = DVector::from_column_slice(
                    fs.project((&wv - g * gamma).as_slice())?.as_slice(),
                );
                let pseudo = &wv - projected;
                let a = &cfg.adam;
                *m = &*m * a.beta1 + &pseudo * (1.0 - a.beta1);
                *v = &*v * a.beta2 + pseudo.component_mul(&pseudo) * (1.0 - a.beta2);
                let k = (t + 1) as i32;
                let m_hat = &*m / (1.0 - a.beta1.powi(k));
                let v_hat = &*v / (1.0 - a.beta2.powi(k));
                let update = m_hat.zip_map(&v_hat, |mi, vi| mi / (vi.sqrt() + a.eps));
                fs.project((&wv - update * a.step_size).as_slice())
            }
            Stepper::SecondOrder => {
                let h = est.hessian.as_ref().ok_or_else(|| {
                    Error::Internal("second-order step without a Hessian estimate".into())
                })?;
                solve_quadratic_subproblem(fs, w, g, &h.regularized(), &cfg.inner)
            }
        }
    }
}

pub fn run_sgd_r2(oracle: &mut dyn GradientOracle, cfg: &AttackConfig) -> Result<AttackResult> {
    run_relaxation(oracle, cfg, Method::SgdR2, Stepper::Sgd)
}

/// Adam on the pseudo-gradient `w − Π_𝒲(w − γ_t ĝ)`, projected after each
/// update.
pub fn run_adam_r2(oracle: &mut dyn GradientOracle, cfg: &AttackConfig) -> Result<AttackResult> {
    let n = oracle.n();
    run_relaxation(
        oracle,
        cfg,
        Method::AdamR2,
        Stepper::Adam {
            m: DVector::zeros(n),
            v: DVector::zeros(n),
        },
    )
}

/// Each step minimizes the second-order model `ĝᵀs + ½sᵀĤs` over 𝒲.
pub fn run_2o_r2(oracle: &mut dyn GradientOracle, cfg: &AttackConfig) -> Result<AttackResult> {
    run_relaxation(oracle, cfg, Method::SecondOrderR2, Stepper::SecondOrder)
}

fn quad(h: &HessianEstimate, s: &DVector<f64>) -> f64 {
    s.dot(&(&h.h_hat * s))
}

fn run_relaxation(
    oracle: &mut dyn GradientOracle,
    cfg: &AttackConfig,
    method: Method,
    mut stepper: Stepper,
) -> Result<AttackResult> {
    let cfg = &AttackConfig {
        method,
        ..cfg.clone()
    };
    let n = oracle.n();
    if cfg.budget.b_max == 0 {
        return Ok(zero_budget_result(n, cfg, oracle.seeds()));
    }
    let fs = feasible_set(oracle, cfg);
    let mut w = WeightVector::ones(n);
    let mut trace: Vec<IterationRecord> = Vec::new();
    let mut last_step: Option<DVector<f64>> = None;
    let mut stop_reason = StopReason::IterationCap;
    for t in 0..cfg.max_iters {
        let est = oracle
            .estimate(&w, t, stepper.hessian_mode())
            .map_err(|e| e.at_iteration(t))?;
        let g = est.g();
        if let (Some(prev), Some(rec)) = (&last_step, trace.last_mut()) {
            rec.backward_first_order = Some(g.dot(prev));
            rec.backward_second_order = est
                .hessian
                .as_ref()
                .map(|h| g.dot(prev) - 0.5 * quad(h, prev));
        }
        let next = stepper
            .step(&fs, &w, &est, t, cfg)
            .map_err(|e| e.at_iteration(t))?;
        if let Some(why) = fs.violation(next.as_slice(), FEASIBILITY_TOL) {
            return Err(Error::ConstraintViolation(why).at_iteration(t));
        }
        let s =
            DVector::from_column_slice(next.as_slice()) - DVector::from_column_slice(w.as_slice());
        let first = g.dot(&s);
        let second = est.hessian.as_ref().map(|h| first + 0.5 * quad(h, &s));
        trace.push(IterationRecord {
            grad_norm: g.norm(),
            grad_max_abs: g.amax(),
            mean_stderr: est.gradient.per_coordinate_stderr.mean(),
            predicted_change: second.unwrap_or(first),
            forward_first_order: first,
            forward_second_order: second,
            step_l1: s.lp_norm(1),
            step_l2: s.norm(),
            manipulations: next.manipulations(),
            objective: oracle.objective(&next),
            sampler: est.diagnostics.clone(),
            ..IterationRecord::empty(t)
        });
        w = next;
        last_step = Some(s);
        if stopping_check(&trace, cfg) {
            if trace.len() < cfg.max_iters {
                stop_reason = StopReason::Converged;
            }
            break;
        }
    }
    let w_star = fs.round_constrained(&w)?;
    Ok(AttackResult {
        method,
        w_star,
        relaxed_w: Some(w),
        trace,
        seeds: oracle.seeds(),
        stop_reason,
    })
}
