//! One attack job and its result document.

use std::collections::BTreeMap;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::config::{RunConfig, SweepAxis, SCHEMA_VERSION};
use crate::attacks::{
    run_attack, AttackConfig, AttackProblem, Backend, IterationRecord, Method, StopReason,
};
use crate::error::{Error, Result};
use crate::feasible::{FeasibleSet, FEASIBILITY_TOL};
use crate::metrics::{
    cross_evaluate, evaluate, reported_mean, rounding_gap, CrossEvalEntry, EvalConfig, EvalReport,
    RoundingGap,
};
use crate::rng::RngSeed;
use crate::targets::TargetDescriptor;
use crate::weights::{Budget, WeightVector};

const EVAL_LABEL: u64 = 0xe7a1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub axis: SweepAxis,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSeeds {
    pub run: u64,
    pub data: Option<RngSeed>,
    pub attack: RngSeed,
    pub eval: RngSeed,
    /// streams consumed by the gradient oracle
    pub oracle: Vec<RngSeed>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunResult {
    pub schema_version: u32,
    pub method: Method,
    pub budget: Budget,
    pub replication: usize,
    pub sweep: Option<SweepPoint>,
    pub seeds: RunSeeds,
    pub wall_clock_seconds: f64,
    pub target: TargetDescriptor,
    pub stop_reason: StopReason,
    pub iterations: usize,
    pub w_star: Vec<f64>,
    pub relaxed_w: Option<Vec<f64>>,
    /// report at `w = 𝟏`
    pub baseline: EvalReport,
    /// report at `w_star`
    pub eval: EvalReport,
    pub rounding_gap: Option<RoundingGap>,
    pub cross_eval: Vec<CrossEvalEntry>,
    pub trace: Vec<IterationRecord>,
}

impl RunResult {
    /// Scalar metrics for the aggregate table.
    pub fn metrics(&self) -> BTreeMap<String, f64> {
        let mut m = BTreeMap::new();
        if let Some(kl) = self.eval.kl_to_target.value {
            m.insert("kl".into(), kl);
        }
        if let Some(kl) = self.baseline.kl_to_target.value {
            m.insert("kl_baseline".into(), kl);
        }
        m.insert(
            "manipulations".into(),
            self.w_star.iter().map(|v| (v - 1.0).abs()).sum(),
        );
        m.insert("iterations".into(), self.iterations as f64);
        m.insert("wall_clock_seconds".into(), self.wall_clock_seconds);
        if let Some(g) = &self.rounding_gap {
            m.insert("rounding_l0".into(), g.l0_dist as f64);
            m.insert("rounding_l2".into(), g.l2_dist);
            m.insert("kl_relaxed".into(), g.kl_before);
        }
        for name in self.eval.summaries.keys() {
            if let Some(mean) = reported_mean(&self.eval, name) {
                m.insert(format!("{name}_mean"), mean);
            }
            let sd = self
                .eval
                .nig_marginals
                .as_ref()
                .and_then(|n| n.get(name).map(|v| v.sd))
                .unwrap_or(self.eval.summaries[name].sd);
            m.insert(format!("{name}_sd"), sd);
            if let Some(t) = self.eval.summaries[name].tails.first() {
                m.insert(format!("{name}_prob_below_{}", t.threshold), t.prob_below);
            }
        }
        m
    }
}

/// Seed used for evaluation draws in replication `r`; shared by all methods
/// and sweep cells so their reports use common random numbers.
pub fn eval_seed(run_seed: u64, replication: usize) -> RngSeed {
    RngSeed::new(run_seed, 0).derive2(EVAL_LABEL, replication as u64)
}

fn attack_seed(run_seed: u64, cell: usize, method_index: usize, replication: usize) -> RngSeed {
    RngSeed::new(run_seed, 0).derive2(
        1 + (cell as u64) * 64 + method_index as u64,
        replication as u64,
    )
}

pub fn eval_config(cfg: &RunConfig, run_seed: u64, replication: usize) -> EvalConfig {
    EvalConfig {
        seed: eval_seed(run_seed, replication),
        ..cfg.eval.clone()
    }
}

/// Reports for `w` under the primary model and every alternate model.
pub fn evaluate_all(
    cfg: &RunConfig,
    problem: &AttackProblem,
    w: &WeightVector,
    eval_cfg: &EvalConfig,
) -> Result<(EvalReport, Vec<CrossEvalEntry>)> {
    let primary = evaluate(problem, w, None, eval_cfg)?;
    let alternates = cfg.alternate_models(problem.data.p())?;
    let backend = match &problem.backend {
        b @ (Backend::Hmc { .. } | Backend::Laplace) => b.clone(),
        _ => Backend::Laplace,
    };
    let build = |m: &std::sync::Arc<dyn crate::model::Model>, d: &crate::data::Dataset| {
        cfg.target.build(m, d)
    };
    let cross = cross_evaluate(w, &alternates, &problem.data, &build, &backend, eval_cfg);
    Ok((primary, cross))
}

/// Checks that `w` is an integral point of the feasible set.
pub fn check_weights(w: &[f64], n: usize, budget: Budget) -> Result<WeightVector> {
    if let Some(why) = FeasibleSet::new(n, budget).violation(w, FEASIBILITY_TOL) {
        return Err(Error::ConstraintViolation(why));
    }
    let wv = WeightVector::new(w.to_vec())?;
    if !wv.is_integral() {
        let i = w
            .iter()
            .position(|v| (v - v.round()).abs() > crate::weights::INTEGRALITY_TOL)
            .unwrap_or(0);
        return Err(Error::ConstraintViolation(format!(
            "integrality: w[{i}] = {} is not a whole number",
            w[i]
        )));
    }
    Ok(wv)
}

pub struct Job {
    pub cell: usize,
    pub sweep: Option<SweepPoint>,
    pub method_index: usize,
    pub replication: usize,
}

pub fn run_job(cfg: &RunConfig, job: &Job, run_seed: u64) -> Result<RunResult> {
    let problem = cfg.problem(job.replication)?;
    let seed = attack_seed(run_seed, job.cell, job.method_index, job.replication);
    let attack = AttackConfig {
        seed,
        ..cfg.attacks[job.method_index].clone()
    };
    let eval_cfg = eval_config(cfg, run_seed, job.replication);

    let start = Instant::now();
    let result = run_attack(&problem, &attack)?;
    let wall = start.elapsed().as_secs_f64();

    let baseline = evaluate(&problem, &WeightVector::ones(problem.n()), None, &eval_cfg)?;
    let (eval, cross_eval) = evaluate_all(cfg, &problem, &result.w_star, &eval_cfg)?;
    let gap = result
        .relaxed_w
        .as_ref()
        .map(|r| rounding_gap(&problem, r, &result.w_star))
        .transpose()?;
    Ok(RunResult {
        schema_version: SCHEMA_VERSION,
        method: result.method,
        budget: attack.budget,
        replication: job.replication,
        sweep: job.sweep,
        seeds: RunSeeds {
            run: run_seed,
            data: cfg.data_seed(job.replication),
            attack: seed,
            eval: eval_cfg.seed,
            oracle: result.seeds,
        },
        wall_clock_seconds: wall,
        target: problem.target.descriptor().clone(),
        stop_reason: result.stop_reason,
        iterations: result.trace.len(),
        w_star: result.w_star.into_vec(),
        relaxed_w: result.relaxed_w.map(WeightVector::into_vec),
        baseline,
        eval,
        rounding_gap: gap,
        cross_eval,
        trace: result.trace,
    })
}
