//! Per-iteration records and the stopping rules.

use serde::{Deserialize, Serialize};

use super::{AttackConfig, Method};
use crate::error::SamplerDiagnostics;
use crate::feasible::UnitMove;

/// One attack iteration. Changes are predicted objective changes for the step
/// taken at this iteration, `Δ = w_{t+1} − w_t`:
///
/// ```text
/// forward  1O: ĝ_tᵀΔ                     2O: ĝ_tᵀΔ + ½ΔᵀĤ_tΔ
/// backward 1O: ĝ_{t+1}ᵀΔ                 2O: ĝ_{t+1}ᵀΔ − ½ΔᵀĤ_{t+1}Δ
/// ```
///
/// By convexity the two first-order values bracket the true change. Backward
/// values are filled in once the next estimate exists.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iteration: usize,
    pub grad_norm: f64,
    pub grad_max_abs: f64,
    pub mean_stderr: f64,
    /// quantity compared against the first iteration by the stopping rule
    pub predicted_change: f64,
    pub forward_first_order: f64,
    pub forward_second_order: Option<f64>,
    pub backward_first_order: Option<f64>,
    pub backward_second_order: Option<f64>,
    pub step_l1: f64,
    pub step_l2: f64,
    pub unit_move: Option<UnitMove>,
    /// best ISCD score at this iteration
    pub best_score: Option<f64>,
    pub manipulations: f64,
    /// exact objective after the step, when available in closed form
    pub objective: Option<f64>,
    pub sampler: Option<SamplerDiagnostics>,
}

impl IterationRecord {
    pub(crate) fn empty(iteration: usize) -> Self {
        Self {
            iteration,
            grad_norm: 0.0,
            grad_max_abs: 0.0,
            mean_stderr: 0.0,
            predicted_change: 0.0,
            forward_first_order: 0.0,
            forward_second_order: None,
            backward_first_order: None,
            backward_second_order: None,
            step_l1: 0.0,
            step_l2: 0.0,
            unit_move: None,
            best_score: None,
            manipulations: 0.0,
            objective: None,
            sampler: None,
        }
    }
}

/// Whether the attack should stop after the last recorded iteration.
pub fn stopping_check(trace: &[IterationRecord], cfg: &AttackConfig) -> bool {
    let Some(last) = trace.last() else {
        return false;
    };
    if cfg.method.is_iscd() {
        return last.unit_move.is_none() || trace.len() >= cfg.iscd_iteration_cap();
    }
    if cfg.method == Method::Fgsm || trace.len() >= cfg.max_iters {
        return true;
    }
    let first = trace[0].predicted_change.abs();
    if trace.len() <= cfg.stop_patience {
        return false;
    }
    trace[trace.len() - cfg.stop_patience..].iter().all(|r| {
        let c = r.predicted_change.abs();
        c < cfg.stop_ratio * first || (first == 0.0 && c == 0.0)
    })
}
