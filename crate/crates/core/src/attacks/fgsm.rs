//! One gradient estimate at `w = 𝟏`, then a signed unit move on the
//! coordinates with the largest gradient magnitudes.

use nalgebra::DVector;

use super::oracle::{GradientOracle, HessianMode};
use super::trace::IterationRecord;
use super::{zero_budget_result, AttackConfig, AttackResult, Method, StopReason};
use crate::error::Result;
use crate::weights::{Budget, WeightVector};

/// The FGSM weight vector for gradient `g`. With `L ≥ 2` the `B` largest
/// `|gᵢ|` move to `1 − sign(gᵢ)`; with `L = 1` only deletions are possible and
/// the `B` most positive gradients are set to zero. Zero gradients never move;
/// ties go to the lower index.
pub fn fgsm_weights(g: &[f64], budget: Budget) -> WeightVector {
    let deletions_only = budget.l_max < 2;
    let mut idx: Vec<usize> = (0..g.len())
        .filter(|&i| {
            if deletions_only {
                g[i] > 0.0
            } else {
                g[i] != 0.0
            }
        })
        .collect();
    if deletions_only {
        idx.sort_by(|&a, &b| g[b].total_cmp(&g[a]));
    } else {
        idx.sort_by(|&a, &b| g[b].abs().total_cmp(&g[a].abs()));
    }
    idx.truncate(budget.b_max as usize);
    let mut w = vec![1.0; g.len()];
    for i in idx {
        w[i] = 1.0 - g[i].signum();
    }
    WeightVector::integral(w).expect("FGSM weights are 0, 1 or 2")
}

pub fn run_fgsm(oracle: &mut dyn GradientOracle, cfg: &AttackConfig) -> Result<AttackResult> {
    let cfg = &AttackConfig {
        method: Method::Fgsm,
        ..cfg.clone()
    };
    let n = oracle.n();
    if cfg.budget.b_max == 0 {
        return Ok(zero_budget_result(n, cfg, oracle.seeds()));
    }
    let w0 = WeightVector::ones(n);
    let est = oracle
        .estimate(&w0, 0, HessianMode::None)
        .map_err(|e| e.at_iteration(0))?;
    let g = est.g();
    let w_star = fgsm_weights(g.as_slice(), cfg.budget);
    let s = DVector::from_column_slice(w_star.as_slice()).add_scalar(-1.0);
    let first = g.dot(&s);
    let record = IterationRecord {
        grad_norm: g.norm(),
        grad_max_abs: g.amax(),
        mean_stderr: est.gradient.per_coordinate_stderr.mean(),
        predicted_change: first,
        forward_first_order: first,
        step_l1: s.lp_norm(1),
        step_l2: s.norm(),
        manipulations: w_star.manipulations(),
        objective: oracle.objective(&w_star),
        sampler: est.diagnostics.clone(),
        ..IterationRecord::empty(0)
    };
    Ok(AttackResult {
        method: Method::Fgsm,
        w_star,
        relaxed_w: None,
        trace: vec![record],
        seeds: oracle.seeds(),
        stop_reason: StopReason::SingleStep,
    })
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;

    use super::*;
    use crate::feasible::FeasibleSet;

    fn b(b: u32, l: u32) -> Budget {
        Budget::new(b, l).unwrap()
    }

    #[test]
    fn largest_magnitude_moves_against_sign() {
        let g = [0.5, -0.2, 0.9];
        assert_eq!(fgsm_weights(&g, b(1, 2)).as_slice(), &[1.0, 1.0, 0.0]);
        assert_eq!(fgsm_weights(&g, b(2, 2)).as_slice(), &[0.0, 1.0, 0.0]);
        assert_eq!(fgsm_weights(&g, b(3, 2)).as_slice(), &[0.0, 2.0, 0.0]);
    }

    #[test]
    fn deletions_only_when_l_is_one() {
        let g = [0.5, -0.2, 0.9];
        assert_eq!(fgsm_weights(&g, b(2, 1)).as_slice(), &[0.0, 1.0, 0.0]);
        assert_eq!(fgsm_weights(&g, b(3, 1)).as_slice(), &[0.0, 1.0, 0.0]);
    }

    #[test]
    fn saturated_budget_moves_every_coordinate() {
        let g = [0.1, -3.0, 2.0, -0.4];
        let w = fgsm_weights(&g, b(10, 2));
        assert_eq!(w.as_slice(), &[0.0, 2.0, 0.0, 2.0]);
        assert!(w.as_slice().iter().all(|v| (v - 1.0).abs() == 1.0));
    }

    #[test]
    fn ties_prefer_lower_index() {
        assert_eq!(
            fgsm_weights(&[0.3, -0.3, 0.3], b(1, 2)).as_slice(),
            &[0.0, 1.0, 1.0]
        );
    }

    proptest! {
        #[test]
        fn feasible_and_deletion_only(g in proptest::collection::vec(-5.0f64..5.0, 1..12), bb in 0u32..8, l in 1u32..4) {
            let budget = b(bb, l);
            let w = fgsm_weights(&g, budget);
            prop_assert!(FeasibleSet::new(g.len(), budget).contains(&w, 1e-12));
            prop_assert!(w.is_integral());
            if l == 1 {
                prop_assert!(w.as_slice().iter().all(|&v| v <= 1.0));
            }
        }
    }
}
