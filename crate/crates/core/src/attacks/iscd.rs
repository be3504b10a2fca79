//! Iterative single-coordinate descent: one unit deletion or replication per
//! iteration, chosen by the predicted change `−|ĝᵢ| + ½Ĥᵢᵢ`.

use nalgebra::DVector;

use super::oracle::{GradientOracle, HessianMode};
use super::trace::{stopping_check, IterationRecord};
use super::{feasible_set, zero_budget_result, AttackConfig, AttackResult, Method, StopReason};
use crate::error::{Error, Result};
use crate::feasible::{FeasibleSet, UnitMove};
use crate::weights::WeightVector;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IscdChoice {
    pub mv: UnitMove,
    pub score: f64,
}

/// The feasible move `w ← w − sign(ĝⱼ)eⱼ` with the lowest score, or `None`
/// when every candidate's score is positive. `h_diag = None` gives the
/// first-order score `−|ĝᵢ|`. Coordinates with `ĝᵢ = 0` are skipped; ties go
/// to the lower index.
pub fn iscd_choose(
    fs: &FeasibleSet,
    w: &WeightVector,
    g: &[f64],
    h_diag: Option<&[f64]>,
) -> Option<IscdChoice> {
    let l = f64::from(fs.budget().l_max);
    let b = f64::from(fs.budget().b_max);
    let used: f64 = w.as_slice().iter().map(|v| (v - 1.0).abs()).sum();
    let mut best: Option<IscdChoice> = None;
    for (i, (&wi, &gi)) in w.as_slice().iter().zip(g).enumerate() {
        if gi == 0.0 || !gi.is_finite() {
            continue;
        }
        let d = -gi.signum();
        let next = wi + d;
        if next < 0.0 || next > l || used - (wi - 1.0).abs() + (next - 1.0).abs() > b + 1e-9 {
            continue;
        }
        let score = -gi.abs() + 0.5 * h_diag.map_or(0.0, |h| h[i]);
        if best.is_none_or(|c| score < c.score) {
            best = Some(IscdChoice {
                mv: UnitMove {
                    index: i,
                    direction: d as i8,
                },
                score,
            });
        }
    }
    best
}

pub fn run_iscd(
    oracle: &mut dyn GradientOracle,
    cfg: &AttackConfig,
    order: u8,
) -> Result<AttackResult> {
    let method = match order {
        1 => Method::Iscd1o,
        2 => Method::Iscd2o,
        _ => {
            return Err(Error::invalid(format!(
                "ISCD order must be 1 or 2, got {order}"
            )))
        }
    };
    let cfg = &AttackConfig {
        method,
        ..cfg.clone()
    };
    let n = oracle.n();
    if cfg.budget.b_max == 0 {
        return Ok(zero_budget_result(n, cfg, oracle.seeds()));
    }
    let mode = if order == 2 {
        HessianMode::Diagonal
    } else {
        HessianMode::None
    };
    let fs = feasible_set(oracle, cfg);
    let mut w = WeightVector::ones(n);
    let mut trace: Vec<IterationRecord> = Vec::new();
    let mut last: Option<UnitMove> = None;
    let mut stop_reason = StopReason::IterationCap;
    for t in 0.. {
        let est = oracle
            .estimate(&w, t, mode)
            .map_err(|e| e.at_iteration(t))?;
        let g = est.g();
        let h = if order == 2 {
            Some(est.hessian_diag.clone().ok_or_else(|| {
                Error::Internal("oracle returned no Hessian diagonal".into()).at_iteration(t)
            })?)
        } else {
            None
        };
        if let (Some(mv), Some(rec)) = (last, trace.last_mut()) {
            let lin = g[mv.index] * f64::from(mv.direction);
            rec.backward_first_order = Some(lin);
            rec.backward_second_order = h.as_ref().map(|h| lin - 0.5 * h[mv.index]);
        }
        let choice = iscd_choose(&fs, &w, g.as_slice(), h.as_ref().map(DVector::as_slice));
        let mut rec = IterationRecord {
            grad_norm: g.norm(),
            grad_max_abs: g.amax(),
            mean_stderr: est.gradient.per_coordinate_stderr.mean(),
            manipulations: w.manipulations(),
            sampler: est.diagnostics.clone(),
            ..IterationRecord::empty(t)
        };
        match choice.filter(|c| c.score <= 0.0) {
            Some(c) => {
                let mut next = w.clone().into_vec();
                next[c.mv.index] += f64::from(c.mv.direction);
                w = WeightVector::integral(next).map_err(|e| e.at_iteration(t))?;
                let lin = -g[c.mv.index].abs();
                rec.unit_move = Some(c.mv);
                rec.best_score = Some(c.score);
                rec.predicted_change = c.score;
                rec.forward_first_order = lin;
                rec.forward_second_order = h.as_ref().map(|_| c.score);
                rec.step_l1 = 1.0;
                rec.step_l2 = 1.0;
                rec.manipulations = w.manipulations();
                last = Some(c.mv);
            }
            None => {
                rec.best_score = choice.map(|c| c.score);
                last = None;
            }
        }
        rec.objective = oracle.objective(&w);
        let moved = rec.unit_move.is_some();
        trace.push(rec);
        if stopping_check(&trace, cfg) {
            if !moved {
                stop_reason = StopReason::NoImprovingMove;
            }
            break;
        }
    }
    Ok(AttackResult {
        method,
        w_star: w,
        relaxed_w: None,
        trace,
        seeds: oracle.seeds(),
        stop_reason,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::attacks::{Estimate, HessianMode};
    use crate::weights::Budget;

    struct Fixed {
        g: Vec<f64>,
        h: Vec<f64>,
    }

    impl GradientOracle for Fixed {
        fn n(&self) -> usize {
            self.g.len()
        }

        fn estimate(
            &mut self,
            _w: &WeightVector,
            _t: usize,
            mode: HessianMode,
        ) -> Result<Estimate> {
            let mut e = Estimate::from_gradient(DVector::from_vec(self.g.clone()));
            if mode != HessianMode::None {
                e.hessian_diag = Some(DVector::from_vec(self.h.clone()));
            }
            Ok(e)
        }
    }

    fn fs(b: u32, l: u32) -> FeasibleSet {
        FeasibleSet::new(2, Budget::new(b, l).unwrap())
    }

    #[test]
    fn second_order_scores_pick_deletion() {
        let w = WeightVector::ones(2);
        let c = iscd_choose(&fs(3, 2), &w, &[0.5, -0.8], Some(&[0.1, 1.0])).unwrap();
        assert!((c.score + 0.45).abs() < 1e-12);
        assert_eq!(
            c.mv,
            UnitMove {
                index: 0,
                direction: -1
            }
        );
        let mut o = Fixed {
            g: vec![0.5, -0.8],
            h: vec![0.1, 1.0],
        };
        let cfg = AttackConfig {
            iscd_max_iters: Some(1),
            ..AttackConfig::new(Method::Iscd2o, Budget::new(3, 2).unwrap())
        };
        assert_eq!(
            run_iscd(&mut o, &cfg, 2).unwrap().w_star.as_slice(),
            &[0.0, 1.0]
        );
    }

    #[test]
    fn first_order_scores_pick_replication() {
        let w = WeightVector::ones(2);
        let c = iscd_choose(&fs(3, 2), &w, &[0.5, -0.8], None).unwrap();
        assert!((c.score + 0.8).abs() < 1e-12);
        assert_eq!(
            c.mv,
            UnitMove {
                index: 1,
                direction: 1
            }
        );
        let mut o = Fixed {
            g: vec![0.5, -0.8],
            h: vec![0.1, 1.0],
        };
        let cfg = AttackConfig {
            iscd_max_iters: Some(1),
            ..AttackConfig::new(Method::Iscd1o, Budget::new(3, 2).unwrap())
        };
        assert_eq!(
            run_iscd(&mut o, &cfg, 1).unwrap().w_star.as_slice(),
            &[1.0, 2.0]
        );
    }

    #[test]
    fn zero_budget_stops_at_ones() {
        let mut o = Fixed {
            g: vec![0.5, -0.8],
            h: vec![0.0, 0.0],
        };
        let r = run_iscd(
            &mut o,
            &AttackConfig::new(Method::Iscd2o, Budget::new(0, 2).unwrap()),
            2,
        )
        .unwrap();
        assert_eq!(r.w_star.as_slice(), &[1.0, 1.0]);
        assert_eq!(r.stop_reason, StopReason::ZeroBudget);
    }

    #[test]
    fn positive_scores_stop_immediately() {
        let mut o = Fixed {
            g: vec![0.5, -0.8],
            h: vec![2.0, 2.0],
        };
        let r = run_iscd(
            &mut o,
            &AttackConfig::new(Method::Iscd2o, Budget::new(3, 2).unwrap()),
            2,
        )
        .unwrap();
        assert_eq!(r.w_star.as_slice(), &[1.0, 1.0]);
        assert_eq!(r.trace.len(), 1);
        assert_eq!(r.stop_reason, StopReason::NoImprovingMove);
    }

    #[test]
    fn constant_gradient_walks_to_the_boundary() {
        // every iterate is one unit from its predecessor and stays feasible
        let mut o = Fixed {
            g: vec![0.5, -0.8],
            h: vec![0.0, 0.0],
        };
        let cfg = AttackConfig::new(Method::Iscd1o, Budget::new(3, 2).unwrap());
        let r = run_iscd(&mut o, &cfg, 1).unwrap();
        assert_eq!(r.w_star.as_slice(), &[0.0, 2.0]);
        let moves: Vec<_> = r.trace.iter().filter_map(|t| t.unit_move).collect();
        assert_eq!(moves.len(), 2);
        assert!(r.trace.len() <= cfg.iscd_iteration_cap());
    }
}
