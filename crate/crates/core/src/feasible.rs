//! The attacker's feasible set
//!
//! ```text
//! 𝒲 = { w ∈ ℝⁿ : w ⪰ 0, ‖w‖∞ ≤ L, ‖w − 𝟏‖₁ ≤ B }
//! ```
//!
//! with membership, Euclidean projection, optimal rounding to integer points
//! and the unit-move neighbourhood used by coordinate descent.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::weights::{Budget, WeightVector, INTEGRALITY_TOL};

/// Tolerance for real-valued membership checks.
pub const FEASIBILITY_TOL: f64 = 1e-8;

const BISECTION_TOL: f64 = 1e-10;
const BISECTION_MAX_ITERS: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeasibleSet {
    n: usize,
    budget: Budget,
}

/// A unit step `w[index] += direction`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct UnitMove {
    pub index: usize,
    pub direction: i8,
}

impl FeasibleSet {
    pub fn new(n: usize, budget: Budget) -> Self {
        Self { n, budget }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn budget(&self) -> Budget {
        self.budget
    }

    fn b(&self) -> f64 {
        f64::from(self.budget.b_max)
    }

    fn l(&self) -> f64 {
        f64::from(self.budget.l_max)
    }

    pub fn contains(&self, w: &WeightVector, tol: f64) -> bool {
        self.violation(w.as_slice(), tol).is_none()
    }

    /// Describes the first violated constraint, if any.
    pub fn violation(&self, w: &[f64], tol: f64) -> Option<String> {
        if w.len() != self.n {
            return Some(format!("length {} does not match n = {}", w.len(), self.n));
        }
        if let Some(i) = w.iter().position(|&v| v < -tol || v.is_nan()) {
            return Some(format!("nonnegativity: w[{i}] = {} < 0", w[i]));
        }
        if let Some(i) = w.iter().position(|&v| v > self.l() + tol) {
            return Some(format!(
                "replication cap: w[{i}] = {} > L = {}",
                w[i], self.budget.l_max
            ));
        }
        let l1 = l1_from_ones(w);
        if l1 > self.b() + tol {
            return Some(format!(
                "manipulation budget: ‖w − 1‖₁ = {l1} > B = {}",
                self.budget.b_max
            ));
        }
        None
    }

    /// Euclidean projection of `v` onto 𝒲.
    pub fn project(&self, v: &[f64]) -> Result<WeightVector> {
        if v.len() != self.n {
            return Err(Error::invalid(format!(
                "length {} does not match n = {}",
                v.len(),
                self.n
            )));
        }
        if v.iter().any(|x| !x.is_finite()) {
            return Err(Error::invalid(
                "cannot project a vector with non-finite entries",
            ));
        }
        let out = project_shifted(v, self.b(), self.l());
        WeightVector::new(out)
    }

    /// Nearest integer point of 𝒲 to a feasible `w`.
    pub fn round_constrained(&self, w: &WeightVector) -> Result<WeightVector> {
        if let Some(why) = self.violation(w.as_slice(), FEASIBILITY_TOL) {
            return Err(Error::invalid(format!(
                "rounding requires a feasible point: {why}"
            )));
        }
        let mut floors = Vec::with_capacity(self.n);
        let mut fracs = Vec::with_capacity(self.n);
        for &wi in w.as_slice() {
            let delta = (wi - 1.0).abs();
            let nearest = delta.round();
            let (fl, fr) = if (delta - nearest).abs() <= INTEGRALITY_TOL {
                (nearest, 0.0)
            } else {
                (delta.floor(), delta - delta.floor())
            };
            floors.push(fl);
            fracs.push(fr);
        }
        let n_max = (self.b() - floors.iter().sum::<f64>()).max(0.0) as usize;
        let mut above: Vec<usize> = (0..self.n).filter(|&i| fracs[i] > 0.5).collect();
        if above.len() > n_max {
            // stable sort keeps ascending index among equal fractional parts
            above.sort_by(|&a, &b| fracs[b].total_cmp(&fracs[a]));
            above.truncate(n_max);
        }
        let mut alpha = vec![0.0; self.n];
        for i in above {
            alpha[i] = 1.0;
        }
        let out = w
            .as_slice()
            .iter()
            .enumerate()
            .map(|(i, &wi)| {
                let sign = if wi - 1.0 >= 0.0 { 1.0 } else { -1.0 };
                1.0 + sign * (floors[i] + alpha[i])
            })
            .collect();
        WeightVector::integral(out)
    }

    /// Unit moves from an integral feasible `w` that stay in 𝒲, in ascending
    /// index order with `+1` before `−1`.
    pub fn feasible_unit_moves(&self, w: &WeightVector) -> Vec<UnitMove> {
        let w = w.as_slice();
        let l1 = l1_from_ones(w);
        let mut moves = Vec::new();
        for (i, &wi) in w.iter().enumerate() {
            for direction in [1i8, -1] {
                let next = wi + f64::from(direction);
                if next < -FEASIBILITY_TOL || next > self.l() + FEASIBILITY_TOL {
                    continue;
                }
                let l1_next = l1 - (wi - 1.0).abs() + (next - 1.0).abs();
                if l1_next <= self.b() + FEASIBILITY_TOL {
                    moves.push(UnitMove {
                        index: i,
                        direction,
                    });
                }
            }
        }
        moves
    }
}

fn l1_from_ones(w: &[f64]) -> f64 {
    w.iter().map(|v| (v - 1.0).abs()).sum()
}

/// Projection with the shift `u = v − 𝟏`: the box becomes `[−1, L−1]` and
/// the budget an L1 ball of radius `B`. If clipping alone is within budget we
/// are done; otherwise bisect on the soft-threshold level `λ`.
fn project_shifted(v: &[f64], b: f64, l: f64) -> Vec<f64> {
    let (lo, hi_box) = (-1.0, l - 1.0);
    let c: Vec<f64> = v.iter().map(|x| x - 1.0).collect();
    let clipped = |lambda: f64| -> Vec<f64> {
        c.iter()
            .map(|&ci| {
                let s = ci.signum() * (ci.abs() - lambda).max(0.0);
                s.clamp(lo, hi_box)
            })
            .collect()
    };
    let norm = |u: &[f64]| u.iter().map(|x| x.abs()).sum::<f64>();

    let u0 = clipped(0.0);
    if norm(&u0) <= b {
        return u0.into_iter().map(|x| x + 1.0).collect();
    }
    let mut a = 0.0;
    let mut z = c.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    for _ in 0..BISECTION_MAX_ITERS {
        if z - a <= BISECTION_TOL {
            break;
        }
        let mid = 0.5 * (a + z);
        if norm(&clipped(mid)) > b {
            a = mid;
        } else {
            z = mid;
        }
    }
    // the upper end of the bracket is always within budget
    clipped(z).into_iter().map(|x| (x + 1.0).max(0.0)).collect()
}
