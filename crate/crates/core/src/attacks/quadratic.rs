//! The second-order subproblem
//!
//! ```text
//! min_{x ∈ 𝒲}  gᵀ(x − w) + ½ (x − w)ᵀ H (x − w)
//! ```
//!
//! solved by accelerated projected gradient with function-value restarts.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::feasible::FeasibleSet;
use crate::linalg::max_eigenvalue_psd;
use crate::weights::WeightVector;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InnerSolverConfig {
    pub max_iters: usize,
    /// stop when `‖x_{k+1} − x_k‖ ≤ tol (1 + ‖x_k‖)`
    pub tol: f64,
}

impl Default for InnerSolverConfig {
    fn default() -> Self {
        Self {
            max_iters: 5000,
            tol: 1e-10,
        }
    }
}

impl InnerSolverConfig {
    pub(crate) fn validate(&self) -> Result<()> {
        if self.max_iters == 0 || self.tol.is_nan() || self.tol <= 0.0 {
            return Err(Error::Config(format!(
                "invalid inner solver settings {self:?}"
            )));
        }
        Ok(())
    }
}

fn model_value(g: &DVector<f64>, h: &DMatrix<f64>, w: &DVector<f64>, x: &DVector<f64>) -> f64 {
    let s = x - w;
    g.dot(&s) + 0.5 * s.dot(&(h * &s))
}

/// Minimizer of the quadratic model around `w` over `fs`. `h` must be
/// symmetric positive semidefinite.
pub fn solve_quadratic_subproblem(
    fs: &FeasibleSet,
    w: &WeightVector,
    g: &DVector<f64>,
    h: &DMatrix<f64>,
    cfg: &InnerSolverConfig,
) -> Result<WeightVector> {
    let n = fs.n();
    if w.len() != n || g.len() != n || h.shape() != (n, n) {
        return Err(Error::invalid(
            "quadratic subproblem dimensions do not match",
        ));
    }
    let lip = max_eigenvalue_psd(h);
    if !lip.is_finite() {
        return Err(Error::Domain(
            "non-finite curvature in quadratic subproblem".into(),
        ));
    }
    let step = 1.0 / lip.max(1e-12);
    let w0 = DVector::from_column_slice(w.as_slice());
    let mut x = DVector::from_column_slice(fs.project(w.as_slice())?.as_slice());
    let mut fx = model_value(g, h, &w0, &x);
    let mut y = x.clone();
    let mut t = 1.0_f64;
    for _ in 0..cfg.max_iters {
        let grad = g + h * (&y - &w0);
        let moved = &y - grad * step;
        let x_next = DVector::from_column_slice(fs.project(moved.as_slice())?.as_slice());
        let f_next = model_value(g, h, &w0, &x_next);
        let delta = (&x_next - &x).norm();
        let scale = 1.0 + x.norm();
        if f_next > fx {
            // restart momentum from the better point
            t = 1.0;
            y = x.clone();
            if delta <= cfg.tol * scale {
                break;
            }
            continue;
        }
        let t_next = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
        y = &x_next + (&x_next - &x) * ((t - 1.0) / t_next);
        t = t_next;
        x = x_next;
        fx = f_next;
        if delta <= cfg.tol * scale {
            break;
        }
    }
    fs.project(x.as_slice())
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;
    use rand::Rng;

    use super::*;
    use crate::rng::RngSeed;
    use crate::weights::Budget;

    #[test]
    fn identity_curvature_reduces_to_projection() {
        let fs = FeasibleSet::new(4, Budget::new(2, 2).unwrap());
        let w = WeightVector::new(vec![1.0, 1.2, 0.8, 1.0]).unwrap();
        let g = DVector::from_vec(vec![0.7, -1.5, 0.3, -0.2]);
        let x = solve_quadratic_subproblem(
            &fs,
            &w,
            &g,
            &DMatrix::identity(4, 4),
            &InnerSolverConfig::default(),
        )
        .unwrap();
        let shifted: Vec<f64> = w
            .as_slice()
            .iter()
            .zip(g.iter())
            .map(|(a, b)| a - b)
            .collect();
        let p = fs.project(&shifted).unwrap();
        for (a, b) in x.as_slice().iter().zip(p.as_slice()) {
            assert!((a - b).abs() < 1e-9);
        }
    }

    // Exhaustive grid over a 2-d feasible set, refined once around the best
    // grid point.
    fn grid_minimum(fs: &FeasibleSet, w: &DVector<f64>, g: &DVector<f64>, h: &DMatrix<f64>) -> f64 {
        let l = f64::from(fs.budget().l_max);
        let mut best = (f64::INFINITY, 0.0, 0.0);
        let scan =
            |lo0: f64, hi0: f64, lo1: f64, hi1: f64, k: usize, best: &mut (f64, f64, f64)| {
                for i in 0..=k {
                    for j in 0..=k {
                        let a = lo0 + (hi0 - lo0) * i as f64 / k as f64;
                        let b = lo1 + (hi1 - lo1) * j as f64 / k as f64;
                        let x = WeightVector::new(vec![a.max(0.0), b.max(0.0)]).unwrap();
                        if !fs.contains(&x, 1e-12) {
                            continue;
                        }
                        let v = model_value(g, h, w, &DVector::from_column_slice(x.as_slice()));
                        if v < best.0 {
                            *best = (v, a, b);
                        }
                    }
                }
            };
        scan(0.0, l, 0.0, l, 1200, &mut best);
        let (_, a, b) = best;
        let r = 2.0 * l / 1200.0;
        scan(a - r, a + r, b - r, b + r, 1000, &mut best);
        best.0
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]
        #[test]
        fn matches_grid_oracle(seed in 0u64..1_000_000, b in 0u32..4, l in 1u32..4) {
            let mut rng = RngSeed::new(seed, 0).rng();
            let fs = FeasibleSet::new(2, Budget::new(b, l).unwrap());
            let a = DMatrix::from_fn(2, 2, |_, _| rng.random_range(-1.0..1.0));
            let h = &a * a.transpose() + DMatrix::identity(2, 2) * 0.1;
            let g = DVector::from_fn(2, |_, _| rng.random_range(-3.0..3.0));
            let w = WeightVector::ones(2);
            let x = solve_quadratic_subproblem(&fs, &w, &g, &h, &InnerSolverConfig::default()).unwrap();
            prop_assert!(fs.contains(&x, 1e-8));
            let w0 = DVector::from_element(2, 1.0);
            let got = model_value(&g, &h, &w0, &DVector::from_column_slice(x.as_slice()));
            let grid = grid_minimum(&fs, &w0, &g, &h);
            prop_assert!((got - grid).abs() <= 1e-4, "solver {got} vs grid {grid}");
        }
    }
}
