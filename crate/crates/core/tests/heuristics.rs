//! Head-to-head behaviour of the relaxation heuristics on the regression
//! instance, with exact gradients.

#[path = "common/oracles.rs"]
#[allow(dead_code)]
mod oracles;

use std::sync::Arc;

use bayes_poison::attacks::{run_attack, AttackConfig, AttackProblem, Backend, Method};
use bayes_poison::models::{
    gen_synthetic_regression, nig_exact_gradient, nig_kl, NigLinReg, NigParams,
    SyntheticRegressionSpec,
};
use bayes_poison::targets::nig_mean_shift_target;
use bayes_poison::{Budget, RngSeed, WeightVector};

fn problem() -> AttackProblem {
    let data = gen_synthetic_regression(&SyntheticRegressionSpec {
        seed: RngSeed::new(0, 0),
        ..Default::default()
    })
    .unwrap();
    let model = NigLinReg::new(NigParams::isotropic(2, 0.01, 2.0, 2.0).unwrap(), true).unwrap();
    let post = model.posterior(&data, &WeightVector::ones(100)).unwrap();
    let target = nig_mean_shift_target(&post, 1, 0.0).unwrap();
    AttackProblem::new(Arc::new(model), data, target, Backend::ExactGradient).unwrap()
}

fn kl(p: &AttackProblem, w: &[f64]) -> f64 {
    let post = p
        .model
        .as_nig()
        .unwrap()
        .posterior(&p.data, &WeightVector::new(w.to_vec()).unwrap())
        .unwrap();
    nig_kl(p.target.nig().unwrap(), &post).unwrap()
}

fn optimum(p: &AttackProblem, b: u32) -> f64 {
    let nig = p.model.as_nig().unwrap();
    let design = nig.design_data(&p.data);
    let grad = |w: &[f64]| {
        let w = WeightVector::new(w.to_vec()).unwrap();
        nig_exact_gradient(nig.prior(), &design, &w, p.target.nig().unwrap())
            .unwrap()
            .iter()
            .copied()
            .collect()
    };
    oracles::projected_gradient_min(|w| kl(p, w), grad, p.n(), f64::from(b), 2.0, 20_000).1
}

/// First iteration whose relaxed objective is within `tol` of `opt`.
fn iterations_to(p: &AttackProblem, method: Method, b: u32, opt: f64, tol: f64) -> Option<usize> {
    let cfg = AttackConfig {
        stop_ratio: 1e-12,
        max_iters: 5000,
        ..AttackConfig::new(method, Budget::new(b, 2).unwrap())
    };
    let res = run_attack(p, &cfg).unwrap();
    res.trace
        .iter()
        .position(|r| r.objective.unwrap() <= opt + tol)
        .map(|i| i + 1)
}

#[test]
fn adam_reaches_the_optimum_in_a_quarter_of_sgd_iterations() {
    let p = problem();
    let b = 30;
    let opt = optimum(&p, b);
    let sgd = iterations_to(&p, Method::SgdR2, b, opt, 2e-3).expect("SGD-R2 reaches the optimum");
    let adam =
        iterations_to(&p, Method::AdamR2, b, opt, 2e-3).expect("Adam-R2 reaches the optimum");
    eprintln!("optimum {opt:.5}: SGD-R2 {sgd} iterations, Adam-R2 {adam}");
    assert!(
        4 * adam <= sgd,
        "Adam-R2 took {adam} iterations, SGD-R2 {sgd}"
    );
}

#[test]
fn relaxed_iterates_stay_feasible_for_random_budgets() {
    let p = problem();
    for (b, l) in [(1u32, 1u32), (7, 2), (25, 3), (60, 2)] {
        for method in [Method::SgdR2, Method::AdamR2, Method::SecondOrderR2] {
            let cfg = AttackConfig {
                max_iters: 40,
                ..AttackConfig::new(method, Budget::new(b, l).unwrap())
            };
            let res = run_attack(&p, &cfg).unwrap();
            let fs = bayes_poison::FeasibleSet::new(p.n(), cfg.budget);
            assert!(
                fs.contains(res.relaxed_w.as_ref().unwrap(), 1e-9),
                "{method:?} B={b} L={l}"
            );
            assert!(fs.contains(&res.w_star, 0.0) && res.w_star.is_integral());
        }
    }
}
