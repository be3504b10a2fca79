//! The reverse-KL gradient estimator against central finite differences of a
//! Monte Carlo reverse KL, on a small NIG regression.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;
use statrs::distribution::{ContinuousCDF, Gamma};
use statrs::function::gamma::ln_gamma;

use bayes_poison::estimators::reverse_kl_gradient;
use bayes_poison::model::loglik_matrix_rows;
use bayes_poison::models::{
    gen_synthetic_regression, NigLinReg, NigParams, SyntheticRegressionSpec,
};
use bayes_poison::samplers::sample_nig_exact;
use bayes_poison::targets::nig_mean_shift_target;
use bayes_poison::{RngSeed, WeightVector};

struct Nig {
    mu: DVector<f64>,
    lambda: DMatrix<f64>,
    a: f64,
    b: f64,
}

fn conjugate_update(prior: &NigParams, x: &DMatrix<f64>, y: &DVector<f64>, w: &[f64]) -> Nig {
    let wm = DMatrix::from_diagonal(&DVector::from_column_slice(w));
    let lambda = &prior.lambda + x.transpose() * &wm * x;
    let rhs = &prior.lambda * &prior.mu + x.transpose() * &wm * y;
    let mu = lambda.clone().lu().solve(&rhs).unwrap();
    let ywy = (y.transpose() * &wm * y)[0];
    let b = prior.b
        + 0.5 * (ywy + prior.mu.dot(&(&prior.lambda * &prior.mu)) - mu.dot(&(&lambda * &mu)));
    Nig {
        a: prior.a + 0.5 * w.iter().sum::<f64>(),
        b,
        mu,
        lambda,
    }
}

/// Log-density of `(β, σ²)`: inverse-gamma times the conditional Gaussian.
fn log_pdf(p: &Nig, beta: &DVector<f64>, s2: f64) -> f64 {
    let d = beta.len() as f64;
    let inv_gamma = p.a * p.b.ln() - ln_gamma(p.a) - (p.a + 1.0) * s2.ln() - p.b / s2;
    let delta = beta - &p.mu;
    let logdet = p.lambda.determinant().ln();
    let gauss = -0.5 * d * (2.0 * std::f64::consts::PI * s2).ln() + 0.5 * logdet
        - 0.5 * delta.dot(&(&p.lambda * &delta)) / s2;
    inv_gamma + gauss
}

fn as_nig(p: &NigParams) -> Nig {
    Nig {
        mu: p.mu.clone(),
        lambda: p.lambda.clone(),
        a: p.a,
        b: p.b,
    }
}

/// `KL(π_w ‖ π_A)` averaged over fixed base draws `(u, z)`, each mapped to
/// `π_w` by the inverse gamma CDF and the Cholesky factor of `Λ_w`.
fn reverse_kl(post: &Nig, target: &Nig, base: &[(f64, DVector<f64>)]) -> f64 {
    let precision = Gamma::new(post.a, post.b).unwrap();
    let lt = post.lambda.clone().cholesky().unwrap().l().transpose();
    let mut total = 0.0;
    for (u, z) in base {
        let s2 = 1.0 / precision.inverse_cdf(*u);
        let beta = &post.mu + lt.solve_upper_triangular(z).unwrap() * s2.sqrt();
        total += log_pdf(post, &beta, s2) - log_pdf(target, &beta, s2);
    }
    total / base.len() as f64
}

fn mean_and_stderr(rows: &[DVector<f64>]) -> (DVector<f64>, DVector<f64>) {
    let k = rows.len() as f64;
    let mean = rows
        .iter()
        .fold(DVector::zeros(rows[0].len()), |acc, r| acc + r)
        / k;
    let var = rows.iter().fold(DVector::zeros(rows[0].len()), |acc, r| {
        acc + (r - &mean).map(|v| v * v)
    }) / (k - 1.0);
    (mean, var.map(|v| (v / k).sqrt()))
}

#[test]
fn reverse_kl_gradient_matches_finite_differences() {
    let data = gen_synthetic_regression(&SyntheticRegressionSpec {
        n: 6,
        seed: RngSeed::new(31, 0),
        ..Default::default()
    })
    .unwrap();
    let model = NigLinReg::new(NigParams::isotropic(2, 0.5, 3.0, 2.0).unwrap(), true).unwrap();
    let prior = model.prior().clone();
    let untainted = model.posterior(&data, &WeightVector::ones(6)).unwrap();
    let target = nig_mean_shift_target(&untainted, 1, untainted.mu[1] - 0.8).unwrap();
    let target_params = target.nig().unwrap().clone();
    let w = [1.0, 0.4, 1.6, 1.0, 2.0, 0.7];

    let design = model.design_data(&data);
    let x = design.x().clone();
    let y = design.response().unwrap().clone();
    let batches = 25;
    let per_batch = 20_000;

    let mut rng = RngSeed::new(32, 0).rng();
    let h = 1e-3;
    let fd: Vec<DVector<f64>> = (0..batches)
        .map(|_| {
            let base: Vec<(f64, DVector<f64>)> = (0..per_batch)
                .map(|_| {
                    (
                        rng.random::<f64>().clamp(1e-12, 1.0 - 1e-12),
                        DVector::from_fn(2, |_, _| rng.sample(StandardNormal)),
                    )
                })
                .collect();
            DVector::from_fn(6, |i, _| {
                let mut plus = w;
                let mut minus = w;
                plus[i] += h;
                minus[i] -= h;
                let kl = |v: &[f64]| {
                    reverse_kl(
                        &conjugate_update(&prior, &x, &y, v),
                        &as_nig(&target_params),
                        &base,
                    )
                };
                (kl(&plus) - kl(&minus)) / (2.0 * h)
            })
        })
        .collect();

    let wv = WeightVector::new(w.to_vec()).unwrap();
    let post = model.posterior(&data, &wv).unwrap();
    let est: Vec<DVector<f64>> = (0..batches as u64)
        .map(|k| {
            let batch = sample_nig_exact(&post, per_batch, RngSeed::new(33, k)).unwrap();
            let f = loglik_matrix_rows(&model, &data, &batch.thetas).unwrap();
            let logratio = DVector::from_fn(per_batch, |j, _| {
                let theta: Vec<f64> = batch.thetas.row(j).iter().copied().collect();
                prior.log_density(&theta, None).unwrap() - target.log_density(&theta).unwrap()
            });
            reverse_kl_gradient(&f, Some(&logratio), &wv).unwrap()
        })
        .collect();

    let (fd_mean, fd_se) = mean_and_stderr(&fd);
    let (est_mean, est_se) = mean_and_stderr(&est);
    for i in 0..6 {
        let se = (fd_se[i].powi(2) + est_se[i].powi(2)).sqrt();
        let z = (fd_mean[i] - est_mean[i]) / se;
        assert!(
            z.abs() < 4.0,
            "coordinate {i}: finite difference {} vs estimator {} (z = {z:.2})",
            fd_mean[i],
            est_mean[i]
        );
        // the error bars must be small enough for the comparison to mean something
        assert!(
            se < 0.05 * fd_mean.amax(),
            "coordinate {i}: standard error {se} too large"
        );
    }
}
