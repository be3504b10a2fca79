//! Seeded synthetic datasets.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::{Bernoulli, Distribution, StandardNormal, StudentT};
use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::rng::RngSeed;
use crate::special::sigmoid;

/// `y = β₀ + β₁x + ε` with `x ~ N(0, 1)` and `ε ~ N(0, noise_sd²)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SyntheticRegressionSpec {
    pub n: usize,
    pub beta0: f64,
    pub beta1: f64,
    pub noise_sd: f64,
    pub seed: RngSeed,
}

impl Default for SyntheticRegressionSpec {
    fn default() -> Self {
        Self {
            n: 100,
            beta0: 0.5,
            beta1: 0.3,
            noise_sd: 0.5,
            seed: RngSeed::default(),
        }
    }
}

pub fn gen_synthetic_regression(spec: &SyntheticRegressionSpec) -> Result<Dataset> {
    if spec.n == 0 {
        return Err(Error::invalid("synthetic dataset needs n ≥ 1"));
    }
    if !(spec.noise_sd >= 0.0 && spec.noise_sd.is_finite()) {
        return Err(Error::invalid("noise_sd must be nonnegative"));
    }
    let mut rng = spec.seed.rng();
    let x: Vec<f64> = (0..spec.n)
        .map(|_| StandardNormal.sample(&mut rng))
        .collect();
    let y: Vec<f64> = x
        .iter()
        .map(|xi| {
            let e: f64 = StandardNormal.sample(&mut rng);
            spec.beta0 + spec.beta1 * xi + spec.noise_sd * e
        })
        .collect();
    Dataset::new(
        DMatrix::from_column_slice(spec.n, 1, &x),
        Some(DVector::from_vec(y)),
    )?
    .with_column_names(vec!["x".into()])
}

/// Binary-feature logistic data: `xᵢⱼ ~ Bernoulli(feature_rates[j])`,
/// `yᵢ ~ Bernoulli(σ(intercept + xᵢβ))`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SyntheticLogisticSpec {
    pub n: usize,
    pub intercept: f64,
    pub coefficients: Vec<f64>,
    pub feature_rates: Vec<f64>,
    pub seed: RngSeed,
}

pub fn gen_synthetic_logistic(spec: &SyntheticLogisticSpec) -> Result<Dataset> {
    let d = spec.coefficients.len();
    if spec.n == 0 || d == 0 || spec.feature_rates.len() != d {
        return Err(Error::invalid(
            "logistic generator needs n ≥ 1 and one rate per coefficient",
        ));
    }
    let rates = spec
        .feature_rates
        .iter()
        .map(|&r| Bernoulli::new(r).map_err(|e| Error::invalid(e.to_string())))
        .collect::<Result<Vec<_>>>()?;
    let mut rng = spec.seed.rng();
    let mut x = DMatrix::zeros(spec.n, d);
    let mut y = DVector::zeros(spec.n);
    for i in 0..spec.n {
        let mut eta = spec.intercept;
        for j in 0..d {
            if rates[j].sample(&mut rng) {
                x[(i, j)] = 1.0;
                eta += spec.coefficients[j];
            }
        }
        y[i] = if rng.random::<f64>() < sigmoid(eta) {
            1.0
        } else {
            0.0
        };
    }
    let names = (0..d).map(|j| format!("x{j}")).collect();
    Dataset::new(x, Some(y))?.with_column_names(names)
}

/// Two-arm trial: `xᵢ ~ Bernoulli(treated_fraction)`,
/// `yᵢ = baseline + effect·xᵢ + noise_scale·tᵢ` with `tᵢ ~ t(noise_df)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TwoGroupSpec {
    pub n: usize,
    pub baseline: f64,
    pub effect: f64,
    pub treated_fraction: f64,
    pub noise_scale: f64,
    pub noise_df: f64,
    pub seed: RngSeed,
}

pub fn gen_two_group(spec: &TwoGroupSpec) -> Result<Dataset> {
    if spec.n == 0 {
        return Err(Error::invalid("two-group dataset needs n ≥ 1"));
    }
    let arm = Bernoulli::new(spec.treated_fraction).map_err(|e| Error::invalid(e.to_string()))?;
    let noise = StudentT::new(spec.noise_df).map_err(|e| Error::invalid(e.to_string()))?;
    let mut rng = spec.seed.rng();
    let mut x = Vec::with_capacity(spec.n);
    let mut y = Vec::with_capacity(spec.n);
    for _ in 0..spec.n {
        let t = if arm.sample(&mut rng) { 1.0 } else { 0.0 };
        let e: f64 = noise.sample(&mut rng);
        x.push(t);
        y.push(spec.baseline + spec.effect * t + spec.noise_scale * e);
    }
    Dataset::new(
        DMatrix::from_column_slice(spec.n, 1, &x),
        Some(DVector::from_vec(y)),
    )?
    .with_column_names(vec!["treatment".into()])
}
