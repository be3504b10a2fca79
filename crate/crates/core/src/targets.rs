//! Adversarial posteriors `π_A`. Exact families (NIG, Gaussian) carry a
//! log-density; targets defined as the posterior of a modified dataset are
//! sampled by MCMC and have none.

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::linalg::{cholesky, spd_inverse};
use crate::model::{Model, ParamVector};
use crate::models::NigParams;
use crate::rng::RngSeed;
use crate::samplers::{
    laplace_approx, sample_nig_exact, sample_posterior, GaussianApprox, HmcConfig, SampleBatch,
};
use crate::weights::WeightVector;

/// How a target was built, serialized into run results.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "recipe", rename_all = "snake_case")]
pub enum TargetDescriptor {
    NigMeanShift {
        coord: usize,
        original: f64,
        new_value: f64,
    },
    NigVarianceScale {
        coord: usize,
        rho: f64,
    },
    SyntheticRefit {
        estimates: Vec<f64>,
        rows: usize,
        seed: RngSeed,
    },
    ResponseShift {
        shift: f64,
        shifted_rows: usize,
    },
    LaplaceFlip {
        coord: usize,
        original: f64,
        flipped: f64,
    },
    Untainted,
}

#[derive(Clone)]
enum Family {
    Nig(NigParams),
    Gaussian(GaussianApprox),
    Mcmc {
        model: Arc<dyn Model>,
        data: Arc<Dataset>,
        cfg: HmcConfig,
    },
}

#[derive(Clone)]
pub struct Target {
    family: Family,
    descriptor: TargetDescriptor,
}

impl fmt::Debug for Target {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let kind = match &self.family {
            Family::Nig(_) => "nig",
            Family::Gaussian(_) => "gaussian",
            Family::Mcmc { .. } => "mcmc",
        };
        f.debug_struct("Target")
            .field("family", &kind)
            .field("descriptor", &self.descriptor)
            .finish()
    }
}

impl Target {
    pub fn from_nig(params: NigParams, descriptor: TargetDescriptor) -> Result<Self> {
        params.validate()?;
        Ok(Self {
            family: Family::Nig(params),
            descriptor,
        })
    }

    pub fn from_gaussian(approx: GaussianApprox, descriptor: TargetDescriptor) -> Self {
        Self {
            family: Family::Gaussian(approx),
            descriptor,
        }
    }

    /// The posterior of `model` given `data`, sampled by HMC.
    pub fn from_posterior(
        model: Arc<dyn Model>,
        data: Dataset,
        cfg: HmcConfig,
        descriptor: TargetDescriptor,
    ) -> Result<Self> {
        model.check_data(&data)?;
        cfg.validate()?;
        Ok(Self {
            family: Family::Mcmc {
                model,
                data: Arc::new(data),
                cfg,
            },
            descriptor,
        })
    }

    pub fn descriptor(&self) -> &TargetDescriptor {
        &self.descriptor
    }

    pub fn nig(&self) -> Option<&NigParams> {
        match &self.family {
            Family::Nig(p) => Some(p),
            _ => None,
        }
    }

    pub fn gaussian(&self) -> Option<&GaussianApprox> {
        match &self.family {
            Family::Gaussian(g) => Some(g),
            _ => None,
        }
    }

    /// The dataset whose posterior defines an MCMC-backed target.
    pub fn defining_data(&self) -> Option<&Dataset> {
        match &self.family {
            Family::Mcmc { data, .. } => Some(data),
            _ => None,
        }
    }

    pub fn has_log_density(&self) -> bool {
        !matches!(self.family, Family::Mcmc { .. })
    }

    /// `count` draws; reproducible for a fixed seed.
    pub fn sample(&self, count: usize, seed: RngSeed) -> Result<SampleBatch> {
        match &self.family {
            Family::Nig(p) => sample_nig_exact(p, count, seed),
            Family::Gaussian(g) => g.sample(count, seed),
            Family::Mcmc { model, data, cfg } => {
                let cfg = HmcConfig {
                    samples: count,
                    seed,
                    ..cfg.clone()
                };
                sample_posterior(
                    model.as_ref(),
                    data,
                    &WeightVector::ones(data.n()),
                    &cfg,
                    None,
                )
            }
        }
    }

    /// Normalized `log π_A(θ)`.
    pub fn log_density(&self, theta: &[f64]) -> Result<f64> {
        match &self.family {
            Family::Nig(p) => {
                if theta.len() != p.dim() + 1 {
                    return Err(Error::invalid("dimension mismatch"));
                }
                p.log_density(theta, None)
            }
            Family::Gaussian(g) => g.log_density(theta),
            Family::Mcmc { .. } => Err(Error::Unsupported(
                "target is defined by MCMC on a modified dataset and has no log-density".into(),
            )),
        }
    }

    /// A Gaussian summary of the target for Laplace-based KL: the target
    /// itself when Gaussian, a Laplace fit of the defining posterior when
    /// MCMC-backed.
    pub fn laplace(&self, init: &[f64]) -> Result<GaussianApprox> {
        match &self.family {
            Family::Gaussian(g) => Ok(g.clone()),
            Family::Mcmc { model, data, .. } => laplace_approx(
                model.as_ref(),
                data,
                &WeightVector::ones(data.n()),
                &ParamVector::new(init.to_vec())?,
            ),
            Family::Nig(_) => Err(Error::Unsupported(
                "NIG targets are compared in closed form".into(),
            )),
        }
    }
}

fn check_coord(coord: usize, d: usize) -> Result<()> {
    if coord >= d {
        return Err(Error::invalid(format!(
            "coordinate {coord} out of range for dimension {d}"
        )));
    }
    Ok(())
}

/// NIG target with `μ_A[coord] = new_value`.
pub fn nig_mean_shift_target(base: &NigParams, coord: usize, new_value: f64) -> Result<Target> {
    check_coord(coord, base.dim())?;
    let mut p = base.clone();
    let original = p.mu[coord];
    p.mu[coord] = new_value;
    Target::from_nig(
        p,
        TargetDescriptor::NigMeanShift {
            coord,
            original,
            new_value,
        },
    )
}

/// NIG target whose β scale matrix is rebuilt from the Cholesky factor of
/// `Λ⁻¹` with `L[coord, coord]` multiplied by `rho`.
pub fn nig_variance_scale_target(base: &NigParams, coord: usize, rho: f64) -> Result<Target> {
    check_coord(coord, base.dim())?;
    if !(rho > 0.0 && rho.is_finite()) {
        return Err(Error::invalid("rho must be positive"));
    }
    let sigma = base.scale_matrix()?;
    let mut l: DMatrix<f64> = cholesky(&sigma, "Σₙ")?.l();
    l[(coord, coord)] *= rho;
    let sigma_a = &l * l.transpose();
    let mut p = base.clone();
    p.lambda = spd_inverse(&sigma_a, "Σ_A")?;
    Target::from_nig(p, TargetDescriptor::NigVarianceScale { coord, rho })
}

/// Posterior given a dataset simulated from `model` at `estimates`, using the
/// template's covariates.
pub fn synthetic_refit_target(
    model: Arc<dyn Model>,
    estimates: &ParamVector,
    template: &Dataset,
    cfg: &HmcConfig,
) -> Result<Target> {
    if estimates.dim() != model.dim() {
        return Err(Error::invalid("estimates do not match the model dimension"));
    }
    let seed = cfg.seed.derive(0x5eed_da7a);
    let mut rng = seed.rng();
    let y = (0..template.n())
        .map(|i| model.simulate_response(template, i, estimates.as_slice(), &mut rng))
        .collect::<Result<Vec<f64>>>()?;
    let synthetic = template.with_response(DVector::from_vec(y))?;
    let descriptor = TargetDescriptor::SyntheticRefit {
        estimates: estimates.as_slice().to_vec(),
        rows: template.n(),
        seed,
    };
    Target::from_posterior(model, synthetic, cfg.clone(), descriptor)
}

/// Posterior given the data with `yᵢ += shift` on masked rows.
pub fn response_shift_target(
    data: &Dataset,
    shift: f64,
    mask: &[bool],
    model: Arc<dyn Model>,
    cfg: &HmcConfig,
) -> Result<Target> {
    if mask.len() != data.n() {
        return Err(Error::invalid(format!(
            "mask has {} entries for {} rows",
            mask.len(),
            data.n()
        )));
    }
    model.check_data(data)?;
    let mut y = data.response()?.clone();
    for (yi, &m) in y.iter_mut().zip(mask) {
        if m {
            *yi += shift;
        }
    }
    let shifted = data.with_response(y)?;
    let descriptor = TargetDescriptor::ResponseShift {
        shift,
        shifted_rows: mask.iter().filter(|m| **m).count(),
    };
    Target::from_posterior(model, shifted, cfg.clone(), descriptor)
}

/// `N(μ_A, Σ_L)` with `μ_A[coord] = −μ_L[coord]`.
pub fn laplace_flip_target(approx: &GaussianApprox, coord: usize) -> Result<Target> {
    check_coord(coord, approx.dim())?;
    let mut g = approx.clone();
    let original = g.mean[coord];
    g.mean[coord] = -original;
    Ok(Target::from_gaussian(
        g,
        TargetDescriptor::LaplaceFlip {
            coord,
            original,
            flipped: -original,
        },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{
        gen_synthetic_regression, make_model, ModelKind, ModelSpec, NigLinReg,
        SyntheticRegressionSpec,
    };

    fn base() -> NigParams {
        NigParams::new(
            DVector::from_vec(vec![0.5, 0.3]),
            DMatrix::from_row_slice(2, 2, &[100.0, 5.0, 5.0, 80.0]),
            52.0,
            13.0,
        )
        .unwrap()
    }

    #[test]
    fn mean_shift_replaces_one_coordinate() {
        let t = nig_mean_shift_target(&base(), 1, 0.0).unwrap();
        assert_eq!(t.nig().unwrap().mu.as_slice(), &[0.5, 0.0]);
        assert!(nig_mean_shift_target(&base(), 2, 0.0).is_err());
        let same = nig_mean_shift_target(&base(), 1, 0.3).unwrap();
        assert_eq!(same.nig().unwrap(), &base());
    }

    #[test]
    fn mean_shift_sampler_moments() {
        let t = nig_mean_shift_target(&base(), 1, 0.0).unwrap();
        let s = 100_000;
        let batch = t.sample(s, RngSeed::new(2, 0)).unwrap();
        let p = t.nig().unwrap();
        let sd = p.beta_sd().unwrap();
        let m = batch.mean();
        for j in 0..2 {
            assert!((m[j] - p.mu[j]).abs() < 4.0 * sd[j] / (s as f64).sqrt());
        }
        assert_eq!(
            batch.thetas,
            t.sample(s, RngSeed::new(2, 0)).unwrap().thetas
        );
    }

    #[test]
    fn variance_scale_identity_and_spd() {
        let same = nig_variance_scale_target(&base(), 1, 1.0).unwrap();
        assert!((&same.nig().unwrap().lambda - &base().lambda).amax() < 1e-9);
        for rho in [0.1, 10.0] {
            let t = nig_variance_scale_target(&base(), 1, rho).unwrap();
            assert!(t.nig().unwrap().lambda.clone().cholesky().is_some());
            let ratio = t.nig().unwrap().beta_sd().unwrap()[1] / base().beta_sd().unwrap()[1];
            assert!(if rho > 1.0 { ratio > 5.0 } else { ratio < 0.2 }, "{ratio}");
        }
    }

    #[test]
    fn laplace_flip_negates_coordinate() {
        let g = GaussianApprox::new(DVector::from_vec(vec![1.0, 0.0]), DMatrix::identity(2, 2))
            .unwrap();
        let t = laplace_flip_target(&g, 0).unwrap();
        assert_eq!(t.gaussian().unwrap().mean[0], -1.0);
        let unchanged = laplace_flip_target(&g, 1).unwrap();
        assert_eq!(unchanged.gaussian().unwrap(), &g);
        assert!(t.log_density(&[-1.0, 0.0]).unwrap() > t.log_density(&[1.0, 0.0]).unwrap());
    }

    #[test]
    fn nig_log_density_matches_parameters() {
        let t = nig_mean_shift_target(&base(), 1, 0.0).unwrap();
        let direct = t
            .nig()
            .unwrap()
            .log_density(&[0.5, 0.0, -1.0], None)
            .unwrap();
        assert_eq!(t.log_density(&[0.5, 0.0, -1.0]).unwrap(), direct);
        assert!(t.log_density(&[0.5, 0.0]).is_err());
    }

    #[test]
    fn refit_with_zero_noise_is_on_the_plane() {
        let data = gen_synthetic_regression(&SyntheticRegressionSpec::default()).unwrap();
        let model = make_model(&ModelSpec::of_kind(ModelKind::NigLinreg), 1).unwrap();
        let est = ParamVector::new(vec![0.5, 0.0, -1000.0]).unwrap();
        let t = synthetic_refit_target(model, &est, &data, &HmcConfig::default()).unwrap();
        assert!(!t.has_log_density());
        assert!(matches!(
            t.log_density(&[0.0, 0.0, 0.0]),
            Err(Error::Unsupported(_))
        ));
        let synth = t.defining_data().unwrap();
        assert!(synth.y().unwrap().iter().all(|&y| y == 0.5));
        assert_eq!(synth.x(), data.x());
    }

    #[test]
    fn zero_shift_is_the_untainted_data() {
        let data = gen_synthetic_regression(&SyntheticRegressionSpec::default()).unwrap();
        let model: Arc<dyn Model> = Arc::new(
            NigLinReg::new(NigParams::isotropic(2, 0.01, 2.0, 2.0).unwrap(), true).unwrap(),
        );
        let mask = vec![true; data.n()];
        let t =
            response_shift_target(&data, 0.0, &mask, model.clone(), &HmcConfig::default()).unwrap();
        assert_eq!(t.defining_data().unwrap(), &data);
        assert!(
            response_shift_target(&data, 1.0, &mask[1..], model, &HmcConfig::default()).is_err()
        );
    }
}
