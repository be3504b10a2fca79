//! Posterior sampling backends and the Laplace approximation.

mod hmc;
mod laplace;
mod nig_exact;

use nalgebra::{DMatrix, DVector};
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

pub use hmc::{sample_density, sample_posterior, HmcConfig, WarmStart};
pub use laplace::{laplace_approx, laplace_approx_density};
pub use nig_exact::sample_nig_exact;

use crate::error::{Error, Result, SamplerDiagnostics};
use crate::linalg::{chol_logdet, cholesky, spd_inverse};
use crate::model::ParamVector;
use crate::rng::RngSeed;
use crate::special::LN_2PI;

/// Draws with one row per sample.
#[derive(Debug, Clone)]
pub struct SampleBatch {
    pub thetas: DMatrix<f64>,
    pub accept_rate: f64,
    pub diagnostics: Option<SamplerDiagnostics>,
    pub warm_start_state: Option<WarmStart>,
}

impl SampleBatch {
    /// iid draws (acceptance rate one, no sampler state).
    pub fn iid(thetas: DMatrix<f64>) -> Self {
        Self {
            thetas,
            accept_rate: 1.0,
            diagnostics: None,
            warm_start_state: None,
        }
    }

    pub fn len(&self) -> usize {
        self.thetas.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.thetas.nrows() == 0
    }

    pub fn dim(&self) -> usize {
        self.thetas.ncols()
    }

    pub fn mean(&self) -> DVector<f64> {
        crate::model::column_means(&self.thetas)
    }

    pub fn param_vectors(&self) -> Vec<ParamVector> {
        self.thetas
            .row_iter()
            .map(|r| {
                ParamVector::new(r.iter().copied().collect()).expect("sampler draws are finite")
            })
            .collect()
    }

    /// Concatenates rows; acceptance rates are averaged by draw count.
    pub fn concat(batches: &[SampleBatch]) -> Result<SampleBatch> {
        let first = batches
            .first()
            .ok_or_else(|| Error::invalid("no batches to merge"))?;
        let d = first.dim();
        if batches.iter().any(|b| b.dim() != d) {
            return Err(Error::invalid("batches have different dimensions"));
        }
        let total: usize = batches.iter().map(SampleBatch::len).sum();
        let mut thetas = DMatrix::zeros(total, d);
        let mut row = 0;
        let mut accept = 0.0;
        for b in batches {
            thetas.rows_mut(row, b.len()).copy_from(&b.thetas);
            row += b.len();
            accept += b.accept_rate * b.len() as f64;
        }
        Ok(SampleBatch::iid(thetas).with_accept_rate(accept / total.max(1) as f64))
    }

    fn with_accept_rate(mut self, a: f64) -> Self {
        self.accept_rate = a;
        self
    }
}

/// A multivariate normal `N(mean, cov)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaussianApprox {
    pub mean: DVector<f64>,
    pub cov: DMatrix<f64>,
}

impl GaussianApprox {
    pub fn new(mean: DVector<f64>, cov: DMatrix<f64>) -> Result<Self> {
        if cov.shape() != (mean.len(), mean.len()) {
            return Err(Error::invalid("covariance shape does not match the mean"));
        }
        if mean.iter().chain(cov.iter()).any(|v| !v.is_finite()) {
            return Err(Error::invalid(
                "Gaussian parameters have non-finite entries",
            ));
        }
        cholesky(&cov, "covariance")?;
        Ok(Self {
            mean,
            cov: crate::linalg::symmetrize(&cov),
        })
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn precision(&self) -> Result<DMatrix<f64>> {
        spd_inverse(&self.cov, "covariance")
    }

    pub fn log_density(&self, theta: &[f64]) -> Result<f64> {
        if theta.len() != self.dim() {
            return Err(Error::invalid("dimension mismatch"));
        }
        let chol = cholesky(&self.cov, "covariance")?;
        let diff = DVector::from_column_slice(theta) - &self.mean;
        let z = chol
            .l()
            .solve_lower_triangular(&diff)
            .ok_or_else(|| Error::Internal("triangular solve failed".into()))?;
        Ok(-0.5 * (self.dim() as f64 * LN_2PI + chol_logdet(&chol) + z.norm_squared()))
    }

    pub fn sample(&self, count: usize, seed: RngSeed) -> Result<SampleBatch> {
        let chol = cholesky(&self.cov, "covariance")?;
        let l = chol.l();
        let mut rng = seed.rng();
        let d = self.dim();
        let mut thetas = DMatrix::zeros(count, d);
        for s in 0..count {
            let z = DVector::from_fn(d, |_, _| StandardNormal.sample(&mut rng));
            let x = &self.mean + &l * z;
            thetas.row_mut(s).copy_from(&x.transpose());
        }
        Ok(SampleBatch::iid(thetas))
    }
}
