//! The model abstraction: per-row log-likelihoods `f_X(θ)`, a log-prior, and
//! gradients for gradient-based sampling of the weighted posterior
//!
//! ```text
//! log π_w(θ | X) = Σᵢ wᵢ log π(Xᵢ | θ) + log π(θ) − log Z(w)
//! ```

use std::fmt::Debug;

use nalgebra::{DMatrix, DVector};
use rand::RngCore;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::weights::WeightVector;

/// A parameter vector on the model's unconstrained scale.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ParamVector(Vec<f64>);

impl ParamVector {
    pub fn new(theta: Vec<f64>) -> Result<Self> {
        if theta.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("parameter vector has non-finite entries"));
        }
        Ok(Self(theta))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }
}

impl From<ParamVector> for Vec<f64> {
    fn from(p: ParamVector) -> Self {
        p.0
    }
}

/// A differentiable (unnormalized) log-density over `ℝᵈ`.
pub trait LogDensity: Sync {
    fn dim(&self) -> usize;

    /// Returns `log p(θ)` and overwrites `grad` with its gradient.
    fn logp_grad(&self, theta: &[f64], grad: &mut [f64]) -> f64;

    fn logp(&self, theta: &[f64]) -> f64 {
        let mut g = vec![0.0; self.dim()];
        self.logp_grad(theta, &mut g)
    }

    /// Hessian of `log p`; central differences of the gradient unless
    /// overridden.
    fn hessian(&self, theta: &[f64]) -> DMatrix<f64> {
        fd_hessian(self, theta)
    }
}

pub(crate) fn fd_hessian<D: LogDensity + ?Sized>(density: &D, theta: &[f64]) -> DMatrix<f64> {
    let d = density.dim();
    let mut h = DMatrix::zeros(d, d);
    let mut x = theta.to_vec();
    let mut gp = vec![0.0; d];
    let mut gm = vec![0.0; d];
    for j in 0..d {
        let step = 1e-5 * theta[j].abs().max(1.0);
        x[j] = theta[j] + step;
        density.logp_grad(&x, &mut gp);
        x[j] = theta[j] - step;
        density.logp_grad(&x, &mut gm);
        x[j] = theta[j];
        for i in 0..d {
            h[(i, j)] = (gp[i] - gm[i]) / (2.0 * step);
        }
    }
    (&h + h.transpose()) * 0.5
}

/// A Bayesian model over a dataset. Parameters live on an unconstrained
/// scale; `logprior` includes the Jacobian of any transform.
pub trait Model: Send + Sync + Debug {
    fn name(&self) -> &'static str;

    fn dim(&self) -> usize;

    fn param_names(&self) -> Vec<String>;

    /// Checks that the dataset has the shape this model expects.
    fn check_data(&self, data: &Dataset) -> Result<()>;

    /// `log π(Xᵢ | θ)`
    fn loglik_row(&self, data: &Dataset, i: usize, theta: &[f64]) -> f64;

    /// Adds `scale · ∇θ log π(Xᵢ | θ)` to `grad` and returns the log-likelihood.
    fn loglik_row_grad(
        &self,
        data: &Dataset,
        i: usize,
        theta: &[f64],
        scale: f64,
        grad: &mut [f64],
    ) -> f64;

    fn logprior(&self, theta: &[f64]) -> f64;

    /// Overwrites `grad` with `∇ log π(θ)` and returns the log-prior.
    fn logprior_grad(&self, theta: &[f64], grad: &mut [f64]) -> f64;

    /// Fills `out[i] = log π(Xᵢ | θ)` for every row.
    fn loglik_rows(&self, data: &Dataset, theta: &[f64], out: &mut [f64]) {
        for (i, o) in out.iter_mut().enumerate() {
            *o = self.loglik_row(data, i, theta);
        }
    }

    /// The weighted log-joint `θ ↦ Σ wᵢ log π(Xᵢ|θ) + log π(θ)` as a density
    /// for samplers and optimizers.
    fn weighted_density<'a>(&'a self, data: &'a Dataset, w: &'a [f64]) -> Box<dyn LogDensity + 'a> {
        Box::new(RowwiseDensity {
            model: self,
            data,
            w,
        })
    }

    /// A reasonable starting point for samplers and mode finders.
    fn initial_point(&self, data: &Dataset) -> Vec<f64>;

    /// The conjugate NIG model behind this one, if any, for closed-form paths.
    fn as_nig(&self) -> Option<&crate::models::NigLinReg> {
        None
    }

    /// Draws a response for row `i` from the likelihood at `θ`.
    fn simulate_response(
        &self,
        _data: &Dataset,
        _i: usize,
        _theta: &[f64],
        _rng: &mut dyn RngCore,
    ) -> Result<f64> {
        Err(Error::Unsupported(format!(
            "{} cannot simulate responses",
            self.name()
        )))
    }
}

struct RowwiseDensity<'a, M: Model + ?Sized> {
    model: &'a M,
    data: &'a Dataset,
    w: &'a [f64],
}

impl<M: Model + ?Sized> LogDensity for RowwiseDensity<'_, M> {
    fn dim(&self) -> usize {
        self.model.dim()
    }

    fn logp_grad(&self, theta: &[f64], grad: &mut [f64]) -> f64 {
        let mut lp = self.model.logprior_grad(theta, grad);
        for (i, &wi) in self.w.iter().enumerate() {
            if wi != 0.0 {
                lp += wi * self.model.loglik_row_grad(self.data, i, theta, wi, grad);
            }
        }
        lp
    }

    fn logp(&self, theta: &[f64]) -> f64 {
        let mut lp = self.model.logprior(theta);
        for (i, &wi) in self.w.iter().enumerate() {
            if wi != 0.0 {
                lp += wi * self.model.loglik_row(self.data, i, theta);
            }
        }
        lp
    }
}

fn check_theta(model: &dyn Model, theta: &[f64]) -> Result<()> {
    if theta.len() != model.dim() {
        return Err(Error::invalid(format!(
            "parameter dimension {} does not match model dimension {}",
            theta.len(),
            model.dim()
        )));
    }
    Ok(())
}

/// Log-likelihood matrix with one row per parameter sample and one column per
/// data row: entry `(j, i) = log π(Xᵢ | θⱼ)`.
pub fn loglik_matrix(
    model: &dyn Model,
    data: &Dataset,
    thetas: &[ParamVector],
) -> Result<DMatrix<f64>> {
    for t in thetas {
        check_theta(model, t.as_slice())?;
    }
    let rows: Vec<Vec<f64>> = thetas.iter().map(|t| t.as_slice().to_vec()).collect();
    loglik_matrix_from(model, data, &rows)
}

/// As [`loglik_matrix`] with samples given as the rows of a matrix.
pub fn loglik_matrix_rows(
    model: &dyn Model,
    data: &Dataset,
    thetas: &DMatrix<f64>,
) -> Result<DMatrix<f64>> {
    if thetas.ncols() != model.dim() {
        return Err(Error::invalid(format!(
            "sample dimension {} does not match model dimension {}",
            thetas.ncols(),
            model.dim()
        )));
    }
    let rows: Vec<Vec<f64>> = thetas
        .row_iter()
        .map(|r| r.iter().copied().collect())
        .collect();
    loglik_matrix_from(model, data, &rows)
}

fn loglik_matrix_from(
    model: &dyn Model,
    data: &Dataset,
    rows: &[Vec<f64>],
) -> Result<DMatrix<f64>> {
    let n = data.n();
    let evaluated: Vec<Vec<f64>> = rows
        .par_iter()
        .map(|theta| {
            let mut out = vec![0.0; n];
            model.loglik_rows(data, theta, &mut out);
            out
        })
        .collect();
    let m = DMatrix::from_fn(rows.len(), n, |j, i| evaluated[j][i]);
    if let Some(pos) = m.iter().position(|v| !v.is_finite()) {
        let (j, i) = (pos % rows.len().max(1), pos / rows.len().max(1));
        return Err(Error::Domain(format!(
            "non-finite log-likelihood for sample {j}, row {i}"
        )));
    }
    Ok(m)
}

/// Unnormalized weighted log-posterior `Σᵢ wᵢ log π(Xᵢ|θ) + log π(θ)`.
pub fn weighted_logjoint(
    model: &dyn Model,
    data: &Dataset,
    w: &WeightVector,
    theta: &ParamVector,
) -> Result<f64> {
    w.check_len(data.n())?;
    check_theta(model, theta.as_slice())?;
    let lp = model.logprior(theta.as_slice());
    if !lp.is_finite() {
        return Err(Error::Domain("log-prior is not finite at θ".into()));
    }
    let ll: f64 = w
        .as_slice()
        .iter()
        .enumerate()
        .filter(|(_, &wi)| wi != 0.0)
        .map(|(i, &wi)| wi * model.loglik_row(data, i, theta.as_slice()))
        .sum();
    Ok(ll + lp)
}

/// Column means of a sample-by-row matrix.
pub(crate) fn column_means(m: &DMatrix<f64>) -> DVector<f64> {
    let s = m.nrows() as f64;
    DVector::from_iterator(m.ncols(), m.column_iter().map(|c| c.sum() / s))
}
