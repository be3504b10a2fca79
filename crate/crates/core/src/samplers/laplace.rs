use nalgebra::{DMatrix, DVector};

use super::GaussianApprox;
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::model::{LogDensity, Model, ParamVector};
use crate::weights::WeightVector;

const GRAD_TOL: f64 = 1e-8;
const MAX_ITERS: usize = 200;

/// Gaussian approximation at a local mode of the weighted log-joint.
pub fn laplace_approx(
    model: &dyn Model,
    data: &Dataset,
    w: &WeightVector,
    init: &ParamVector,
) -> Result<GaussianApprox> {
    model.check_data(data)?;
    w.check_len(data.n())?;
    let density = model.weighted_density(data, w.as_slice());
    laplace_approx_density(density.as_ref(), init.as_slice())
}

/// Damped Newton ascent to a mode, then `cov = (−∇² log p)⁻¹` there.
pub fn laplace_approx_density(density: &dyn LogDensity, init: &[f64]) -> Result<GaussianApprox> {
    let d = density.dim();
    if init.len() != d {
        return Err(Error::invalid(format!(
            "initial point has dimension {}, density {d}",
            init.len()
        )));
    }
    let mut x = init.to_vec();
    let mut grad = vec![0.0; d];
    let mut f = density.logp_grad(&x, &mut grad);
    if !f.is_finite() {
        return Err(Error::Domain(
            "log-density is not finite at the initial point".into(),
        ));
    }
    let mut converged = false;
    for _ in 0..MAX_ITERS {
        let g = DVector::from_column_slice(&grad);
        if g.norm() <= GRAD_TOL {
            converged = true;
            break;
        }
        let neg_h = -density.hessian(&x);
        let dir = newton_direction(&neg_h, &g);
        let mut t = 1.0;
        let mut accepted = false;
        let mut trial_grad = vec![0.0; d];
        for _ in 0..60 {
            let trial: Vec<f64> = x.iter().zip(dir.iter()).map(|(a, b)| a + t * b).collect();
            let ft = density.logp_grad(&trial, &mut trial_grad);
            if ft.is_finite() && ft >= f - 1e-12 * f.abs().max(1.0) {
                let moved = dir.norm() * t;
                x = trial;
                f = ft;
                grad.copy_from_slice(&trial_grad);
                accepted = true;
                if moved <= 1e-14 * (1.0 + DVector::from_column_slice(&x).norm()) {
                    // no further progress possible in floating point
                    converged = DVector::from_column_slice(&grad).norm() <= GRAD_TOL.sqrt();
                }
                break;
            }
            t *= 0.5;
        }
        if !accepted || converged {
            converged = converged || DVector::from_column_slice(&grad).norm() <= GRAD_TOL;
            break;
        }
    }
    if !converged {
        return Err(Error::OptimizationFailure {
            message: "damped Newton did not reach the gradient tolerance".into(),
            iterations: MAX_ITERS,
            last_iterate: x,
        });
    }
    let neg_h = crate::linalg::symmetrize(&(-density.hessian(&x)));
    let chol = neg_h
        .clone()
        .cholesky()
        .ok_or(Error::SaddlePoint { point: x.clone() })?;
    GaussianApprox::new(DVector::from_vec(x), chol.inverse())
}

/// Newton direction `(−H)⁻¹ g`, adding a multiple of the identity until the
/// system is positive definite.
fn newton_direction(neg_h: &DMatrix<f64>, g: &DVector<f64>) -> DVector<f64> {
    let d = g.len();
    let sym = crate::linalg::symmetrize(neg_h);
    let scale = sym
        .diagonal()
        .iter()
        .fold(0.0f64, |m, v| m.max(v.abs()))
        .max(1e-8);
    let mut damping = 0.0;
    for _ in 0..60 {
        let m = &sym + DMatrix::identity(d, d) * damping;
        if let Some(ch) = m.cholesky() {
            return ch.solve(g);
        }
        damping = if damping == 0.0 {
            1e-6 * scale
        } else {
            damping * 10.0
        };
    }
    g / scale
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Quadratic;

    impl LogDensity for Quadratic {
        fn dim(&self) -> usize {
            2
        }

        fn logp_grad(&self, t: &[f64], g: &mut [f64]) -> f64 {
            // precision [[2, 0.5], [0.5, 1]], mean (1, −2)
            let d = [t[0] - 1.0, t[1] + 2.0];
            let p = [2.0 * d[0] + 0.5 * d[1], 0.5 * d[0] + d[1]];
            g[0] = -p[0];
            g[1] = -p[1];
            -0.5 * (d[0] * p[0] + d[1] * p[1])
        }

        fn hessian(&self, _t: &[f64]) -> DMatrix<f64> {
            DMatrix::from_row_slice(2, 2, &[-2.0, -0.5, -0.5, -1.0])
        }
    }

    struct Saddle;

    impl LogDensity for Saddle {
        fn dim(&self) -> usize {
            2
        }

        fn logp_grad(&self, t: &[f64], g: &mut [f64]) -> f64 {
            g[0] = -t[0];
            g[1] = t[1];
            -0.5 * t[0] * t[0] + 0.5 * t[1] * t[1]
        }
    }

    #[test]
    fn gaussian_recovered_exactly() {
        let g = laplace_approx_density(&Quadratic, &[5.0, 5.0]).unwrap();
        assert!((g.mean[0] - 1.0).abs() < 1e-12 && (g.mean[1] + 2.0).abs() < 1e-12);
        let prec = DMatrix::from_row_slice(2, 2, &[2.0, 0.5, 0.5, 1.0]);
        let expect = prec.try_inverse().unwrap();
        assert!((g.cov - expect).amax() < 1e-12);
    }

    #[test]
    fn saddle_point_detected() {
        // started on the stationary point so Newton has nothing to do
        let err = laplace_approx_density(&Saddle, &[0.0, 0.0]).unwrap_err();
        assert!(matches!(err, Error::SaddlePoint { .. }));
    }
}
