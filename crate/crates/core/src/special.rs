//! Scalar special functions and densities.

use std::f64::consts::PI;

pub use statrs::function::gamma::{digamma, ln_gamma};

pub const LN_2PI: f64 = 1.837_877_066_409_345_5;

/// Trigamma `ψ'(x)` for `x > 0`: recurrence up to `x ≥ 10`, then the
/// asymptotic series.
pub fn trigamma(mut x: f64) -> f64 {
    if x <= 0.0 {
        return f64::NAN;
    }
    let mut acc = 0.0;
    while x < 10.0 {
        acc += 1.0 / (x * x);
        x += 1.0;
    }
    let x2 = 1.0 / (x * x);
    // 1/x + 1/(2x²) + 1/(6x³) − 1/(30x⁵) + 1/(42x⁷) − 1/(30x⁹) + 5/(66x¹¹)
    let series = 1.0 / x
        + x2 / 2.0
        + (x2 / x)
            * (1.0 / 6.0
                - x2 * (1.0 / 30.0 - x2 * (1.0 / 42.0 - x2 * (1.0 / 30.0 - x2 * 5.0 / 66.0))));
    acc + series
}

pub fn normal_logpdf(x: f64, mean: f64, sd: f64) -> f64 {
    let z = (x - mean) / sd;
    -0.5 * LN_2PI - sd.ln() - 0.5 * z * z
}

/// Location-scale Student-t log-density.
pub fn student_t_logpdf(x: f64, df: f64, loc: f64, scale: f64) -> f64 {
    let z = (x - loc) / scale;
    ln_gamma(0.5 * (df + 1.0))
        - ln_gamma(0.5 * df)
        - 0.5 * (df * PI).ln()
        - scale.ln()
        - 0.5 * (df + 1.0) * (z * z / df).ln_1p()
}

/// d/dx of [`student_t_logpdf`].
pub fn student_t_dlogpdf(x: f64, df: f64, loc: f64, scale: f64) -> f64 {
    let z = (x - loc) / scale;
    -(df + 1.0) * z / (scale * (df + z * z))
}

/// Half-Cauchy(0, scale) log-density evaluated on the log scale, i.e. the
/// density of `u = log t` including the Jacobian `t`.
pub fn half_cauchy_log_scale_logpdf(u: f64, scale: f64) -> f64 {
    let t = u.exp();
    let z = t / scale;
    std::f64::consts::LN_2 - PI.ln() - scale.ln() - (z * z).ln_1p() + u
}

/// d/du of [`half_cauchy_log_scale_logpdf`].
pub fn half_cauchy_log_scale_dlogpdf(u: f64, scale: f64) -> f64 {
    let z = u.exp() / scale;
    1.0 - 2.0 * z * z / (1.0 + z * z)
}

/// Numerically stable `log(1 + exp(x))`.
pub fn log1p_exp(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}
