use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Integrality tolerance for checked whole-number weights.
pub const INTEGRALITY_TOL: f64 = 1e-9;

/// Attack weights: `w[i]` is the number of times row `i` is counted. Stored
/// as reals in both the relaxed and the integral phase; `integral` is a
/// checked flag.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightVector {
    w: Vec<f64>,
    integral: bool,
}

impl WeightVector {
    pub fn new(w: Vec<f64>) -> Result<Self> {
        if let Some(i) = w.iter().position(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::invalid(format!(
                "weight {i} is negative or non-finite: {}",
                w[i]
            )));
        }
        let integral = w.iter().all(|v| is_whole(*v));
        Ok(Self { w, integral })
    }

    /// Integral weights; fails if any entry is not a whole number.
    pub fn integral(w: Vec<f64>) -> Result<Self> {
        let out = Self::new(w)?;
        if !out.integral {
            return Err(Error::invalid("weights are not whole numbers"));
        }
        Ok(out)
    }

    pub fn from_counts(counts: &[u32]) -> Self {
        Self {
            w: counts.iter().map(|&c| f64::from(c)).collect(),
            integral: true,
        }
    }

    pub fn ones(n: usize) -> Self {
        Self {
            w: vec![1.0; n],
            integral: true,
        }
    }

    pub fn zeros(n: usize) -> Self {
        Self {
            w: vec![0.0; n],
            integral: true,
        }
    }

    pub fn len(&self) -> usize {
        self.w.len()
    }

    pub fn is_empty(&self) -> bool {
        self.w.is_empty()
    }

    pub fn is_integral(&self) -> bool {
        self.integral
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.w
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.w
    }

    pub fn total(&self) -> f64 {
        self.w.iter().sum()
    }

    /// `‖w − 1‖₁`
    pub fn manipulations(&self) -> f64 {
        self.w.iter().map(|v| (v - 1.0).abs()).sum()
    }

    pub fn check_len(&self, n: usize) -> Result<()> {
        if self.w.len() != n {
            return Err(Error::invalid(format!(
                "weight vector has length {}, dataset has {n} rows",
                self.w.len()
            )));
        }
        Ok(())
    }

    /// Copy with entries snapped to whole numbers when within tolerance.
    pub fn snapped(&self) -> Self {
        let w: Vec<f64> = self
            .w
            .iter()
            .map(|&v| if is_whole(v) { v.round() } else { v })
            .collect();
        let integral = w.iter().all(|v| v.fract() == 0.0);
        Self { w, integral }
    }
}

impl std::ops::Index<usize> for WeightVector {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.w[i]
    }
}

pub(crate) fn is_whole(v: f64) -> bool {
    (v - v.round()).abs() <= INTEGRALITY_TOL
}

/// Attack budget: at most `b_max` total manipulations (`‖w − 1‖₁ ≤ B`) and at
/// most `l_max` copies of any row (`‖w‖∞ ≤ L`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Budget {
    pub b_max: u32,
    pub l_max: u32,
}

impl Budget {
    pub fn new(b_max: u32, l_max: u32) -> Result<Self> {
        if l_max < 1 {
            return Err(Error::invalid("l_max must be at least 1"));
        }
        Ok(Self { b_max, l_max })
    }
}
