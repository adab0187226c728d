use crate::error::{Error, Result};
use crate::signal::Signal;

/// Polynomial post-corrector `y = d_0 + d_1 v + sum_{k=2}^{K} d_k v^k`.
#[derive(Debug, Clone, PartialEq)]
pub struct HammersteinLinearizer {
    d: Vec<f64>,
}

impl HammersteinLinearizer {
    /// `d` holds `d_0..=d_K`; `K >= 1`.
    pub fn new(d: Vec<f64>) -> Result<Self> {
        if d.len() < 2 {
            return Err(Error::InvalidParameter(format!(
                "Hammerstein order K must be >= 1, got {} coefficients",
                d.len()
            )));
        }
        if !d.iter().all(|v| v.is_finite()) {
            return Err(Error::InvalidParameter("non-finite coefficient".into()));
        }
        Ok(Self { d })
    }

    /// Polynomial order `K`.
    pub fn order(&self) -> usize {
        self.d.len() - 1
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.d
    }

    /// Horner evaluation.
    #[inline]
    pub fn apply_sample(&self, v: f64) -> f64 {
        self.d.iter().rev().fold(0.0, |acc, &dk| acc * v + dk)
    }

    pub fn apply(&self, v: &Signal) -> Signal {
        v.map(|s| self.apply_sample(s))
    }
}
