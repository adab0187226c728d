use crate::error::{Error, Result};
use crate::signal::Signal;

use super::activation::{biases_proposed, Activation};

/// `y = c1 v + (c0 + sum_m w_m f_m(v + b_m))`.
///
/// The nonlinear part is accumulated starting from `c0` in ascending branch
/// order, skipping branches whose activation is zero. [`super::LutLinearizer`]
/// builds its table with the same accumulation order, which is what makes
/// the two realizations agree bit for bit.
#[derive(Debug, Clone, PartialEq)]
pub struct BranchLinearizer {
    c0: f64,
    c1: f64,
    biases: Vec<f64>,
    weights: Vec<f64>,
    activation: Activation,
}

impl BranchLinearizer {
    pub fn new(
        c0: f64,
        c1: f64,
        biases: Vec<f64>,
        weights: Vec<f64>,
        activation: Activation,
    ) -> Result<Self> {
        if biases.is_empty() {
            return Err(Error::InvalidParameter("branch linearizer needs N >= 1".into()));
        }
        if weights.len() != biases.len() {
            return Err(Error::LengthMismatch {
                expected: biases.len(),
                actual: weights.len(),
            });
        }
        if !biases.windows(2).all(|w| w[0] < w[1]) {
            return Err(Error::InvalidParameter(
                "biases must be strictly increasing".into(),
            ));
        }
        let finite = [c0, c1]
            .iter()
            .chain(&biases)
            .chain(&weights)
            .all(|v| v.is_finite());
        if !finite {
            return Err(Error::InvalidParameter("non-finite coefficient".into()));
        }
        Ok(Self {
            c0,
            c1,
            biases,
            weights,
            activation,
        })
    }

    /// One-bit linearizer on the proposed bias schedule.
    pub fn one_bit(c0: f64, c1: f64, weights: Vec<f64>) -> Result<Self> {
        let biases = biases_proposed(weights.len())?;
        Self::new(c0, c1, biases, weights, Activation::OneBit)
    }

    /// Pass-through linearizer (`y = v`) with `n` zero-weight branches.
    pub fn identity(n: usize, activation: Activation, biases: Vec<f64>) -> Result<Self> {
        Self::new(0.0, 1.0, biases, vec![0.0; n], activation)
    }

    pub fn n(&self) -> usize {
        self.weights.len()
    }

    pub fn c0(&self) -> f64 {
        self.c0
    }

    pub fn c1(&self) -> f64 {
        self.c1
    }

    pub fn biases(&self) -> &[f64] {
        &self.biases
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn activation(&self) -> Activation {
        self.activation
    }

    /// True when the bias schedule is exactly the proposed one.
    pub fn has_proposed_biases(&self) -> bool {
        biases_proposed(self.n()).is_ok_and(|b| b == self.biases)
    }

    /// Branch outputs `f_m(v + b_m)` for `m = 1..=N`.
    pub fn pattern(&self, v: f64) -> Vec<f64> {
        self.biases.iter().map(|&b| self.activation.eval(v, b)).collect()
    }

    /// `c0 + sum_m w_m f_m(v + b_m)`.
    #[inline]
    pub fn correction(&self, v: f64) -> f64 {
        let mut acc = self.c0;
        for (&b, &w) in self.biases.iter().zip(&self.weights) {
            let f = self.activation.eval(v, b);
            if f != 0.0 {
                acc += w * f;
            }
        }
        acc
    }

    #[inline]
    pub fn apply_sample(&self, v: f64) -> f64 {
        self.c1 * v + self.correction(v)
    }

    pub fn apply(&self, v: &Signal) -> Signal {
        v.map(|s| self.apply_sample(s))
    }

    /// Coefficients in quantization order `(c0, c1, w_1..w_N)`.
    pub fn coefficients(&self) -> Vec<f64> {
        let mut out = vec![self.c0, self.c1];
        out.extend_from_slice(&self.weights);
        out
    }

    /// Rebuilds from `(c0, c1, w_1..w_N)` keeping biases and activation.
    pub fn with_coefficients(&self, coeffs: &[f64]) -> Result<Self> {
        if coeffs.len() != self.n() + 2 {
            return Err(Error::LengthMismatch {
                expected: self.n() + 2,
                actual: coeffs.len(),
            });
        }
        Self::new(
            coeffs[0],
            coeffs[1],
            self.biases.clone(),
            coeffs[2..].to_vec(),
            self.activation,
        )
    }
}
