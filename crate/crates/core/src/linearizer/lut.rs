//! Look-up-table realization of the one-bit branch linearizer.
//!
//! With one-bit activations and the proposed bias schedule the `N` branch
//! outputs can only take `N + 1` patterns (a run of zeros followed by a run
//! of ones), one per equal-width sub-region of `[-1, 1]`. The nonlinear part
//! therefore collapses to a table of `N + 1` entries addressed by the
//! sub-region index, leaving one multiplication (`c1 v`) and one addition.

use crate::error::{Error, Result};
use crate::signal::Signal;

use super::activation::{biases_proposed, Activation};
use super::branch::BranchLinearizer;

/// `y = c1 v + u[q(v)]` with `q(v)` the sub-region address of `v`.
#[derive(Debug, Clone, PartialEq)]
pub struct LutLinearizer {
    c1: f64,
    table: Vec<f64>,
    // bias values of the schedule; used only to resolve samples that sit
    // exactly on a sub-region boundary the same way the branch structure does
    thresholds: Vec<f64>,
}

impl LutLinearizer {
    /// Table realization of a one-bit branch linearizer (entries
    /// `u_0 = c0`, `u_q = c0 + w_{N-q+1} + ... + w_N`).
    pub fn from_branch(lin: &BranchLinearizer) -> Result<Self> {
        if lin.activation() != Activation::OneBit {
            return Err(Error::NotLutCompatible(format!(
                "activation is {}",
                lin.activation()
            )));
        }
        if !lin.has_proposed_biases() {
            return Err(Error::NotLutCompatible(
                "biases differ from b_m = -1 + 2m/(N+1)".into(),
            ));
        }
        let n = lin.n();
        let w = lin.weights();
        let table = (0..=n)
            .map(|q| w[n - q..].iter().fold(lin.c0(), |acc, &wm| acc + wm))
            .collect();
        Ok(Self {
            c1: lin.c1(),
            table,
            thresholds: lin.biases().to_vec(),
        })
    }

    /// Builds from a stored table of `N + 1` entries.
    pub fn new(c1: f64, table: Vec<f64>) -> Result<Self> {
        if table.len() < 2 {
            return Err(Error::InvalidParameter(format!(
                "table needs N + 1 >= 2 entries, got {}",
                table.len()
            )));
        }
        if !c1.is_finite() || !table.iter().all(|u| u.is_finite()) {
            return Err(Error::InvalidParameter("non-finite table entry".into()));
        }
        let thresholds = biases_proposed(table.len() - 1)?;
        Ok(Self {
            c1,
            table,
            thresholds,
        })
    }

    pub fn n(&self) -> usize {
        self.table.len() - 1
    }

    pub fn c1(&self) -> f64 {
        self.c1
    }

    pub fn table(&self) -> &[f64] {
        &self.table
    }

    pub fn region_count(&self) -> usize {
        self.table.len()
    }

    /// Memory-address width `ceil(log2(N + 1))`.
    pub fn address_bits(&self) -> u32 {
        address_bits(self.n())
    }

    pub fn address(&self, v: f64) -> Result<usize> {
        check_range(0, v)?;
        Ok(address_with(v, &self.thresholds))
    }

    pub fn apply_sample(&self, v: f64) -> Result<f64> {
        let q = self.address(v)?;
        Ok(self.c1 * v + self.table[q])
    }

    pub fn apply(&self, v: &Signal) -> Result<Signal> {
        let mut out = Vec::with_capacity(v.len());
        for (i, &s) in v.samples().iter().enumerate() {
            check_range(i, s)?;
            out.push(self.c1 * s + self.table[address_with(s, &self.thresholds)]);
        }
        Signal::new(out)
    }
}

/// Sub-region address of `v` for `N` branches: the number of one-bit
/// branches that fire, `|{m : v + b_m >= 0}|`, in `0..=N`.
pub fn lut_address(v: f64, n: usize) -> Result<usize> {
    check_range(0, v)?;
    let biases = biases_proposed(n)?;
    Ok(address_with(v, &biases))
}

/// `ceil(log2(N + 1))`.
pub fn address_bits(n: usize) -> u32 {
    (n + 1).next_power_of_two().trailing_zeros()
}

fn check_range(index: usize, v: f64) -> Result<()> {
    if v.abs() <= 1.0 {
        Ok(())
    } else {
        Err(Error::SampleOutOfRange { index, value: v })
    }
}

/// Direct mapping `floor((v + 1)(N + 1)/2)`, then settled against the
/// threshold comparisons so boundary ties fire exactly as `v + b_m >= 0`.
#[inline]
fn address_with(v: f64, biases: &[f64]) -> usize {
    let n = biases.len();
    let estimate = ((v + 1.0) * (n + 1) as f64 * 0.5).floor();
    let mut q = estimate.clamp(0.0, n as f64) as usize;
    // fired branches occupy 0-based indices n - q .. n
    while q < n && v + biases[n - q - 1] >= 0.0 {
        q += 1;
    }
    while q > 0 && !(v + biases[n - q] >= 0.0) {
        q -= 1;
    }
    q
}
