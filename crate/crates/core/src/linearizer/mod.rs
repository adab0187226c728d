//! The three memoryless linearizer structures and their realizations.

mod activation;
mod branch;
mod complexity;
mod hammerstein;
mod lut;
mod persist;
mod quantize;

pub use activation::{biases_proposed, biases_uniform, Activation};
pub use branch::BranchLinearizer;
pub use complexity::{complexity_count, OpCount, Realization};
pub use hammerstein::HammersteinLinearizer;
pub use lut::{address_bits, lut_address, LutLinearizer};
pub use persist::{format_number, load_linearizer, parse_linearizer, save_linearizer, serialize_linearizer};
pub use quantize::{coefficient_step, quantize_coeffs};

use crate::error::Result;
use crate::signal::Signal;

/// Any of the supported linearizers.
#[derive(Debug, Clone, PartialEq)]
pub enum Linearizer {
    Hammerstein(HammersteinLinearizer),
    Branch(BranchLinearizer),
    Lut(LutLinearizer),
}

impl Linearizer {
    /// Applies the correction. Only the table realization can fail (on
    /// samples outside `[-1, 1]`).
    pub fn apply(&self, v: &Signal) -> Result<Signal> {
        match self {
            Linearizer::Hammerstein(h) => Ok(h.apply(v)),
            Linearizer::Branch(b) => Ok(b.apply(v)),
            Linearizer::Lut(l) => l.apply(v),
        }
    }

    /// Number of nonlinear branches (`K - 1` for the polynomial).
    pub fn branch_count(&self) -> usize {
        match self {
            Linearizer::Hammerstein(h) => h.order() - 1,
            Linearizer::Branch(b) => b.n(),
            Linearizer::Lut(l) => l.n(),
        }
    }

    pub fn realization(&self) -> Realization {
        match self {
            Linearizer::Hammerstein(_) => Realization::Hammerstein,
            Linearizer::Branch(_) => Realization::Branch,
            Linearizer::Lut(_) => Realization::Lut,
        }
    }

    pub fn op_count(&self) -> OpCount {
        complexity_count(self.realization(), self.branch_count())
    }

    /// Short human-readable identification, e.g. `branch-relu N=8`.
    pub fn describe(&self) -> String {
        match self {
            Linearizer::Hammerstein(h) => format!("hammerstein K={}", h.order()),
            Linearizer::Branch(b) => format!("branch-{} N={}", b.activation(), b.n()),
            Linearizer::Lut(l) => format!("lut N={}", l.n()),
        }
    }
}

impl From<HammersteinLinearizer> for Linearizer {
    fn from(h: HammersteinLinearizer) -> Self {
        Linearizer::Hammerstein(h)
    }
}

impl From<BranchLinearizer> for Linearizer {
    fn from(b: BranchLinearizer) -> Self {
        Linearizer::Branch(b)
    }
}

impl From<LutLinearizer> for Linearizer {
    fn from(l: LutLinearizer) -> Self {
        Linearizer::Lut(l)
    }
}
