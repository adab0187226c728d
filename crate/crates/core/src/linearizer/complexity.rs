use std::fmt;

use serde::{Deserialize, Serialize};

/// Linearizer realization, for operation counting.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Realization {
    /// Polynomial of order `K = N + 1`.
    Hammerstein,
    /// `N` activation branches plus the linear branch.
    Branch,
    /// Table look-up plus the linear branch.
    Lut,
}

/// Arithmetic per corrected output sample.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct OpCount {
    pub mults: usize,
    pub adds: usize,
}

impl fmt::Display for OpCount {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} mults, {} adds", self.mults, self.adds)
    }
}

/// Multiplications and additions per output sample with `n` nonlinear
/// branches (`n = K - 1` for the polynomial).
pub fn complexity_count(method: Realization, n: usize) -> OpCount {
    match method {
        Realization::Hammerstein => OpCount {
            mults: 2 * n + 1,
            adds: n + 1,
        },
        Realization::Branch => OpCount {
            mults: n + 1,
            adds: 2 * n + 1,
        },
        Realization::Lut => OpCount { mults: 1, adds: 1 },
    }
}
