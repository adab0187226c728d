use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Nonlinear function applied to each biased branch input `v + b`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    /// 1-bit quantizer: 1 when `v + b >= 0`, else 0.
    OneBit,
    Relu,
    Modulus,
}

impl Activation {
    #[inline]
    pub fn eval(self, v: f64, b: f64) -> f64 {
        let s = v + b;
        match self {
            Activation::OneBit => {
                if s >= 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Relu => s.max(0.0),
            Activation::Modulus => s.abs(),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Activation::OneBit => "onebit",
            Activation::Relu => "relu",
            Activation::Modulus => "modulus",
        }
    }
}

impl fmt::Display for Activation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Activation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "onebit" | "one-bit" | "1bit" => Ok(Activation::OneBit),
            "relu" => Ok(Activation::Relu),
            "modulus" | "abs" => Ok(Activation::Modulus),
            other => Err(Error::parse(
                "activation",
                format!("unknown activation {other:?}"),
            )),
        }
    }
}

/// Bias schedule `b_m = -1 + 2m/(N+1)`, `m = 1..=N`, whose endpoints are
/// `±(N-1)/(N+1)`. It splits `[-1, 1]` into `N + 1` equal sub-regions.
pub fn biases_proposed(n: usize) -> Result<Vec<f64>> {
    if n == 0 {
        return Err(Error::InvalidParameter("branch count N must be >= 1".into()));
    }
    let denom = (n + 1) as f64;
    Ok((1..=n).map(|m| -1.0 + 2.0 * m as f64 / denom).collect())
}

/// Uniform biases `b_m = -b_max + 2(m-1) b_max / (N-1)`.
pub fn biases_uniform(n: usize, b_max: f64) -> Result<Vec<f64>> {
    if n < 2 {
        return Err(Error::InvalidParameter(format!(
            "uniform bias schedule needs N >= 2, got {n}"
        )));
    }
    if !(b_max > 0.0 && b_max.is_finite()) {
        return Err(Error::InvalidParameter(format!("b_max {b_max}")));
    }
    let span = (n - 1) as f64;
    let mut biases: Vec<f64> = (1..=n)
        .map(|m| -b_max + 2.0 * (m - 1) as f64 * b_max / span)
        .collect();
    // the last term can land one ulp off b_max
    biases[n - 1] = b_max;
    Ok(biases)
}
