use crate::error::{Error, Result};
use crate::linearizer::Activation;
use crate::signal::Signal;

/// Reference/distorted signal pairs used for fitting.
#[derive(Debug, Clone)]
pub struct TrainingSet {
    pairs: Vec<(Signal, Signal)>,
}

impl TrainingSet {
    /// Pairs of `(reference x_r, distorted v_r)`, all of one common length.
    pub fn new(pairs: Vec<(Signal, Signal)>) -> Result<Self> {
        let Some((first, _)) = pairs.first() else {
            return Err(Error::Empty("training set"));
        };
        let len = first.len();
        for (x, v) in &pairs {
            for s in [x, v] {
                if s.len() != len {
                    return Err(Error::LengthMismatch {
                        expected: len,
                        actual: s.len(),
                    });
                }
            }
        }
        Ok(Self { pairs })
    }

    pub fn single(x: Signal, v: Signal) -> Result<Self> {
        Self::new(vec![(x, v)])
    }

    pub fn pairs(&self) -> &[(Signal, Signal)] {
        &self.pairs
    }

    /// `R`.
    pub fn count(&self) -> usize {
        self.pairs.len()
    }

    /// `L`.
    pub fn signal_len(&self) -> usize {
        self.pairs[0].0.len()
    }

    /// Mean squared error `E` of the uncorrected signals against the references.
    pub fn uncorrected_mse(&self) -> f64 {
        mse(self.pairs.iter().map(|(x, v)| (x, v.clone())))
    }
}

pub(crate) fn mse<'a>(items: impl Iterator<Item = (&'a Signal, Signal)>) -> f64 {
    let mut acc = crate::numeric::CompensatedSum::new();
    let mut count = 0usize;
    for (x, y) in items {
        for (a, b) in x.samples().iter().zip(y.samples()) {
            let e = b - a;
            acc.add(e * e);
        }
        count += x.len();
    }
    acc.value() / count as f64
}

/// Column set of a regressor matrix. The last two columns are always `v`
/// and the constant one.
#[derive(Debug, Clone)]
pub enum Basis {
    /// `f(v + b_m)` for each bias.
    Branch {
        biases: Vec<f64>,
        activation: Activation,
    },
    /// `v^2, ..., v^order`.
    Polynomial { order: usize },
}

impl Basis {
    /// Nonlinear column count.
    pub fn nonlinear_len(&self) -> usize {
        match self {
            Basis::Branch { biases, .. } => biases.len(),
            Basis::Polynomial { order } => order.saturating_sub(1),
        }
    }
}

/// Dense row-major `L x C` regressor matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct RegressorMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl RegressorMatrix {
    pub fn from_basis(v: &Signal, basis: &Basis) -> Self {
        let cols = basis.nonlinear_len() + 2;
        let mut data = Vec::with_capacity(v.len() * cols);
        for &s in v.samples() {
            match basis {
                Basis::Branch { biases, activation } => {
                    data.extend(biases.iter().map(|&b| activation.eval(s, b)));
                }
                Basis::Polynomial { order } => {
                    let mut p = s;
                    for _ in 2..=*order {
                        p *= s;
                        data.push(p);
                    }
                }
            }
            data.push(s);
            data.push(1.0);
        }
        Self {
            rows: v.len(),
            cols,
            data,
        }
    }

    /// Builds a matrix from explicit columns of equal length.
    pub fn from_columns(columns: &[Vec<f64>]) -> Result<Self> {
        let Some(first) = columns.first() else {
            return Err(Error::Empty("regressor columns"));
        };
        let rows = first.len();
        if rows == 0 {
            return Err(Error::Empty("regressor rows"));
        }
        if let Some(c) = columns.iter().find(|c| c.len() != rows) {
            return Err(Error::LengthMismatch {
                expected: rows,
                actual: c.len(),
            });
        }
        let cols = columns.len();
        let data = (0..rows)
            .flat_map(|r| columns.iter().map(move |c| c[r]))
            .collect();
        Ok(Self { rows, cols, data })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    pub fn column(&self, c: usize) -> Vec<f64> {
        (0..self.rows).map(|r| self.get(r, c)).collect()
    }

    /// `A w`.
    pub fn mul_vec(&self, w: &[f64]) -> Vec<f64> {
        (0..self.rows)
            .map(|r| self.row(r).iter().zip(w).map(|(a, b)| a * b).sum())
            .collect()
    }
}

/// Regressor for `v_r` with columns `f(v + b_1) .. f(v + b_N), v, 1`.
pub fn build_regressor(v: &Signal, biases: &[f64], activation: Activation) -> RegressorMatrix {
    RegressorMatrix::from_basis(
        v,
        &Basis::Branch {
            biases: biases.to_vec(),
            activation,
        },
    )
}
