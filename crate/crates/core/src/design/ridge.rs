//! L2-regularized normal equations and their SPD solve.

use crate::error::{Error, Result};
use crate::numeric::{norm2, CompensatedSum};
use crate::signal::Signal;

use super::regressor::{Basis, RegressorMatrix, TrainingSet};

/// Relative residual every returned solution must meet.
pub const RESIDUAL_TOLERANCE: f64 = 1e-10;

/// Smallest admissible pivot ratio when solving without regularization.
const UNREGULARIZED_PIVOT_RATIO: f64 = 1e-13;
const MAX_REFINEMENTS: usize = 3;

thread_local! {
    static SOLVES: std::cell::Cell<usize> = const { std::cell::Cell::new(0) };
}

/// Number of calls to [`NormalEquations::solve`] on the
/// current thread.
pub fn solve_count() -> usize {
    SOLVES.with(|c| c.get())
}

/// `(lambda I + (1/RL) sum_r A_r^T A_r) w = (1/RL) sum_r A_r^T b_r`.
#[derive(Debug, Clone)]
pub struct NormalEquations {
    dim: usize,
    lambda: f64,
    /// Full symmetric matrix, row-major, regularization included.
    matrix: Vec<f64>,
    rhs: Vec<f64>,
}

/// Solution vector plus its normal-equation residual.
#[derive(Debug, Clone)]
pub struct RidgeSolution {
    pub params: Vec<f64>,
    pub residual_norm: f64,
    pub rhs_norm: f64,
}

impl RidgeSolution {
    /// `||A w - b|| / ||b||`, or 0 when `b = 0`.
    pub fn relative_residual(&self) -> f64 {
        if self.rhs_norm == 0.0 {
            0.0
        } else {
            self.residual_norm / self.rhs_norm
        }
    }
}

impl NormalEquations {
    /// Accumulates regressor/target pairs. Products are summed with
    /// compensation so long signals do not lose precision.
    pub fn assemble<'a>(
        problems: impl IntoIterator<Item = (&'a RegressorMatrix, &'a [f64])>,
        lambda: f64,
    ) -> Result<Self> {
        if !(lambda >= 0.0 && lambda.is_finite()) {
            return Err(Error::InvalidParameter(format!("lambda {lambda}")));
        }
        let mut dim = None;
        let mut gram: Vec<CompensatedSum> = Vec::new();
        let mut cross: Vec<CompensatedSum> = Vec::new();
        let mut rows = 0usize;
        for (a, b) in problems {
            let cols = a.cols();
            match dim {
                None => {
                    dim = Some(cols);
                    gram = vec![CompensatedSum::new(); cols * (cols + 1) / 2];
                    cross = vec![CompensatedSum::new(); cols];
                }
                Some(d) if d != cols => {
                    return Err(Error::LengthMismatch {
                        expected: d,
                        actual: cols,
                    })
                }
                Some(_) => {}
            }
            if b.len() != a.rows() {
                return Err(Error::LengthMismatch {
                    expected: a.rows(),
                    actual: b.len(),
                });
            }
            for (r, &target) in b.iter().enumerate() {
                let row = a.row(r);
                let mut k = 0;
                for i in 0..cols {
                    let ai = row[i];
                    if ai == 0.0 {
                        k += i + 1;
                        continue;
                    }
                    for &aj in &row[..=i] {
                        let p = ai * aj;
                        if p != 0.0 {
                            gram[k].add(p);
                        }
                        k += 1;
                    }
                    if target != 0.0 {
                        cross[i].add(ai * target);
                    }
                }
            }
            rows += a.rows();
        }
        let Some(dim) = dim else {
            return Err(Error::Empty("normal-equation problems"));
        };
        let scale = 1.0 / rows as f64;
        let mut matrix = vec![0.0; dim * dim];
        let mut k = 0;
        for i in 0..dim {
            for j in 0..=i {
                let g = gram[k].value() * scale;
                matrix[i * dim + j] = g;
                matrix[j * dim + i] = g;
                k += 1;
            }
            matrix[i * dim + i] += lambda;
        }
        let rhs = cross.iter().map(|c| c.value() * scale).collect();
        Ok(Self {
            dim,
            lambda,
            matrix,
            rhs,
        })
    }

    /// Normal equations of a training set in `basis`, with target
    /// `b_r = x_r - v_r`.
    pub fn from_training(training: &TrainingSet, basis: &Basis, lambda: f64) -> Result<Self> {
        let problems: Vec<(RegressorMatrix, Vec<f64>)> = training
            .pairs()
            .iter()
            .map(|(x, v)| (RegressorMatrix::from_basis(v, basis), difference(x, v)))
            .collect();
        Self::assemble(problems.iter().map(|(a, b)| (a, b.as_slice())), lambda)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn matrix(&self) -> &[f64] {
        &self.matrix
    }

    pub fn rhs(&self) -> &[f64] {
        &self.rhs
    }

    /// Lower Cholesky factor, row-major. Fails when the matrix is not
    /// numerically positive definite.
    pub fn cholesky(&self) -> Result<Vec<f64>> {
        let n = self.dim;
        let a = &self.matrix;
        let mut l = vec![0.0; n * n];
        let mut max_pivot = 0.0f64;
        let mut min_pivot = f64::INFINITY;
        for j in 0..n {
            let mut d = a[j * n + j];
            for k in 0..j {
                d -= l[j * n + k] * l[j * n + k];
            }
            if !(d > 0.0) || !d.is_finite() {
                return Err(Error::IllConditioned(format!("non-positive pivot at column {j}")));
            }
            max_pivot = max_pivot.max(d);
            min_pivot = min_pivot.min(d);
            let djj = d.sqrt();
            l[j * n + j] = djj;
            for i in j + 1..n {
                let mut s = a[i * n + j];
                for k in 0..j {
                    s -= l[i * n + k] * l[j * n + k];
                }
                l[i * n + j] = s / djj;
            }
        }
        if self.lambda == 0.0 && min_pivot < UNREGULARIZED_PIVOT_RATIO * max_pivot {
            return Err(Error::IllConditioned(format!(
                "pivot ratio {:e}",
                min_pivot / max_pivot
            )));
        }
        Ok(l)
    }

    pub fn is_positive_definite(&self) -> bool {
        self.cholesky().is_ok()
    }

    /// `A w - b`, accumulated with compensation.
    pub fn residual(&self, w: &[f64]) -> Vec<f64> {
        (0..self.dim)
            .map(|i| {
                let mut acc = CompensatedSum::new();
                for (a, x) in self.matrix[i * self.dim..(i + 1) * self.dim].iter().zip(w) {
                    acc.add(a * x);
                }
                acc.add(-self.rhs[i]);
                acc.value()
            })
            .collect()
    }

    /// Cholesky solve with iterative refinement until the relative
    /// residual is below [`RESIDUAL_TOLERANCE`].
    pub fn solve(&self) -> Result<RidgeSolution> {
        SOLVES.with(|c| c.set(c.get() + 1));
        let rhs_norm = norm2(&self.rhs);
        if rhs_norm == 0.0 {
            return Ok(RidgeSolution {
                params: vec![0.0; self.dim],
                residual_norm: 0.0,
                rhs_norm,
            });
        }
        let l = self.cholesky()?;
        let mut w = substitute(&l, self.dim, &self.rhs);
        let mut residual = self.residual(&w);
        let mut residual_norm = norm2(&residual);
        for _ in 0..MAX_REFINEMENTS {
            if residual_norm <= 0.01 * RESIDUAL_TOLERANCE * rhs_norm {
                break;
            }
            let correction = substitute(&l, self.dim, &residual);
            let candidate: Vec<f64> = w.iter().zip(&correction).map(|(a, c)| a - c).collect();
            let r = self.residual(&candidate);
            let n = norm2(&r);
            if n >= residual_norm {
                break;
            }
            w = candidate;
            residual = r;
            residual_norm = n;
        }
        let limit = RESIDUAL_TOLERANCE * rhs_norm;
        if residual_norm > limit {
            return Err(Error::ResidualTooLarge {
                residual: residual_norm,
                limit,
            });
        }
        Ok(RidgeSolution {
            params: w,
            residual_norm,
            rhs_norm,
        })
    }
}

/// Solves `L L^T x = b`.
fn substitute(l: &[f64], n: usize, b: &[f64]) -> Vec<f64> {
    let mut y = vec![0.0; n];
    for i in 0..n {
        let mut s = b[i];
        for k in 0..i {
            s -= l[i * n + k] * y[k];
        }
        y[i] = s / l[i * n + i];
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let mut s = y[i];
        for k in i + 1..n {
            s -= l[k * n + i] * x[k];
        }
        x[i] = s / l[i * n + i];
    }
    x
}

fn difference(x: &Signal, v: &Signal) -> Vec<f64> {
    x.samples().iter().zip(v.samples()).map(|(a, b)| a - b).collect()
}
