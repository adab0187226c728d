//! Least-squares design of all three linearizers.
//!
//! Every design fits the correction `y - v` rather than `y` itself: the
//! linear branch is parameterized as `v + dc1 v`, so with distortion-free
//! training data all unknowns are zero. The parameter vector is ordered
//! `(w_1..w_N, dc1, c0)`, matching the regressor column order.

mod regressor;
mod ridge;

use std::fmt::Write as _;

pub use regressor::{build_regressor, Basis, RegressorMatrix, TrainingSet};
pub use ridge::{solve_count, NormalEquations, RidgeSolution, RESIDUAL_TOLERANCE};

use crate::error::{Error, Result};
use crate::linearizer::{
    biases_proposed, biases_uniform, quantize_coeffs, Activation, BranchLinearizer, HammersteinLinearizer,
};

pub const DEFAULT_LAMBDA: f64 = 2e-4;
pub const DEFAULT_COEFF_BITS: u32 = 12;

/// `{0.1, 0.2, ..., 0.9}`.
pub fn default_bmax_grid() -> Vec<f64> {
    (1..=9).map(|i| i as f64 / 10.0).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct DesignConfig {
    pub lambda: f64,
    pub n: usize,
    pub activation: Activation,
    /// Candidate `b_max` values; only used by the ReLU/modulus sweep.
    pub bmax_grid: Vec<f64>,
    /// Coefficient word length; `None` leaves the solution unquantized.
    pub coeff_bits: Option<u32>,
}

impl DesignConfig {
    pub fn proposed(n: usize) -> Self {
        Self {
            lambda: DEFAULT_LAMBDA,
            n,
            activation: Activation::OneBit,
            bmax_grid: Vec::new(),
            coeff_bits: Some(DEFAULT_COEFF_BITS),
        }
    }

    pub fn baseline(n: usize, activation: Activation) -> Self {
        Self {
            activation,
            bmax_grid: default_bmax_grid(),
            ..Self::proposed(n)
        }
    }
}

/// What a design did, for reporting.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignReport {
    pub method: String,
    pub lambda: f64,
    /// Branch count (`K - 1` for the polynomial).
    pub n: usize,
    pub activation: Option<Activation>,
    pub coeff_bits: Option<u32>,
    /// Selected `b_max` when a sweep was run.
    pub bmax: Option<f64>,
    /// `(b_max, unquantized training MSE)` for every sweep candidate.
    pub sweep: Vec<(f64, f64)>,
    pub mse_before: f64,
    /// Training MSE of the unquantized solution.
    pub mse_unquantized: f64,
    /// Training MSE of the returned (quantized) linearizer.
    pub mse_after: f64,
    /// Relative normal-equation residual of the selected solution.
    pub residual: f64,
    /// Number of normal-equation solves performed.
    pub solves: usize,
}

impl DesignReport {
    /// Key-value text rendering.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "method = {}", self.method);
        let _ = writeln!(out, "lambda = {:e}", self.lambda);
        let _ = writeln!(out, "N = {}", self.n);
        if let Some(a) = self.activation {
            let _ = writeln!(out, "activation = {a}");
        }
        match self.coeff_bits {
            Some(b) => {
                let _ = writeln!(out, "coeff_bits = {b}");
            }
            None => {
                let _ = writeln!(out, "coeff_bits = none");
            }
        }
        if let Some(b) = self.bmax {
            let _ = writeln!(out, "bmax = {b}");
        }
        for (b, e) in &self.sweep {
            let _ = writeln!(out, "sweep bmax={b} mse={e:.6e}");
        }
        let _ = writeln!(out, "mse_before = {:.6e}", self.mse_before);
        let _ = writeln!(out, "mse_unquantized = {:.6e}", self.mse_unquantized);
        let _ = writeln!(out, "mse_after = {:.6e}", self.mse_after);
        let _ = writeln!(out, "residual = {:.3e}", self.residual);
        let _ = writeln!(out, "solves = {}", self.solves);
        out
    }
}

/// A designed linearizer and its report.
#[derive(Debug, Clone)]
pub struct Design<L> {
    pub linearizer: L,
    pub report: DesignReport,
}

/// Solves the regularized normal equations for a branch structure with the
/// given biases. Returns `(w_1..w_N, dc1, c0)`.
pub fn solve_ridge(training: &TrainingSet, config: &DesignConfig, biases: &[f64]) -> Result<RidgeSolution> {
    let basis = Basis::Branch {
        biases: biases.to_vec(),
        activation: config.activation,
    };
    NormalEquations::from_training(training, &basis, config.lambda)?.solve()
}

fn branch_mse(training: &TrainingSet, lin: &BranchLinearizer) -> f64 {
    regressor::mse(training.pairs().iter().map(|(x, v)| (x, lin.apply(v))))
}

fn hammerstein_mse(training: &TrainingSet, lin: &HammersteinLinearizer) -> f64 {
    regressor::mse(training.pairs().iter().map(|(x, v)| (x, lin.apply(v))))
}

struct BranchFit {
    linearizer: BranchLinearizer,
    mse: f64,
    residual: f64,
}

fn fit_branch(training: &TrainingSet, config: &DesignConfig, biases: Vec<f64>) -> Result<BranchFit> {
    let sol = solve_ridge(training, config, &biases)?;
    let n = biases.len();
    let p = &sol.params;
    let linearizer = BranchLinearizer::new(p[n + 1], 1.0 + p[n], biases, p[..n].to_vec(), config.activation)?;
    Ok(BranchFit {
        mse: branch_mse(training, &linearizer),
        residual: sol.relative_residual(),
        linearizer,
    })
}

fn quantize_branch(lin: &BranchLinearizer, bits: Option<u32>) -> Result<BranchLinearizer> {
    match bits {
        Some(bits) => lin.with_coefficients(&quantize_coeffs(&lin.coefficients(), bits)?),
        None => Ok(lin.clone()),
    }
}

fn finish_branch(
    training: &TrainingSet,
    config: &DesignConfig,
    method: &str,
    fit: BranchFit,
    bmax: Option<f64>,
    sweep: Vec<(f64, f64)>,
    solves: usize,
) -> Result<Design<BranchLinearizer>> {
    let linearizer = quantize_branch(&fit.linearizer, config.coeff_bits)?;
    let report = DesignReport {
        method: method.to_string(),
        lambda: config.lambda,
        n: linearizer.n(),
        activation: Some(config.activation),
        coeff_bits: config.coeff_bits,
        bmax,
        sweep,
        mse_before: training.uncorrected_mse(),
        mse_unquantized: fit.mse,
        mse_after: branch_mse(training, &linearizer),
        residual: fit.residual,
        solves,
    };
    Ok(Design { linearizer, report })
}

/// Single design of a branch linearizer with fixed biases.
pub fn design_branch(
    training: &TrainingSet,
    config: &DesignConfig,
    biases: Vec<f64>,
) -> Result<Design<BranchLinearizer>> {
    let method = format!("branch-{}", config.activation);
    let fit = fit_branch(training, config, biases)?;
    finish_branch(training, config, &method, fit, None, Vec::new(), 1)
}

/// One-bit linearizer on the fixed bias schedule: a single solve.
pub fn design_proposed(training: &TrainingSet, config: &DesignConfig) -> Result<Design<BranchLinearizer>> {
    if config.activation != Activation::OneBit {
        return Err(Error::InvalidParameter(format!(
            "proposed design needs one-bit activation, got {}",
            config.activation
        )));
    }
    let fit = fit_branch(training, config, biases_proposed(config.n)?)?;
    finish_branch(training, config, "proposed-onebit", fit, None, Vec::new(), 1)
}

/// ReLU/modulus linearizer with uniform biases; one design per `b_max` in
/// the grid, keeping the lowest unquantized training MSE.
pub fn design_baseline_branch(
    training: &TrainingSet,
    config: &DesignConfig,
) -> Result<Design<BranchLinearizer>> {
    if config.activation == Activation::OneBit {
        return Err(Error::InvalidParameter(
            "baseline sweep expects relu or modulus activation".into(),
        ));
    }
    if config.bmax_grid.is_empty() {
        return Err(Error::Empty("b_max grid"));
    }
    let mut best: Option<(f64, BranchFit)> = None;
    let mut sweep = Vec::with_capacity(config.bmax_grid.len());
    for &bmax in &config.bmax_grid {
        let fit = fit_branch(training, config, biases_uniform(config.n, bmax)?)?;
        sweep.push((bmax, fit.mse));
        if best.as_ref().is_none_or(|(_, b)| fit.mse < b.mse) {
            best = Some((bmax, fit));
        }
    }
    let (bmax, fit) = best.expect("non-empty grid");
    let method = format!("branch-{}", config.activation);
    let solves = sweep.len();
    finish_branch(training, config, &method, fit, Some(bmax), sweep, solves)
}

/// Polynomial corrector of order `k`, fitted with the same regularized
/// least squares (`d1 = 1 + dd1`).
pub fn design_hammerstein(
    training: &TrainingSet,
    k: usize,
    lambda: f64,
    coeff_bits: Option<u32>,
) -> Result<Design<HammersteinLinearizer>> {
    if k == 0 {
        return Err(Error::InvalidParameter("Hammerstein order K must be >= 1".into()));
    }
    let basis = Basis::Polynomial { order: k };
    let sol = NormalEquations::from_training(training, &basis, lambda)?.solve()?;
    let nl = k - 1;
    let p = &sol.params;
    let mut d = vec![p[nl + 1], 1.0 + p[nl]];
    d.extend_from_slice(&p[..nl]);
    let raw = HammersteinLinearizer::new(d)?;
    let linearizer = match coeff_bits {
        Some(bits) => HammersteinLinearizer::new(quantize_coeffs(raw.coefficients(), bits)?)?,
        None => raw.clone(),
    };
    let report = DesignReport {
        method: "hammerstein".into(),
        lambda,
        n: nl,
        activation: None,
        coeff_bits,
        bmax: None,
        sweep: Vec::new(),
        mse_before: training.uncorrected_mse(),
        mse_unquantized: hammerstein_mse(training, &raw),
        mse_after: hammerstein_mse(training, &linearizer),
        residual: sol.relative_residual(),
        solves: 1,
    };
    Ok(Design { linearizer, report })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::norm2;
    use crate::signal::{
        apply_distortion, gen_multitone, normalize_gain, quantize_uniform, MultiToneSpec,
        PolynomialDistortion, Signal, SignalSeed,
    };
    use nalgebra::{DMatrix, DVector};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_training(rng: &mut ChaCha8Rng, len: usize, count: usize) -> TrainingSet {
        let pairs = (0..count)
            .map(|_| {
                let x: Vec<f64> = (0..len).map(|_| rng.random_range(-0.9..0.9)).collect();
                let v = x.iter().map(|&s| s + 0.2 * s * s - 0.1 * s * s * s).collect();
                (Signal::new(x).unwrap(), Signal::new(v).unwrap())
            })
            .collect();
        TrainingSet::new(pairs).unwrap()
    }

    /// Plain dense normal equations solved through an SVD pseudo-inverse.
    fn pinv_oracle(training: &TrainingSet, basis: &Basis, lambda: f64) -> DVector<f64> {
        let cols = basis.nonlinear_len() + 2;
        let mut gram = DMatrix::<f64>::zeros(cols, cols);
        let mut rhs = DVector::<f64>::zeros(cols);
        let mut rows = 0;
        for (x, v) in training.pairs() {
            let a = RegressorMatrix::from_basis(v, basis);
            let m = DMatrix::from_row_slice(
                a.rows(),
                a.cols(),
                &(0..a.rows()).flat_map(|r| a.row(r).to_vec()).collect::<Vec<_>>(),
            );
            let t = DVector::from_iterator(x.len(), x.samples().iter().zip(v.samples()).map(|(a, b)| a - b));
            gram += m.transpose() * &m;
            rhs += m.transpose() * t;
            rows += a.rows();
        }
        let scale = 1.0 / rows as f64;
        let system = gram * scale + DMatrix::identity(cols, cols) * lambda;
        system.pseudo_inverse(1e-300).unwrap() * (rhs * scale)
    }

    fn relative_error(a: &[f64], b: &DVector<f64>) -> f64 {
        let diff: Vec<f64> = a.iter().zip(b.iter()).map(|(x, y)| x - y).collect();
        norm2(&diff) / b.norm()
    }

    #[test]
    fn matches_pseudo_inverse_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for instance in 0..20 {
            let len = rng.random_range(32..=256);
            let n = rng.random_range(1..=8);
            let count = rng.random_range(1..=3);
            let training = random_training(&mut rng, len, count);
            let activation = [Activation::OneBit, Activation::Relu, Activation::Modulus][instance % 3];
            let biases = if activation == Activation::OneBit || n < 2 {
                biases_proposed(n).unwrap()
            } else {
                biases_uniform(n, 0.8).unwrap()
            };
            let config = DesignConfig {
                activation,
                ..DesignConfig::proposed(n)
            };
            let sol = solve_ridge(&training, &config, &biases).unwrap();
            let basis = Basis::Branch { biases, activation };
            let oracle = pinv_oracle(&training, &basis, config.lambda);
            let err = relative_error(&sol.params, &oracle);
            assert!(err < 1e-8, "instance {instance}: {err:e}");
            assert!(sol.relative_residual() <= RESIDUAL_TOLERANCE);
        }
    }

    #[test]
    fn hammerstein_matches_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let training = random_training(&mut rng, 200, 2);
        let basis = Basis::Polynomial { order: 5 };
        let sol = NormalEquations::from_training(&training, &basis, 2e-4)
            .unwrap()
            .solve()
            .unwrap();
        assert!(relative_error(&sol.params, &pinv_oracle(&training, &basis, 2e-4)) < 1e-8);
    }

    #[test]
    fn identity_training_gives_identity() {
        let x = Signal::new((0..300).map(|i| (i as f64 * 0.37).sin() * 0.8).collect()).unwrap();
        let training = TrainingSet::single(x.clone(), x.clone()).unwrap();
        let d = design_proposed(&training, &DesignConfig::proposed(8)).unwrap();
        assert_eq!(d.linearizer.apply(&x), x);
        let d = design_baseline_branch(&training, &DesignConfig::baseline(8, Activation::Relu)).unwrap();
        assert_eq!(d.linearizer.weights(), &[0.0; 8]);
        assert_eq!(d.linearizer.apply(&x), x);
        let h = design_hammerstein(&training, 6, 2e-4, Some(12)).unwrap();
        assert_eq!(h.linearizer.coefficients(), &[0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0]);
    }

    fn multitone_training(n_model: usize) -> TrainingSet {
        let model = PolynomialDistortion::alternating(n_model, 0.15);
        let spec = MultiToneSpec::qpsk_random();
        let seed = SignalSeed::new(5, 0);
        let gain = normalize_gain(&spec, &model, 2f64.powi(-8), 1024, seed).unwrap();
        let spec = spec.with_gain(gain);
        let x = gen_multitone(&spec, 1024, seed).unwrap();
        let v = quantize_uniform(&apply_distortion(&model, &x), 8).unwrap();
        TrainingSet::single(quantize_uniform(&x, 8).unwrap(), v).unwrap()
    }

    #[test]
    fn proposed_improves_training_error_with_one_solve() {
        let training = multitone_training(10);
        let before = solve_count();
        let d = design_proposed(&training, &DesignConfig::proposed(4)).unwrap();
        assert_eq!(solve_count() - before, 1);
        assert_eq!(d.report.solves, 1);
        assert!(d.report.mse_after < d.report.mse_before);
        assert!(design_proposed(&training, &DesignConfig::baseline(4, Activation::Relu)).is_err());
    }

    #[test]
    fn proposed_is_deterministic() {
        let training = multitone_training(10);
        let a = design_proposed(&training, &DesignConfig::proposed(16)).unwrap();
        let b = design_proposed(&training, &DesignConfig::proposed(16)).unwrap();
        assert_eq!(a.linearizer, b.linearizer);
    }

    #[test]
    fn sweep_selects_argmin_and_degenerates_to_direct_design() {
        let training = multitone_training(10);
        let config = DesignConfig::baseline(6, Activation::Modulus);
        let before = solve_count();
        let d = design_baseline_branch(&training, &config).unwrap();
        assert_eq!(solve_count() - before, 9);
        let best = d.report.sweep.iter().map(|s| s.1).fold(f64::INFINITY, f64::min);
        assert_eq!(d.report.mse_unquantized, best);
        let bmax = d.report.bmax.unwrap();
        for &(b, _) in &d.report.sweep {
            let single = DesignConfig {
                bmax_grid: vec![b],
                ..config.clone()
            };
            let one = design_baseline_branch(&training, &single).unwrap();
            let direct = design_branch(&training, &single, biases_uniform(6, b).unwrap()).unwrap();
            assert_eq!(one.linearizer, direct.linearizer);
            assert!(one.report.mse_unquantized >= d.report.mse_unquantized);
            if b == bmax {
                assert_eq!(one.linearizer, d.linearizer);
            }
        }
        let empty = DesignConfig {
            bmax_grid: vec![],
            ..config.clone()
        };
        assert!(design_baseline_branch(&training, &empty).is_err());
        assert!(design_baseline_branch(&training, &DesignConfig::baseline(1, Activation::Relu)).is_err());
    }

    #[test]
    fn ridge_shrinkage_and_large_lambda() {
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let training = random_training(&mut rng, 256, 1);
        let biases = biases_proposed(8).unwrap();
        let mut last = f64::INFINITY;
        for lambda in [1e-6, 1e-4, 1e-2, 1.0, 1e2] {
            let config = DesignConfig {
                lambda,
                ..DesignConfig::proposed(8)
            };
            let sol = solve_ridge(&training, &config, &biases).unwrap();
            let norm = norm2(&sol.params);
            assert!(norm <= last * (1.0 + 1e-12));
            last = norm;
        }
        let config = DesignConfig {
            lambda: 1e6,
            coeff_bits: None,
            ..DesignConfig::proposed(8)
        };
        let d = design_proposed(&training, &config).unwrap();
        for (_, v) in training.pairs() {
            let y = d.linearizer.apply(v);
            let dev = y
                .samples()
                .iter()
                .zip(v.samples())
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max);
            assert!(dev <= 1e-3);
        }
    }

    #[test]
    fn assembled_system_is_spd() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let training = random_training(&mut rng, 128, 1);
        let basis = Basis::Branch {
            biases: biases_proposed(8).unwrap(),
            activation: Activation::OneBit,
        };
        let eq = NormalEquations::from_training(&training, &basis, 2e-4).unwrap();
        assert!(eq.is_positive_definite());
        let m = eq.matrix();
        for i in 0..eq.dim() {
            for j in 0..eq.dim() {
                assert_eq!(m[i * eq.dim() + j], m[j * eq.dim() + i]);
            }
        }
    }

    #[test]
    fn hammerstein_inverts_small_cubic() {
        let x: Vec<f64> = (0..4096)
            .map(|i| 0.9 * ((i as f64) * 0.0137).sin() * ((i as f64) * 0.0021).cos())
            .collect();
        let v: Vec<f64> = x.iter().map(|&s| s + 0.1 * s * s * s).collect();
        let training = TrainingSet::single(Signal::new(x).unwrap(), Signal::new(v).unwrap()).unwrap();
        let d = design_hammerstein(&training, 9, 1e-6, Some(12)).unwrap();
        assert_eq!(d.report.n, 8);
        let gain_db = 10.0 * (d.report.mse_before / d.report.mse_after).log10();
        assert!(gain_db >= 20.0, "{gain_db}");
        assert!(design_hammerstein(&training, 0, 1e-6, None).is_err());
    }

    #[test]
    fn report_text_mentions_selection() {
        let training = multitone_training(10);
        let d = design_baseline_branch(&training, &DesignConfig::baseline(4, Activation::Relu)).unwrap();
        let text = d.report.to_text();
        assert!(text.contains("method = branch-relu"));
        assert!(text.contains("bmax = "));
        assert_eq!(text.matches("sweep bmax=").count(), 9);
    }
}
