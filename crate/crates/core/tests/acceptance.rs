//! Acceptance gate. Each test prints one `PASS`/`FAIL` line and then asserts.
//! The full default experiment runs once and is shared.

use std::sync::OnceLock;

use lutlin::design::{solve_ridge, Basis, DesignConfig, RegressorMatrix, TrainingSet, RESIDUAL_TOLERANCE};
use lutlin::experiment::{
    check_lut_equivalence, design_method, run_example1, run_example2, training_set, Example1Run, Example2Run,
    ExperimentConfig, Method,
};
use lutlin::linearizer::{
    biases_proposed, biases_uniform, complexity_count, load_linearizer, Activation, Linearizer, Realization,
};
use lutlin::signal::{PolynomialDistortion, Signal};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tempfile::TempDir;

struct Shared {
    _dir: TempDir,
    config: ExperimentConfig,
    ex1: Example1Run,
    ex2: Example2Run,
}

fn shared() -> &'static Shared {
    static CELL: OnceLock<Shared> = OnceLock::new();
    CELL.get_or_init(|| {
        let dir = tempfile::tempdir().unwrap();
        let config = ExperimentConfig {
            output_dir: dir.path().to_path_buf(),
            ..ExperimentConfig::default()
        };
        let ex1 = run_example1(&config).unwrap();
        let path = ex1.dir.join(format!(
            "linearizers/proposed-onebit_N{}.toml",
            config.highlight_n
        ));
        let ex2 = run_example2(&config, &load_linearizer(&path).unwrap()).unwrap();
        Shared {
            _dir: dir,
            config,
            ex1,
            ex2,
        }
    })
}

fn report(name: &str, ok: bool, detail: String) {
    println!("{} {name}: {detail}", if ok { "PASS" } else { "FAIL" });
    assert!(ok, "{name}: {detail}");
}

fn mean_of(run: &Example1Run, method: Method, n: usize) -> f64 {
    run.cell(method, n)
        .and_then(|c| c.outcome.as_ref().ok())
        .map(|m| m.evaluation.stats.mean_db)
        .unwrap_or(f64::NAN)
}

#[test]
fn lut_equivalence() {
    let config = ExperimentConfig::default();
    let training = training_set(&config).unwrap();
    let mut failures = Vec::new();
    let mut worst = 0.0f64;
    for n in 2..=32 {
        let design = design_method(Method::Proposed, n, &training, &config).unwrap();
        let Linearizer::Branch(b) = &design.stored else {
            panic!("branch form expected")
        };
        match check_lut_equivalence(b, 8) {
            Ok(c) => worst = worst.max(c.max_discrepancy),
            Err(e) => failures.push(format!("N={n}: {e}")),
        }
    }
    report(
        "lut equivalence",
        failures.is_empty() && worst == 0.0,
        format!("N=2..32 x 256 levels, max discrepancy {worst:e}, failures {failures:?}"),
    );
}

#[test]
fn uncorrected_baseline() {
    let s = shared();
    let sndr = s.ex1.uncorrected.stats.mean_db;
    let snr = s.ex1.undistorted.mean_db;
    report(
        "uncorrected baseline",
        (23.0..=27.0).contains(&sndr) && (40.0..=44.0).contains(&snr),
        format!(
            "mean SNDR {sndr:.3} dB in [23, 27], undistorted SNR {snr:.3} dB in [40, 44] (M={}, L={})",
            s.config.eval_signals, s.config.signal_len
        ),
    );
}

#[test]
fn improvement_headroom() {
    let s = shared();
    let limit = s.ex1.undistorted.mean_db + 0.5;
    let (best, cell) = s
        .ex1
        .cells
        .iter()
        .filter_map(|c| {
            c.outcome.as_ref().ok().map(|m| {
                (
                    m.evaluation.stats.mean_db,
                    format!("{} N={}", c.method.name(), c.n),
                )
            })
        })
        .fold(
            (f64::NEG_INFINITY, String::new()),
            |a, b| if b.0 > a.0 { b } else { a },
        );
    report(
        "improvement headroom",
        best <= limit,
        format!("best mean SNDR {best:.3} dB ({cell}) <= undistorted SNR + 0.5 = {limit:.3} dB"),
    );
}

#[test]
fn robustness() {
    let s = shared();
    let nd = s.ex2.nullsub_degradation();
    let bd = s.ex2.bandpass_degradation();
    report(
        "robustness",
        nd < 1.5 && bd < 1.5,
        format!(
            "N={} reference {:.3} dB; null-subcarrier {:.3} dB (degradation {nd:.3}), bandpass noise {:.3} dB (degradation {bd:.3}); limit < 1.5 dB",
            s.config.highlight_n,
            s.ex2.reference.stats.mean_db,
            s.ex2.nullsub.stats.mean_db,
            s.ex2.bandpass.stats.mean_db
        ),
    );
}

#[test]
fn ensemble_spread() {
    let s = shared();
    let cell = s.ex1.cell(Method::Proposed, s.config.highlight_n).unwrap();
    let stats = cell.outcome.as_ref().unwrap().evaluation.stats;
    let band = 0.1..=1.5;
    report(
        "ensemble spread",
        band.contains(&stats.variance_db) || band.contains(&stats.std_db),
        format!(
            "proposed N={} over M={}: variance {:.3} dB^2, std {:.3} dB; either in [0.1, 1.5]",
            s.config.highlight_n, stats.count, stats.variance_db, stats.std_db
        ),
    );
}

#[test]
fn complexity_table() {
    let mut bad = Vec::new();
    for n in 1..=64 {
        let h = complexity_count(Realization::Hammerstein, n);
        let b = complexity_count(Realization::Branch, n);
        let l = complexity_count(Realization::Lut, n);
        if (h.mults, h.adds) != (2 * n + 1, n + 1)
            || (b.mults, b.adds) != (n + 1, 2 * n + 1)
            || (l.mults, l.adds) != (1, 1)
        {
            bad.push(n);
        }
    }
    report(
        "complexity table",
        bad.is_empty(),
        format!("N=1..64, mismatches at {bad:?}"),
    );
}

/// Dense normal equations from plain sums, solved with an SVD pseudo-inverse.
fn pinv_solution(training: &TrainingSet, basis: &Basis, lambda: f64) -> DVector<f64> {
    let cols = basis.nonlinear_len() + 2;
    let mut gram = DMatrix::<f64>::zeros(cols, cols);
    let mut rhs = DVector::<f64>::zeros(cols);
    let mut rows = 0;
    for (x, v) in training.pairs() {
        let a = RegressorMatrix::from_basis(v, basis);
        let m = DMatrix::from_fn(a.rows(), a.cols(), |r, c| a.get(r, c));
        let t = DVector::from_iterator(x.len(), x.samples().iter().zip(v.samples()).map(|(p, q)| p - q));
        gram += m.transpose() * &m;
        rhs += m.transpose() * t;
        rows += a.rows();
    }
    let s = 1.0 / rows as f64;
    (gram * s + DMatrix::identity(cols, cols) * lambda)
        .pseudo_inverse(1e-300)
        .unwrap()
        * (rhs * s)
}

#[test]
fn solver_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut worst = 0.0f64;
    for i in 0..20 {
        let len = rng.random_range(16..=256);
        let n = rng.random_range(2..=8);
        let x: Vec<f64> = (0..len).map(|_| rng.random_range(-0.95..0.95)).collect();
        let v: Vec<f64> = x
            .iter()
            .map(|&s| s + 0.15 * s * s / 2.0 - 0.15 * s * s * s / 3.0 + rng.random_range(-0.01..0.01))
            .collect();
        let training = TrainingSet::single(Signal::new(x).unwrap(), Signal::new(v).unwrap()).unwrap();
        let activation = [Activation::OneBit, Activation::Relu, Activation::Modulus][i % 3];
        let biases = match activation {
            Activation::OneBit => biases_proposed(n).unwrap(),
            _ => biases_uniform(n, rng.random_range(0.1..0.9)).unwrap(),
        };
        let config = DesignConfig {
            activation,
            ..DesignConfig::proposed(n)
        };
        let w = solve_ridge(&training, &config, &biases).unwrap().params;
        let oracle = pinv_solution(&training, &Basis::Branch { biases, activation }, config.lambda);
        let diff: f64 = w
            .iter()
            .zip(oracle.iter())
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();
        worst = worst.max(diff / oracle.norm());
    }
    let s = shared();
    let failed: Vec<String> = s
        .ex1
        .cells
        .iter()
        .filter_map(|c| {
            c.outcome
                .as_ref()
                .err()
                .map(|e| format!("{} N={}: {e}", c.method.name(), c.n))
        })
        .collect();
    let residual = s
        .ex1
        .cells
        .iter()
        .filter_map(|c| c.outcome.as_ref().ok().map(|m| m.report.residual))
        .fold(0.0f64, f64::max);
    report(
        "solver oracle",
        worst <= 1e-8 && failed.is_empty() && residual <= RESIDUAL_TOLERANCE,
        format!("20 instances, max relative error {worst:.2e} <= 1e-8; sweep max residual {residual:.2e} <= 1e-10; failed cells {failed:?}"),
    );
}

#[test]
fn zero_distortion() {
    let dir = tempfile::tempdir().unwrap();
    let config = ExperimentConfig {
        distortion: PolynomialDistortion::identity(),
        output_dir: dir.path().to_path_buf(),
        ..ExperimentConfig::default()
    };
    let run = run_example1(&config).unwrap();
    let limit = 2f64.powi(-10);
    let mut worst = 0.0f64;
    let mut failed = Vec::new();
    for c in &run.cells {
        match &c.outcome {
            Ok(m) => worst = worst.max(m.evaluation.max_correction),
            Err(e) => failed.push(format!("{} N={}: {e}", c.method.name(), c.n)),
        }
    }
    report(
        "zero distortion",
        failed.is_empty() && worst <= limit,
        format!(
            "max |y - v| over all methods, N and M={} signals: {worst:e} <= 2^-10; failed cells {failed:?}",
            config.eval_signals
        ),
    );
}

#[test]
fn proposed_trend() {
    let s = shared();
    let a = mean_of(&s.ex1, Method::Proposed, 4);
    let b = mean_of(&s.ex1, Method::Proposed, 32);
    report(
        "proposed trend",
        b - a >= 3.0,
        format!(
            "mean SNDR N=32 {b:.3} dB minus N=4 {a:.3} dB = {:.3} dB >= 3",
            b - a
        ),
    );
}
