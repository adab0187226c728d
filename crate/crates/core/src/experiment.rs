//! End-to-end experiments: the method comparison over an `N` sweep, the
//! robustness check of a fixed design on other signal classes, and the
//! exhaustive branch/table equivalence check.
//!
//! Seed policy: every signal is generated from its own stream
//! `SignalSeed::for_stage(master_seed, stage, index)`. The first training
//! signal is multi-tone index 0, evaluation uses indices `1..=M`, and any
//! further training signals use indices above [`EXTRA_TRAINING_BASE`].

use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::design::{
    default_bmax_grid, design_baseline_branch, design_hammerstein, design_proposed, DesignConfig,
    DesignReport, TrainingSet, DEFAULT_COEFF_BITS, DEFAULT_LAMBDA,
};
use crate::error::{Error, Result};
use crate::io::{write_sndr_csv, write_spectrum_csv, write_table};
use crate::linearizer::{
    complexity_count, format_number, save_linearizer, Activation, BranchLinearizer, HammersteinLinearizer,
    Linearizer, LutLinearizer, Realization,
};
use crate::metrics::{periodogram, sndr, EnsembleStats, Window};
use crate::signal::{
    apply_distortion, gen_bandpass_noise, gen_multitone, max_feasible_scale, normalize_gain,
    quantize_uniform, quantizer_step, BandpassNoiseSpec, MultiToneSpec, PolynomialDistortion, Signal,
    SignalSeed,
};

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

pub const STAGE_MULTITONE: u16 = 1;
pub const STAGE_NULLSUB: u16 = 2;
pub const STAGE_BANDPASS: u16 = 3;

/// Training signal `r >= 1` uses multi-tone index `EXTRA_TRAINING_BASE + r`.
pub const EXTRA_TRAINING_BASE: u64 = 1 << 40;

/// `(reference x, distorted and quantized v)`.
pub type SignalPair = (Signal, Signal);

type Generator = fn(&ExperimentConfig, u64) -> Result<SignalPair>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub master_seed: u64,
    /// `R`.
    pub training_signals: usize,
    /// `M`.
    pub eval_signals: usize,
    /// `L`.
    pub signal_len: usize,
    pub n_sweep: Vec<usize>,
    pub lambda: f64,
    pub signal_bits: u32,
    pub coeff_bits: u32,
    /// Peak margin below full scale for the distorted signal.
    pub headroom: f64,
    pub bmax_grid: Vec<f64>,
    /// Fit against the quantized reference instead of the clean one.
    pub quantize_design_reference: bool,
    /// Branch count used for spectra and the robustness experiment.
    pub highlight_n: usize,
    /// Subcarriers nulled per signal in the robustness experiment.
    pub nulled: usize,
    /// Noise passband edges in units of pi.
    pub noise_passband: (f64, f64),
    pub noise_filter_order: usize,
    pub output_dir: PathBuf,
    pub distortion: PolynomialDistortion,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            master_seed: 1,
            training_signals: 1,
            eval_signals: 100,
            signal_len: 8192,
            n_sweep: vec![2, 4, 8, 12, 16, 20, 24, 28, 32],
            lambda: DEFAULT_LAMBDA,
            signal_bits: 8,
            coeff_bits: DEFAULT_COEFF_BITS,
            headroom: 2f64.powi(-8),
            bmax_grid: default_bmax_grid(),
            quantize_design_reference: true,
            highlight_n: 32,
            nulled: 8,
            noise_passband: (0.25, 0.75),
            noise_filter_order: 128,
            output_dir: PathBuf::from("out"),
            distortion: PolynomialDistortion::alternating(10, 0.15),
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParameter(msg));
        if self.training_signals == 0 || self.eval_signals == 0 {
            return bad("R and M must be at least 1".into());
        }
        if !self.signal_len.is_power_of_two() || self.signal_len < 2 {
            return Err(Error::NotPowerOfTwo(self.signal_len));
        }
        if self.signal_len <= self.noise_filter_order {
            return bad(format!(
                "L = {} must exceed the noise filter order {}",
                self.signal_len, self.noise_filter_order
            ));
        }
        if self.n_sweep.is_empty() || self.n_sweep.contains(&0) {
            return bad(format!("N sweep {:?}", self.n_sweep));
        }
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return bad(format!("lambda {}", self.lambda));
        }
        if !(1..=24).contains(&self.signal_bits) {
            return bad(format!("signal bits {}", self.signal_bits));
        }
        if !(2..=52).contains(&self.coeff_bits) {
            return bad(format!("coefficient bits {}", self.coeff_bits));
        }
        if !(self.headroom > 0.0 && self.headroom < 1.0) {
            return bad(format!("headroom {}", self.headroom));
        }
        if self.bmax_grid.iter().any(|b| !(*b > 0.0 && b.is_finite())) {
            return bad(format!("b_max grid {:?}", self.bmax_grid));
        }
        if self.highlight_n == 0 {
            return bad("highlight N must be at least 1".into());
        }
        self.noise_spec(1.0).validate()
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::parse("experiment config", e))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text)
    }

    fn noise_spec(&self, peak_target: f64) -> BandpassNoiseSpec {
        BandpassNoiseSpec {
            passband: self.noise_passband,
            filter_order: self.noise_filter_order,
            peak_target,
        }
    }

    fn csv_comment(&self) -> String {
        format!("lutlin {TOOL_VERSION} master_seed={}", self.master_seed)
    }

    fn seed(&self, stage: u16, index: u64) -> SignalSeed {
        SignalSeed::for_stage(self.master_seed, stage, index)
    }
}

/// Largest-gain multi-tone for one seed, distorted and quantized.
fn distorted_multitone(
    config: &ExperimentConfig,
    spec: &MultiToneSpec,
    seed: SignalSeed,
) -> Result<SignalPair> {
    let model = &config.distortion;
    let gain = normalize_gain(spec, model, config.headroom, config.signal_len, seed)?;
    let x = gen_multitone(&spec.with_gain(gain), config.signal_len, seed)?;
    let v = quantize_uniform(&apply_distortion(model, &x), config.signal_bits)?;
    Ok((x, v))
}

/// Quantizes a clean reference. The gain bound applies to the distorted
/// signal, so the clean one may slightly exceed full scale where the model
/// compresses; those samples saturate.
pub fn quantize_reference(x: &Signal, bits: u32) -> Result<Signal> {
    quantize_uniform(&x.map(|s| s.clamp(-1.0, 1.0)), bits)
}

/// Multi-tone pair at `index` of the main ensemble.
pub fn multitone_pair(config: &ExperimentConfig, index: u64) -> Result<SignalPair> {
    distorted_multitone(
        config,
        &MultiToneSpec::qpsk_random(),
        config.seed(STAGE_MULTITONE, index),
    )
}

/// Multi-tone with `config.nulled` random subcarriers removed.
pub fn nullsub_pair(config: &ExperimentConfig, index: u64) -> Result<SignalPair> {
    let seed = config.seed(STAGE_NULLSUB, index);
    let spec = MultiToneSpec::qpsk_random().with_nulls(config.nulled, seed)?;
    distorted_multitone(config, &spec, seed)
}

/// Bandpass Gaussian noise, scaled like the multi-tone.
pub fn bandpass_pair(config: &ExperimentConfig, index: u64) -> Result<SignalPair> {
    let unit = gen_bandpass_noise(
        &config.noise_spec(1.0),
        config.signal_len,
        config.seed(STAGE_BANDPASS, index),
    )?;
    let scale = max_feasible_scale(&unit, &config.distortion, config.headroom)?;
    let x = unit.scaled(scale);
    let v = quantize_uniform(&apply_distortion(&config.distortion, &x), config.signal_bits)?;
    Ok((x, v))
}

fn ensemble(config: &ExperimentConfig, generate: Generator) -> Result<Vec<SignalPair>> {
    (1..=config.eval_signals as u64)
        .into_par_iter()
        .map(|i| generate(config, i))
        .collect()
}

/// Evaluation pairs `1..=M` of the main multi-tone ensemble.
pub fn evaluation_pairs(config: &ExperimentConfig) -> Result<Vec<SignalPair>> {
    ensemble(config, multitone_pair)
}

/// The `R` design pairs; references are quantized when
/// `quantize_design_reference` is set.
pub fn training_set(config: &ExperimentConfig) -> Result<TrainingSet> {
    let pairs = (0..config.training_signals as u64)
        .map(|r| {
            let index = if r == 0 { 0 } else { EXTRA_TRAINING_BASE + r };
            let (x, v) = multitone_pair(config, index)?;
            let x = if config.quantize_design_reference {
                quantize_reference(&x, config.signal_bits)?
            } else {
                x
            };
            Ok((x, v))
        })
        .collect::<Result<Vec<_>>>()?;
    TrainingSet::new(pairs)
}

/// Per-signal SNDR and the largest applied correction `max |y - v|`.
#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub per_signal: Vec<f64>,
    pub stats: EnsembleStats,
    pub max_correction: f64,
}

pub fn evaluate(lin: &Linearizer, pairs: &[SignalPair]) -> Result<Evaluation> {
    let rows = pairs
        .par_iter()
        .map(|(x, v)| {
            let y = lin.apply(v)?;
            let dev = y
                .samples()
                .iter()
                .zip(v.samples())
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max);
            Ok((sndr(x, &y)?.sndr_db, dev))
        })
        .collect::<Result<Vec<(f64, f64)>>>()?;
    let per_signal: Vec<f64> = rows.iter().map(|r| r.0).collect();
    Ok(Evaluation {
        stats: EnsembleStats::from_values(&per_signal)?,
        max_correction: rows.iter().map(|r| r.1).fold(0.0, f64::max),
        per_signal,
    })
}

/// `y = v`.
fn identity() -> Linearizer {
    HammersteinLinearizer::new(vec![0.0, 1.0])
        .expect("valid coefficients")
        .into()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    Hammerstein,
    BranchRelu,
    BranchModulus,
    Proposed,
}

impl Method {
    pub const ALL: [Method; 4] = [
        Method::Hammerstein,
        Method::BranchRelu,
        Method::BranchModulus,
        Method::Proposed,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Method::Hammerstein => "hammerstein",
            Method::BranchRelu => "branch-relu",
            Method::BranchModulus => "branch-modulus",
            Method::Proposed => "proposed-onebit",
        }
    }

    /// How the designed linearizer is run during evaluation.
    pub fn realization(self) -> Realization {
        match self {
            Method::Hammerstein => Realization::Hammerstein,
            Method::BranchRelu | Method::BranchModulus => Realization::Branch,
            Method::Proposed => Realization::Lut,
        }
    }
}

/// A designed linearizer for one `(method, N)` cell. `stored` is what gets
/// written to disk; `run` is the realization used for evaluation.
pub struct CellDesign {
    pub stored: Linearizer,
    pub run: Linearizer,
    pub report: DesignReport,
}

pub fn design_method(
    method: Method,
    n: usize,
    training: &TrainingSet,
    config: &ExperimentConfig,
) -> Result<CellDesign> {
    let bits = Some(config.coeff_bits);
    let branch_config = |activation| DesignConfig {
        lambda: config.lambda,
        n,
        activation,
        bmax_grid: config.bmax_grid.clone(),
        coeff_bits: bits,
    };
    match method {
        Method::Hammerstein => {
            let d = design_hammerstein(training, n + 1, config.lambda, bits)?;
            let lin: Linearizer = d.linearizer.into();
            Ok(CellDesign {
                stored: lin.clone(),
                run: lin,
                report: d.report,
            })
        }
        Method::BranchRelu | Method::BranchModulus => {
            let act = if method == Method::BranchRelu {
                Activation::Relu
            } else {
                Activation::Modulus
            };
            let d = design_baseline_branch(training, &branch_config(act))?;
            let lin: Linearizer = d.linearizer.into();
            Ok(CellDesign {
                stored: lin.clone(),
                run: lin,
                report: d.report,
            })
        }
        Method::Proposed => {
            let d = design_proposed(training, &branch_config(Activation::OneBit))?;
            let lut = LutLinearizer::from_branch(&d.linearizer)?;
            Ok(CellDesign {
                stored: d.linearizer.into(),
                run: lut.into(),
                report: d.report,
            })
        }
    }
}

/// Result of one sweep cell.
#[derive(Debug, Clone, PartialEq)]
pub struct Cell {
    pub method: Method,
    pub n: usize,
    pub outcome: std::result::Result<CellMetrics, String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CellMetrics {
    pub evaluation: Evaluation,
    pub report: DesignReport,
    pub mults: usize,
    pub adds: usize,
    /// Linearizer file, relative to the experiment directory.
    pub linearizer_path: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageSeed {
    pub stage: String,
    pub id: u16,
    pub master_seed: u64,
    pub first_index: u64,
    pub last_index: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearizerEntry {
    pub method: String,
    #[serde(rename = "N")]
    pub n: usize,
    pub path: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct SummaryEntry {
    pub name: String,
    #[serde(rename = "N")]
    pub n: usize,
    pub mean_sndr_db: Option<f64>,
    pub var_db: Option<f64>,
    pub std_db: Option<f64>,
    pub mults: Option<usize>,
    pub adds: Option<usize>,
    pub bmax: Option<f64>,
    pub residual: Option<f64>,
    pub error: Option<String>,
}

impl SummaryEntry {
    fn from_stats(name: &str, n: usize, stats: &EnsembleStats) -> Self {
        Self {
            name: name.into(),
            n,
            mean_sndr_db: Some(stats.mean_db),
            var_db: Some(stats.variance_db),
            std_db: Some(stats.std_db),
            ..Self::default()
        }
    }
}

/// Everything needed to reproduce a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool_version: String,
    pub experiment: String,
    pub files: Vec<String>,
    pub seeds: Vec<StageSeed>,
    pub linearizers: Vec<LinearizerEntry>,
    pub summary: Vec<SummaryEntry>,
    pub config: ExperimentConfig,
}

impl RunManifest {
    fn new(experiment: &str, config: &ExperimentConfig) -> Self {
        Self {
            tool_version: TOOL_VERSION.into(),
            experiment: experiment.into(),
            files: Vec::new(),
            seeds: Vec::new(),
            linearizers: Vec::new(),
            summary: Vec::new(),
            config: config.clone(),
        }
    }

    fn seed(&mut self, config: &ExperimentConfig, stage: &str, id: u16, first: u64, last: u64) {
        self.seeds.push(StageSeed {
            stage: stage.into(),
            id,
            master_seed: config.master_seed,
            first_index: first,
            last_index: last,
        });
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("manifest serializes")
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::parse("manifest", e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text)
    }

    fn save(&mut self, dir: &Path) -> Result<()> {
        self.files.push("manifest.toml".into());
        let path = dir.join("manifest.toml");
        std::fs::write(&path, self.to_toml()).map_err(|e| Error::io(path, e))
    }
}

fn create_dir(path: &Path) -> Result<()> {
    std::fs::create_dir_all(path).map_err(|e| Error::io(path, e))
}

fn opt_number(x: Option<f64>) -> String {
    x.map(format_number).unwrap_or_else(|| "NaN".into())
}

/// Output of the method comparison.
#[derive(Debug, Clone)]
pub struct Example1Run {
    pub manifest: RunManifest,
    pub dir: PathBuf,
    /// `v` against `x`.
    pub uncorrected: Evaluation,
    /// `quantize(x)` against `x`.
    pub undistorted: EnsembleStats,
    pub cells: Vec<Cell>,
}

impl Example1Run {
    pub fn cell(&self, method: Method, n: usize) -> Option<&Cell> {
        self.cells.iter().find(|c| c.method == method && c.n == n)
    }
}

/// Designs every method at every `N`, evaluates on the ensemble and writes
/// CSVs, linearizers and a manifest to `output_dir/example1`.
pub fn run_example1(config: &ExperimentConfig) -> Result<Example1Run> {
    config.validate()?;
    let dir = config.output_dir.join("example1");
    create_dir(&dir.join("linearizers"))?;
    let comment = config.csv_comment();
    let comment = Some(comment.as_str());
    let mut manifest = RunManifest::new("example1", config);
    manifest.seed(
        config,
        "multitone",
        STAGE_MULTITONE,
        0,
        config.eval_signals as u64,
    );

    let training = training_set(config)?;
    let pairs = evaluation_pairs(config)?;
    let bits = config.signal_bits;
    let uncorrected = evaluate(&identity(), &pairs)?;
    let undistorted = pairs
        .iter()
        .map(|(x, _)| Ok(sndr(x, &quantize_reference(x, bits)?)?.sndr_db))
        .collect::<Result<Vec<f64>>>()?;
    let undistorted = EnsembleStats::from_values(&undistorted)?;

    let jobs: Vec<(Method, usize)> = Method::ALL
        .iter()
        .flat_map(|&m| config.n_sweep.iter().map(move |&n| (m, n)))
        .collect();
    let results: Vec<(Cell, Option<Linearizer>)> = jobs
        .par_iter()
        .map(|&(method, n)| {
            let run = || -> Result<(CellMetrics, Linearizer)> {
                let design = design_method(method, n, &training, config)?;
                let evaluation = evaluate(&design.run, &pairs)?;
                let ops = complexity_count(method.realization(), n);
                let metrics = CellMetrics {
                    evaluation,
                    report: design.report,
                    mults: ops.mults,
                    adds: ops.adds,
                    linearizer_path: format!("linearizers/{}_N{n}.toml", method.name()),
                };
                Ok((metrics, design.stored))
            };
            match run() {
                Ok((metrics, stored)) => (
                    Cell {
                        method,
                        n,
                        outcome: Ok(metrics),
                    },
                    Some(stored),
                ),
                Err(e) => (
                    Cell {
                        method,
                        n,
                        outcome: Err(format!("{}: {e}", e.code())),
                    },
                    None,
                ),
            }
        })
        .collect();

    let mut cells = Vec::with_capacity(results.len());
    for (cell, stored) in results {
        if let (Ok(m), Some(lin)) = (&cell.outcome, stored) {
            save_linearizer(&lin, &dir.join(&m.linearizer_path))?;
            let file = format!("sndr_{}_N{}.csv", cell.method.name(), cell.n);
            write_sndr_csv(&dir.join(&file), &m.evaluation.per_signal, 1, comment)?;
            manifest.files.push(m.linearizer_path.clone());
            manifest.files.push(file);
            manifest.linearizers.push(LinearizerEntry {
                method: cell.method.name().into(),
                n: cell.n,
                path: m.linearizer_path.clone(),
            });
        }
        cells.push(cell);
    }

    write_table(
        &dir.join("sndr_vs_N.csv"),
        comment,
        &["method", "N", "mean_sndr_db", "var_db"],
        cells.iter().map(|c| {
            let stats = c.outcome.as_ref().ok().map(|m| m.evaluation.stats);
            [
                c.method.name().to_string(),
                c.n.to_string(),
                opt_number(stats.map(|s| s.mean_db)),
                opt_number(stats.map(|s| s.variance_db)),
            ]
        }),
    )?;
    write_table(
        &dir.join("sndr_vs_mults.csv"),
        comment,
        &["method", "N", "mults", "adds", "mean_sndr_db"],
        cells.iter().map(|c| {
            let ops = complexity_count(c.method.realization(), c.n);
            [
                c.method.name().to_string(),
                c.n.to_string(),
                ops.mults.to_string(),
                ops.adds.to_string(),
                opt_number(c.outcome.as_ref().ok().map(|m| m.evaluation.stats.mean_db)),
            ]
        }),
    )?;
    write_sndr_csv(
        &dir.join("sndr_uncorrected.csv"),
        &uncorrected.per_signal,
        1,
        comment,
    )?;
    write_table(
        &dir.join("baselines.csv"),
        comment,
        &["quantity", "mean_sndr_db", "var_db", "std_db"],
        [("uncorrected", &uncorrected.stats), ("undistorted", &undistorted)].map(|(name, s)| {
            [
                name.to_string(),
                format_number(s.mean_db),
                format_number(s.variance_db),
                format_number(s.std_db),
            ]
        }),
    )?;
    manifest.files.extend(
        [
            "sndr_vs_N.csv",
            "sndr_vs_mults.csv",
            "sndr_uncorrected.csv",
            "baselines.csv",
        ]
        .map(String::from),
    );

    if let Some(Cell { outcome: Ok(_), .. }) = cells
        .iter()
        .find(|c| c.method == Method::Proposed && c.n == config.highlight_n)
    {
        let design = design_method(Method::Proposed, config.highlight_n, &training, config)?;
        let (x, v) = &pairs[0];
        let y = design.run.apply(v)?;
        for (name, s) in [
            ("spectrum_reference.csv", x),
            ("spectrum_before.csv", v),
            ("spectrum_after.csv", &y),
        ] {
            write_spectrum_csv(&dir.join(name), &periodogram(s, Window::Hann)?, comment)?;
            manifest.files.push(name.into());
        }
    }

    manifest
        .summary
        .push(SummaryEntry::from_stats("uncorrected", 0, &uncorrected.stats));
    manifest
        .summary
        .push(SummaryEntry::from_stats("undistorted", 0, &undistorted));
    for c in &cells {
        manifest.summary.push(match &c.outcome {
            Ok(m) => SummaryEntry {
                mults: Some(m.mults),
                adds: Some(m.adds),
                bmax: m.report.bmax,
                residual: Some(m.report.residual),
                ..SummaryEntry::from_stats(c.method.name(), c.n, &m.evaluation.stats)
            },
            Err(e) => SummaryEntry {
                name: c.method.name().into(),
                n: c.n,
                error: Some(e.clone()),
                ..SummaryEntry::default()
            },
        });
    }
    manifest.save(&dir)?;
    Ok(Example1Run {
        manifest,
        dir,
        uncorrected,
        undistorted,
        cells,
    })
}

/// Default location of the highlighted proposed design written by
/// [`run_example1`].
pub fn highlighted_linearizer_path(config: &ExperimentConfig) -> PathBuf {
    config
        .output_dir
        .join("example1")
        .join("linearizers")
        .join(format!(
            "{}_N{}.toml",
            Method::Proposed.name(),
            config.highlight_n
        ))
}

#[derive(Debug, Clone)]
pub struct Example2Run {
    pub manifest: RunManifest,
    pub dir: PathBuf,
    /// The fixed linearizer on the main multi-tone ensemble.
    pub reference: Evaluation,
    pub nullsub: Evaluation,
    pub bandpass: Evaluation,
}

impl Example2Run {
    pub fn nullsub_degradation(&self) -> f64 {
        self.reference.stats.mean_db - self.nullsub.stats.mean_db
    }

    pub fn bandpass_degradation(&self) -> f64 {
        self.reference.stats.mean_db - self.bandpass.stats.mean_db
    }
}

/// Evaluates an already designed linearizer, without redesign, on
/// null-subcarrier and bandpass-noise ensembles; results go to
/// `output_dir/example2`.
pub fn run_example2(config: &ExperimentConfig, designed: &Linearizer) -> Result<Example2Run> {
    config.validate()?;
    let dir = config.output_dir.join("example2");
    create_dir(&dir)?;
    let comment = config.csv_comment();
    let comment = Some(comment.as_str());
    let mut manifest = RunManifest::new("example2", config);
    let m = config.eval_signals as u64;
    manifest.seed(config, "multitone", STAGE_MULTITONE, 1, m);
    manifest.seed(config, "nullsub", STAGE_NULLSUB, 1, m);
    manifest.seed(config, "bandpass", STAGE_BANDPASS, 1, m);

    // a branch design that has a table realization is run as the table
    let lin = match designed {
        Linearizer::Branch(b) => LutLinearizer::from_branch(b)
            .map(Linearizer::from)
            .unwrap_or_else(|_| designed.clone()),
        other => other.clone(),
    };
    let sets: [(&str, Generator); 3] = [
        ("example1", multitone_pair),
        ("nullsub", nullsub_pair),
        ("bandpass", bandpass_pair),
    ];
    let mut evals = Vec::with_capacity(3);
    for (name, generate) in sets {
        let pairs = ensemble(config, generate)?;
        let eval = evaluate(&lin, &pairs)?;
        let file = format!("sndr_{name}.csv");
        write_sndr_csv(&dir.join(&file), &eval.per_signal, 1, comment)?;
        manifest.files.push(file);
        if name != "example1" {
            let (_, v) = &pairs[0];
            let y = lin.apply(v)?;
            for (tag, s) in [("before", v), ("after", &y)] {
                let file = format!("spectrum_{name}_{tag}.csv");
                write_spectrum_csv(&dir.join(&file), &periodogram(s, Window::Hann)?, comment)?;
                manifest.files.push(file);
            }
        }
        evals.push((name, eval));
    }
    let reference_mean = evals[0].1.stats.mean_db;
    write_table(
        &dir.join("robustness.csv"),
        comment,
        &[
            "ensemble",
            "M",
            "mean_sndr_db",
            "var_db",
            "std_db",
            "degradation_db",
        ],
        evals.iter().map(|(name, e)| {
            [
                name.to_string(),
                e.stats.count.to_string(),
                format_number(e.stats.mean_db),
                format_number(e.stats.variance_db),
                format_number(e.stats.std_db),
                format_number(reference_mean - e.stats.mean_db),
            ]
        }),
    )?;
    manifest.files.push("robustness.csv".into());
    manifest.linearizers.push(LinearizerEntry {
        method: lin.describe(),
        n: lin.branch_count(),
        path: "linearizer.toml".into(),
    });
    save_linearizer(designed, &dir.join("linearizer.toml"))?;
    manifest.files.push("linearizer.toml".into());
    for (name, e) in &evals {
        manifest
            .summary
            .push(SummaryEntry::from_stats(name, lin.branch_count(), &e.stats));
    }
    manifest.save(&dir)?;
    let mut evals = evals.into_iter().map(|(_, e)| e);
    Ok(Example2Run {
        manifest,
        dir,
        reference: evals.next().expect("three ensembles"),
        nullsub: evals.next().expect("three ensembles"),
        bandpass: evals.next().expect("three ensembles"),
    })
}

/// Exhaustive comparison at one `N`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LutCheck {
    pub n: usize,
    pub levels: usize,
    pub max_discrepancy: f64,
}

/// Compares the branch sum and its table at every level of a `bits`-bit
/// quantizer. Any difference, including in the sign of zero, is an error.
pub fn check_lut_equivalence(branch: &BranchLinearizer, bits: u32) -> Result<LutCheck> {
    let lut = LutLinearizer::from_branch(branch)?;
    let step = quantizer_step(bits);
    let levels = 1usize << bits;
    let mut max_discrepancy: f64 = 0.0;
    for k in 0..levels {
        let v = -1.0 + k as f64 * step;
        let a = branch.apply_sample(v);
        let b = lut.apply_sample(v)?;
        if a.to_bits() != b.to_bits() {
            return Err(Error::LutMismatch {
                n: branch.n(),
                level: v,
                branch: a,
                lut: b,
            });
        }
        max_discrepancy = max_discrepancy.max((a - b).abs());
    }
    Ok(LutCheck {
        n: branch.n(),
        levels,
        max_discrepancy,
    })
}

/// Designs the proposed linearizer at every swept `N` and checks its table
/// exhaustively.
pub fn verify_lut(config: &ExperimentConfig) -> Result<Vec<LutCheck>> {
    config.validate()?;
    let training = training_set(config)?;
    config
        .n_sweep
        .iter()
        .map(|&n| {
            let design = design_method(Method::Proposed, n, &training, config)?;
            let Linearizer::Branch(b) = &design.stored else {
                unreachable!("proposed design is stored in branch form")
            };
            check_lut_equivalence(b, config.signal_bits)
        })
        .collect()
}
