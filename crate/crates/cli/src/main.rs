use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use lutlin::design::{
    design_baseline_branch, design_hammerstein, design_proposed, DesignConfig, DesignReport, TrainingSet,
};
use lutlin::experiment::{
    bandpass_pair, highlighted_linearizer_path, multitone_pair, nullsub_pair, run_example1, run_example2,
    verify_lut, ExperimentConfig,
};
use lutlin::io::{read_signal_csv, write_signal_csv, write_spectrum_csv};
use lutlin::linearizer::{load_linearizer, save_linearizer, Activation, Linearizer, LutLinearizer};
use lutlin::metrics::{periodogram, sndr, Window};
use lutlin::signal::PolynomialDistortion;
use lutlin::Error;

#[derive(Parser)]
#[command(
    name = "lutlin",
    version,
    about = "Design, apply and evaluate memoryless linearizers"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit a linearizer to reference/distorted signal pairs
    Design(DesignArgs),
    /// Run a saved linearizer on a signal
    Apply(ApplyArgs),
    /// Method comparison over the N sweep
    Example1(ExperimentArgs),
    /// Evaluate a fixed design on null-subcarrier and bandpass-noise ensembles
    Example2 {
        #[command(flatten)]
        experiment: ExperimentArgs,
        /// Linearizer to evaluate; defaults to the highlighted proposed design
        /// written by `example1`
        #[arg(long)]
        linearizer: Option<PathBuf>,
    },
    /// Check branch and table outputs at every quantizer level
    VerifyLut(ExperimentArgs),
    /// Periodogram of a signal CSV
    Spectrum(SpectrumArgs),
    /// Write one reference/distorted pair from the experiment generators
    Generate(GenerateArgs),
    /// SNDR of a signal against a reference
    Sndr {
        #[arg(long)]
        reference: PathBuf,
        #[arg(long)]
        input: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum MethodArg {
    Proposed,
    Relu,
    Modulus,
    Hammerstein,
}

#[derive(Args)]
struct DesignArgs {
    /// Reference signal CSV; repeat for several training pairs
    #[arg(long, required = true)]
    reference: Vec<PathBuf>,
    /// Distorted signal CSV, paired in order with --reference
    #[arg(long, required = true)]
    distorted: Vec<PathBuf>,
    #[arg(long, value_enum, default_value = "proposed")]
    method: MethodArg,
    /// Branch count (polynomial order is N + 1)
    #[arg(short = 'N', long)]
    n: usize,
    #[arg(long, default_value_t = lutlin::design::DEFAULT_LAMBDA)]
    lambda: f64,
    /// Coefficient word length; 0 keeps full precision
    #[arg(long, default_value_t = lutlin::design::DEFAULT_COEFF_BITS)]
    coeff_bits: u32,
    /// Candidate b_max values for the ReLU/modulus sweep
    #[arg(long, value_delimiter = ',')]
    bmax_grid: Option<Vec<f64>>,
    /// Linearizer output file
    #[arg(long)]
    output: PathBuf,
    /// Design report file; printed to stdout when omitted
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Args)]
struct ApplyArgs {
    #[arg(long)]
    linearizer: PathBuf,
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    output: PathBuf,
    /// Run a one-bit branch design through its look-up table
    #[arg(long)]
    lut: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum WindowArg {
    Hann,
    Rectangular,
}

#[derive(Args)]
struct SpectrumArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    output: PathBuf,
    #[arg(long, value_enum, default_value = "hann")]
    window: WindowArg,
}

#[derive(Clone, Copy, ValueEnum)]
enum SignalKind {
    Multitone,
    Nullsub,
    Bandpass,
}

#[derive(Args)]
struct GenerateArgs {
    #[command(flatten)]
    experiment: ExperimentArgs,
    #[arg(long, value_enum, default_value = "multitone")]
    kind: SignalKind,
    /// Ensemble index; 0 is the training signal
    #[arg(long, default_value_t = 0)]
    index: u64,
    #[arg(long)]
    reference: PathBuf,
    #[arg(long)]
    distorted: PathBuf,
}

/// Experiment settings. Precedence: flag, then config file, then default.
#[derive(Args)]
struct ExperimentArgs {
    /// Config file (TOML key-value text)
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    master_seed: Option<u64>,
    /// Training signals R
    #[arg(short = 'R', long)]
    training_signals: Option<usize>,
    /// Evaluation signals M (2500 for the full-size ensemble)
    #[arg(short = 'M', long)]
    eval_signals: Option<usize>,
    /// Signal length L (power of two)
    #[arg(short = 'L', long)]
    signal_len: Option<usize>,
    #[arg(long, value_delimiter = ',')]
    n_sweep: Option<Vec<usize>>,
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long)]
    signal_bits: Option<u32>,
    #[arg(long)]
    coeff_bits: Option<u32>,
    #[arg(long)]
    headroom: Option<f64>,
    #[arg(long, value_delimiter = ',')]
    bmax_grid: Option<Vec<f64>>,
    #[arg(long)]
    quantize_design_reference: Option<bool>,
    #[arg(long)]
    highlight_n: Option<usize>,
    #[arg(long)]
    nulled: Option<usize>,
    /// Band edges in units of pi, e.g. 0.25,0.75
    #[arg(long, value_delimiter = ',', num_args = 2)]
    noise_passband: Option<Vec<f64>>,
    #[arg(long)]
    noise_filter_order: Option<usize>,
    #[arg(long)]
    output_dir: Option<PathBuf>,
    /// Alternating model order P (a_p = (-1)^p * scale / p)
    #[arg(long)]
    distortion_order: Option<usize>,
    #[arg(long)]
    distortion_scale: Option<f64>,
    /// Use the identity model
    #[arg(long, conflicts_with_all = ["distortion_order", "distortion_scale"])]
    no_distortion: bool,
}

impl ExperimentArgs {
    fn resolve(&self) -> Result<ExperimentConfig, Error> {
        let mut c = match &self.config {
            Some(path) => ExperimentConfig::load(path)?,
            None => ExperimentConfig::default(),
        };
        macro_rules! set {
            ($($field:ident),*) => {$(
                if let Some(v) = &self.$field {
                    c.$field = v.clone();
                }
            )*};
        }
        set!(
            master_seed,
            training_signals,
            eval_signals,
            signal_len,
            n_sweep,
            lambda,
            signal_bits,
            coeff_bits,
            headroom,
            bmax_grid,
            quantize_design_reference,
            highlight_n,
            nulled,
            noise_filter_order,
            output_dir
        );
        if let Some(p) = &self.noise_passband {
            c.noise_passband = (p[0], p[1]);
        }
        if self.no_distortion {
            c.distortion = PolynomialDistortion::identity();
        } else if self.distortion_order.is_some() || self.distortion_scale.is_some() {
            c.distortion = PolynomialDistortion::alternating(
                self.distortion_order.unwrap_or(10),
                self.distortion_scale.unwrap_or(0.15),
            );
        }
        c.validate()?;
        Ok(c)
    }
}

fn emit_report(report: &DesignReport, path: Option<&Path>) -> Result<(), Error> {
    match path {
        Some(p) => std::fs::write(p, report.to_text()).map_err(|e| Error::Io {
            path: p.to_path_buf(),
            source: e,
        }),
        None => {
            print!("{}", report.to_text());
            Ok(())
        }
    }
}

fn design(args: &DesignArgs) -> Result<(), Error> {
    if args.reference.len() != args.distorted.len() {
        return Err(Error::LengthMismatch {
            expected: args.reference.len(),
            actual: args.distorted.len(),
        });
    }
    let pairs = args
        .reference
        .iter()
        .zip(&args.distorted)
        .map(|(x, v)| Ok((read_signal_csv(x)?, read_signal_csv(v)?)))
        .collect::<Result<Vec<_>, Error>>()?;
    let training = TrainingSet::new(pairs)?;
    let bits = (args.coeff_bits != 0).then_some(args.coeff_bits);
    let config = |activation| {
        let mut c = DesignConfig::baseline(args.n, activation);
        c.lambda = args.lambda;
        c.coeff_bits = bits;
        if let Some(g) = &args.bmax_grid {
            c.bmax_grid = g.clone();
        }
        c
    };
    let (lin, report): (Linearizer, DesignReport) = match args.method {
        MethodArg::Proposed => {
            let d = design_proposed(&training, &config(Activation::OneBit))?;
            (d.linearizer.into(), d.report)
        }
        MethodArg::Relu | MethodArg::Modulus => {
            let act = if matches!(args.method, MethodArg::Relu) {
                Activation::Relu
            } else {
                Activation::Modulus
            };
            let d = design_baseline_branch(&training, &config(act))?;
            (d.linearizer.into(), d.report)
        }
        MethodArg::Hammerstein => {
            let d = design_hammerstein(&training, args.n + 1, args.lambda, bits)?;
            (d.linearizer.into(), d.report)
        }
    };
    save_linearizer(&lin, &args.output)?;
    emit_report(&report, args.report.as_deref())
}

fn apply(args: &ApplyArgs) -> Result<(), Error> {
    let mut lin = load_linearizer(&args.linearizer)?;
    if args.lut {
        if let Linearizer::Branch(b) = &lin {
            lin = LutLinearizer::from_branch(b)?.into();
        }
    }
    let y = lin.apply(&read_signal_csv(&args.input)?)?;
    let comment = format!("lutlin {} {}", env!("CARGO_PKG_VERSION"), lin.describe());
    write_signal_csv(&args.output, &y, Some(&comment))
}

fn spectrum(args: &SpectrumArgs) -> Result<(), Error> {
    let window = match args.window {
        WindowArg::Hann => Window::Hann,
        WindowArg::Rectangular => Window::Rectangular,
    };
    let s = periodogram(&read_signal_csv(&args.input)?, window)?;
    let comment = format!("lutlin {}", env!("CARGO_PKG_VERSION"));
    write_spectrum_csv(&args.output, &s, Some(&comment))
}

fn generate(args: &GenerateArgs) -> Result<(), Error> {
    let config = args.experiment.resolve()?;
    let (x, v) = match args.kind {
        SignalKind::Multitone => multitone_pair(&config, args.index)?,
        SignalKind::Nullsub => nullsub_pair(&config, args.index)?,
        SignalKind::Bandpass => bandpass_pair(&config, args.index)?,
    };
    let comment = format!(
        "lutlin {} master_seed={} index={}",
        env!("CARGO_PKG_VERSION"),
        config.master_seed,
        args.index
    );
    write_signal_csv(&args.reference, &x, Some(&comment))?;
    write_signal_csv(&args.distorted, &v, Some(&comment))
}

fn example1(args: &ExperimentArgs) -> Result<(), Error> {
    let config = args.resolve()?;
    let run = run_example1(&config)?;
    println!(
        "uncorrected\tmean_sndr_db={:.3}\tvar_db={:.3}",
        run.uncorrected.stats.mean_db, run.uncorrected.stats.variance_db
    );
    println!(
        "undistorted\tmean_sndr_db={:.3}\tvar_db={:.3}",
        run.undistorted.mean_db, run.undistorted.variance_db
    );
    for cell in &run.cells {
        match &cell.outcome {
            Ok(m) => println!(
                "{}\tN={}\tmean_sndr_db={:.3}\tvar_db={:.3}\tmults={}\tadds={}",
                cell.method.name(),
                cell.n,
                m.evaluation.stats.mean_db,
                m.evaluation.stats.variance_db,
                m.mults,
                m.adds
            ),
            Err(e) => println!("{}\tN={}\tfailed\t{e}", cell.method.name(), cell.n),
        }
    }
    println!("output\t{}", run.dir.display());
    Ok(())
}

fn example2(args: &ExperimentArgs, linearizer: Option<&Path>) -> Result<(), Error> {
    let config = args.resolve()?;
    let path = linearizer
        .map(Path::to_path_buf)
        .unwrap_or_else(|| highlighted_linearizer_path(&config));
    if !path.exists() {
        return Err(Error::InvalidParameter(format!(
            "designed linearizer {} not found; run `lutlin example1` first or pass --linearizer",
            path.display()
        )));
    }
    let run = run_example2(&config, &load_linearizer(&path)?)?;
    for (name, e, d) in [
        ("example1", &run.reference, 0.0),
        ("nullsub", &run.nullsub, run.nullsub_degradation()),
        ("bandpass", &run.bandpass, run.bandpass_degradation()),
    ] {
        println!(
            "{name}\tmean_sndr_db={:.3}\tvar_db={:.3}\tdegradation_db={d:.3}",
            e.stats.mean_db, e.stats.variance_db
        );
    }
    println!("output\t{}", run.dir.display());
    Ok(())
}

fn run(cli: Cli) -> Result<(), Error> {
    match &cli.command {
        Command::Design(a) => design(a),
        Command::Apply(a) => apply(a),
        Command::Example1(a) => example1(a),
        Command::Example2 {
            experiment,
            linearizer,
        } => example2(experiment, linearizer.as_deref()),
        Command::VerifyLut(a) => {
            let config = a.resolve()?;
            for c in verify_lut(&config)? {
                println!(
                    "N={}\tlevels={}\tmax_discrepancy={:e}",
                    c.n, c.levels, c.max_discrepancy
                );
            }
            Ok(())
        }
        Command::Spectrum(a) => spectrum(a),
        Command::Generate(a) => generate(a),
        Command::Sndr { reference, input } => {
            let r = sndr(&read_signal_csv(reference)?, &read_signal_csv(input)?)?;
            println!(
                "sndr_db={:.6}\tsignal_power={:e}\terror_power={:e}",
                r.sndr_db, r.signal_power, r.error_power
            );
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => e.exit(),
        Err(e) => {
            let msg = e.to_string();
            let first = msg
                .lines()
                .next()
                .unwrap_or_default()
                .trim_start_matches("error: ");
            eprintln!("error\tusage\t{first}");
            return ExitCode::from(2);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!(
                "error\t{}\t{}",
                e.code(),
                e.to_string().replace(['\n', '\t'], " ")
            );
            ExitCode::FAILURE
        }
    }
}
