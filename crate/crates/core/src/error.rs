use std::path::PathBuf;

use thiserror::Error;

/// Errors produced across the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("phase {value} is not a QPSK phase (tone k = {tone})")]
    InvalidPhase { tone: usize, value: f64 },

    #[error("frequency offset {0} outside [-pi/64, pi/64]")]
    FrequencyOffsetOutOfRange(f64),

    #[error("sample {index} has magnitude {value} > 1")]
    SampleOutOfRange { index: usize, value: f64 },

    #[error("length mismatch: expected {expected}, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },

    #[error("no feasible gain: {0}")]
    InfeasibleGain(String),

    #[error("look-up table realization needs one-bit activation with the proposed bias schedule: {0}")]
    NotLutCompatible(String),

    #[error("normal equations are singular or ill-conditioned ({0}); use lambda > 0")]
    IllConditioned(String),

    #[error("normal-equation residual {residual:e} exceeds {limit:e}")]
    ResidualTooLarge { residual: f64, limit: f64 },

    #[error("transform length {0} is not a power of two")]
    NotPowerOfTwo(usize),

    #[error("empty spectrum: signal has no energy")]
    EmptySpectrum,

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("LUT mismatch at N = {n}, level {level}: branch {branch} vs lut {lut}")]
    LutMismatch {
        n: usize,
        level: f64,
        branch: f64,
        lut: f64,
    },

    #[error("parse error in {context}: {message}")]
    Parse { context: String, message: String },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// Short stable identifier, used for machine-readable error lines.
    pub fn code(&self) -> &'static str {
        match self {
            Error::InvalidParameter(_) => "invalid_parameter",
            Error::InvalidPhase { .. } => "invalid_phase",
            Error::FrequencyOffsetOutOfRange(_) => "frequency_offset",
            Error::SampleOutOfRange { .. } => "sample_out_of_range",
            Error::LengthMismatch { .. } => "length_mismatch",
            Error::InfeasibleGain(_) => "infeasible_gain",
            Error::NotLutCompatible(_) => "not_lut_compatible",
            Error::IllConditioned(_) => "ill_conditioned",
            Error::ResidualTooLarge { .. } => "residual",
            Error::NotPowerOfTwo(_) => "not_power_of_two",
            Error::EmptySpectrum => "empty_spectrum",
            Error::Empty(_) => "empty",
            Error::LutMismatch { .. } => "lut_mismatch",
            Error::Parse { .. } => "parse",
            Error::Io { .. } => "io",
            Error::Csv(_) => "csv",
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(context: impl Into<String>, message: impl ToString) -> Self {
        Error::Parse {
            context: context.into(),
            message: message.to_string(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
