//! SNDR, ensemble statistics and periodograms.

use std::f64::consts::PI;

use rayon::prelude::*;
use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use crate::error::{Error, Result};
use crate::linearizer::Linearizer;
use crate::numeric::{sum, CompensatedSum};
use crate::signal::Signal;

/// Reported when the error power is exactly zero.
pub const SNDR_CEILING_DB: f64 = 200.0;

/// Floor for peak-normalized spectrum bins with zero power.
pub const SPECTRUM_FLOOR_DB: f64 = -400.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SndrReport {
    pub sndr_db: f64,
    pub signal_power: f64,
    pub error_power: f64,
}

/// Reference power over `(y - x_ref)` power, in dB.
pub fn sndr(x_ref: &Signal, y: &Signal) -> Result<SndrReport> {
    if x_ref.len() != y.len() {
        return Err(Error::LengthMismatch {
            expected: x_ref.len(),
            actual: y.len(),
        });
    }
    let len = x_ref.len() as f64;
    let mut sig = CompensatedSum::new();
    let mut err = CompensatedSum::new();
    for (&a, &b) in x_ref.samples().iter().zip(y.samples()) {
        sig.add(a * a);
        let e = b - a;
        err.add(e * e);
    }
    let signal_power = sig.value() / len;
    let error_power = err.value() / len;
    let sndr_db = if error_power > 0.0 {
        (10.0 * (signal_power / error_power).log10()).min(SNDR_CEILING_DB)
    } else {
        SNDR_CEILING_DB
    };
    Ok(SndrReport {
        sndr_db,
        signal_power,
        error_power,
    })
}

/// Mean and spread of per-signal SNDR values in dB.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnsembleStats {
    pub count: usize,
    pub mean_db: f64,
    /// Population variance (divides by `M`).
    pub variance_db: f64,
    pub std_db: f64,
}

impl EnsembleStats {
    pub fn from_values(values: &[f64]) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::Empty("ensemble"));
        }
        let m = values.len() as f64;
        let mean_db = sum(values.iter().copied()) / m;
        let variance_db = sum(values.iter().map(|v| (v - mean_db) * (v - mean_db))) / m;
        Ok(Self {
            count: values.len(),
            mean_db,
            variance_db,
            std_db: variance_db.sqrt(),
        })
    }

    /// Structured text summary.
    pub fn to_text(&self, linearizer: &str) -> String {
        format!(
            "linearizer = {linearizer}\nM = {}\nmean_sndr_db = {:.6}\nvar_db = {:.6}\nstd_db = {:.6}\n",
            self.count, self.mean_db, self.variance_db, self.std_db
        )
    }
}

/// Per-signal SNDR values plus their statistics.
#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleResult {
    pub per_signal: Vec<f64>,
    pub stats: EnsembleStats,
}

/// Applies `lin` to every distorted signal and compares against its
/// reference. Signals are processed in parallel; results keep input order.
pub fn ensemble_sndr(lin: &Linearizer, pairs: &[(Signal, Signal)]) -> Result<EnsembleResult> {
    let per_signal = pairs
        .par_iter()
        .map(|(x, v)| Ok(sndr(x, &lin.apply(v)?)?.sndr_db))
        .collect::<Result<Vec<f64>>>()?;
    let stats = EnsembleStats::from_values(&per_signal)?;
    Ok(EnsembleResult { per_signal, stats })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Window {
    Rectangular,
    #[default]
    Hann,
}

impl Window {
    /// Periodic window of length `len`.
    fn coefficients(self, len: usize) -> Vec<f64> {
        match self {
            Window::Rectangular => vec![1.0; len],
            Window::Hann => (0..len)
                .map(|n| 0.5 - 0.5 * (2.0 * PI * n as f64 / len as f64).cos())
                .collect(),
        }
    }
}

/// One-sided power spectrum on `L/2 + 1` bins over `[0, pi]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    /// Bin frequencies in units of pi.
    pub omega_over_pi: Vec<f64>,
    /// Power per bin; sums to the (windowed) mean-square of the input.
    pub power: Vec<f64>,
    /// `power` in dB relative to the largest bin.
    pub power_db: Vec<f64>,
}

impl Spectrum {
    pub fn total_power(&self) -> f64 {
        sum(self.power.iter().copied())
    }

    /// Sum of the power in bins whose frequency lies in `[lo, hi]` (units of pi).
    pub fn band_power(&self, lo: f64, hi: f64) -> f64 {
        sum(self
            .omega_over_pi
            .iter()
            .zip(&self.power)
            .filter(|(w, _)| **w >= lo && **w <= hi)
            .map(|(_, p)| *p))
    }
}

pub fn periodogram(y: &Signal, window: Window) -> Result<Spectrum> {
    let len = y.len();
    if !len.is_power_of_two() || len < 2 {
        return Err(Error::NotPowerOfTwo(len));
    }
    let w = window.coefficients(len);
    let mut buf: Vec<Complex<f64>> = y
        .samples()
        .iter()
        .zip(&w)
        .map(|(&s, &c)| Complex::new(s * c, 0.0))
        .collect();
    FftPlanner::new().plan_fft_forward(len).process(&mut buf);
    let scale = 1.0 / (len as f64 * len as f64);
    let half = len / 2;
    let power: Vec<f64> = (0..=half)
        .map(|k| {
            let p = buf[k].norm_sqr() * scale;
            if k == 0 || k == half {
                p
            } else {
                2.0 * p
            }
        })
        .collect();
    let peak = power.iter().copied().fold(0.0, f64::max);
    if peak == 0.0 {
        return Err(Error::EmptySpectrum);
    }
    let power_db = power
        .iter()
        .map(|&p| {
            if p > 0.0 {
                (10.0 * (p / peak).log10()).max(SPECTRUM_FLOOR_DB)
            } else {
                SPECTRUM_FLOOR_DB
            }
        })
        .collect();
    let omega_over_pi = (0..=half).map(|k| k as f64 / half as f64).collect();
    Ok(Spectrum {
        omega_over_pi,
        power,
        power_db,
    })
}
