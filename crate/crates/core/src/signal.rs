//! Test-signal generation, memoryless polynomial distortion and uniform
//! amplitude quantization.
//!
//! Every random draw for one signal comes from a single ChaCha stream keyed by
//! a [`SignalSeed`], so ensembles are reproducible and independent of the
//! order in which signals are generated.

use std::f64::consts::{FRAC_PI_4, PI};

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// The four phases of a QPSK symbol.
pub const QPSK_PHASES: [f64; 4] = [FRAC_PI_4, -FRAC_PI_4, 3.0 * FRAC_PI_4, -3.0 * FRAC_PI_4];

/// Largest admissible frequency offset, in radians per sample.
pub const MAX_FREQ_OFFSET: f64 = PI / 64.0;

const PHASE_TOLERANCE: f64 = 1e-12;
const GAIN_REL_TOLERANCE: f64 = 1e-6;
/// Bisection upper bound, as a multiple of `1 / peak` of the unit-gain signal.
const GAIN_SEARCH_LIMIT: f64 = 4.0;

/// A finite, non-empty sequence of real samples. Index 0 holds sample `n = 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct Signal(Vec<f64>);

impl Signal {
    pub fn new(samples: Vec<f64>) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::Empty("signal"));
        }
        Ok(Signal(samples))
    }

    pub fn zeros(len: usize) -> Result<Self> {
        Self::new(vec![0.0; len])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn samples(&self) -> &[f64] {
        &self.0
    }

    pub fn into_samples(self) -> Vec<f64> {
        self.0
    }

    pub fn peak(&self) -> f64 {
        self.0.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Signal {
        Signal(self.0.iter().map(|&v| f(v)).collect())
    }

    pub fn scaled(&self, gain: f64) -> Signal {
        self.map(|v| gain * v)
    }

    /// Index of the first sample with magnitude above one (or NaN).
    pub fn first_out_of_range(&self) -> Option<(usize, f64)> {
        self.0
            .iter()
            .enumerate()
            .find(|(_, v)| !(v.abs() <= 1.0))
            .map(|(i, &v)| (i, v))
    }
}

impl AsRef<[f64]> for Signal {
    fn as_ref(&self) -> &[f64] {
        &self.0
    }
}

/// Identifies the random stream of one signal: a master seed and a stream id.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SignalSeed {
    pub master: u64,
    pub stream: u64,
}

impl SignalSeed {
    pub fn new(master: u64, stream: u64) -> Self {
        Self { master, stream }
    }

    /// Stream for signal `index` of ensemble `stage`.
    pub fn for_stage(master: u64, stage: u16, index: u64) -> Self {
        debug_assert!(index < 1 << 48);
        Self::new(master, (u64::from(stage) << 48) | index)
    }

    pub fn rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.master);
        rng.set_stream(self.stream);
        rng
    }
}

/// Memoryless polynomial distortion
/// `v = a0 + a1 x + sum_{p=2}^{P} a_p x^p`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolynomialDistortion {
    pub a0: f64,
    pub a1: f64,
    /// `a_p` for `p = 2, 3, ..., P`.
    pub ap: Vec<f64>,
}

impl PolynomialDistortion {
    pub fn identity() -> Self {
        Self {
            a0: 0.0,
            a1: 1.0,
            ap: Vec::new(),
        }
    }

    /// `a0 = 0`, `a1 = 1`, `a_p = (-1)^p * scale / p` for `p = 2..=order`.
    ///
    /// `alternating(10, 0.15)` is the distortion used by the bundled
    /// experiments.
    pub fn alternating(order: usize, scale: f64) -> Self {
        let ap = (2..=order)
            .map(|p| {
                let sign = if p % 2 == 0 { 1.0 } else { -1.0 };
                sign * scale / p as f64
            })
            .collect();
        Self { a0: 0.0, a1: 1.0, ap }
    }

    /// Highest power `P` (1 when there are no nonlinear terms).
    pub fn order(&self) -> usize {
        self.ap.len() + 1
    }

    /// Coefficient `a_p` of `x^p`.
    pub fn coefficient(&self, p: usize) -> f64 {
        match p {
            0 => self.a0,
            1 => self.a1,
            _ => self.ap.get(p - 2).copied().unwrap_or(0.0),
        }
    }

    /// Evaluates the polynomial at `x`, term by term in ascending power.
    #[inline]
    pub fn eval(&self, x: f64) -> f64 {
        let mut v = self.a0 + self.a1 * x;
        let mut power = x;
        for &a in &self.ap {
            power *= x;
            v += a * power;
        }
        v
    }
}

/// Pointwise application of the distortion model.
pub fn apply_distortion(model: &PolynomialDistortion, x: &Signal) -> Signal {
    x.map(|s| model.eval(s))
}

/// Multi-tone test signal `G * sum_k A_k sin(w_k n + alpha_k)`, with
/// `w_k = 2 pi k / total_subcarriers + dw`.
///
/// Tone `k` (1-based) lives at vector index `k - 1`. `phases` and
/// `freq_offset` left as `None` are drawn from the signal's seed stream.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MultiToneSpec {
    pub total_subcarriers: usize,
    pub active: Vec<bool>,
    pub amplitudes: Vec<f64>,
    pub phases: Option<Vec<f64>>,
    pub freq_offset: Option<f64>,
    pub gain: f64,
}

impl MultiToneSpec {
    /// 31 active unit-amplitude subcarriers of a 64-subcarrier grid with
    /// random QPSK phases and a random frequency offset.
    pub fn qpsk_random() -> Self {
        Self::qpsk_random_with(64, 31)
    }

    pub fn qpsk_random_with(total_subcarriers: usize, tones: usize) -> Self {
        Self {
            total_subcarriers,
            active: vec![true; tones],
            amplitudes: vec![1.0; tones],
            phases: None,
            freq_offset: None,
            gain: 1.0,
        }
    }

    /// Only tone `k` active, with the given phase and zero offset.
    pub fn single_tone(k: usize, phase: f64) -> Self {
        let mut spec = Self::qpsk_random();
        spec.active = (1..=31).map(|i| i == k).collect();
        spec.phases = Some(vec![phase; 31]);
        spec.freq_offset = Some(0.0);
        spec
    }

    pub fn tone_count(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn active_count(&self) -> usize {
        self.active.iter().filter(|&&a| a).count()
    }

    pub fn with_gain(&self, gain: f64) -> Self {
        Self { gain, ..self.clone() }
    }

    pub fn validate(&self) -> Result<()> {
        let tones = self.tone_count();
        if tones == 0 || tones >= self.total_subcarriers {
            return Err(Error::InvalidParameter(format!(
                "{tones} tones on a {}-subcarrier grid",
                self.total_subcarriers
            )));
        }
        if self.active.len() != tones {
            return Err(Error::LengthMismatch {
                expected: tones,
                actual: self.active.len(),
            });
        }
        if let Some(phases) = &self.phases {
            if phases.len() != tones {
                return Err(Error::LengthMismatch {
                    expected: tones,
                    actual: phases.len(),
                });
            }
            for (i, &p) in phases.iter().enumerate() {
                if !QPSK_PHASES.iter().any(|q| (q - p).abs() <= PHASE_TOLERANCE) {
                    return Err(Error::InvalidPhase {
                        tone: i + 1,
                        value: p,
                    });
                }
            }
        }
        if let Some(dw) = self.freq_offset {
            if !(dw.abs() <= MAX_FREQ_OFFSET) {
                return Err(Error::FrequencyOffsetOutOfRange(dw));
            }
        }
        if !self.gain.is_finite() {
            return Err(Error::InvalidParameter(format!("gain {}", self.gain)));
        }
        Ok(())
    }

    /// Fills in random phases and offset from the seed stream.
    pub fn resolve(&self, seed: SignalSeed) -> Result<MultiToneSpec> {
        self.resolve_with(&mut seed.rng())
    }

    fn resolve_with(&self, rng: &mut ChaCha8Rng) -> Result<MultiToneSpec> {
        self.validate()?;
        let mut out = self.clone();
        if out.phases.is_none() {
            out.phases = Some(
                (0..self.tone_count())
                    .map(|_| QPSK_PHASES[rng.random_range(0..4)])
                    .collect(),
            );
        }
        if out.freq_offset.is_none() {
            out.freq_offset = Some(rng.random_range(-MAX_FREQ_OFFSET..=MAX_FREQ_OFFSET));
        }
        Ok(out)
    }

    /// Resolves the spec and then nulls `num_nulled` randomly chosen active
    /// subcarriers, all from the same seed stream.
    pub fn with_nulls(&self, num_nulled: usize, seed: SignalSeed) -> Result<MultiToneSpec> {
        let active: Vec<usize> = (0..self.tone_count()).filter(|&i| self.active[i]).collect();
        if num_nulled >= active.len() {
            return Err(Error::InvalidParameter(format!(
                "cannot null {num_nulled} of {} active subcarriers",
                active.len()
            )));
        }
        let mut rng = seed.rng();
        let mut out = self.resolve_with(&mut rng)?;
        if num_nulled > 0 {
            for pick in sample(&mut rng, active.len(), num_nulled) {
                let i = active[pick];
                out.active[i] = false;
                out.amplitudes[i] = 0.0;
            }
        }
        Ok(out)
    }

    /// Evaluates a resolved spec.
    fn synthesize(&self, len: usize) -> Result<Signal> {
        let phases = self.phases.as_ref().expect("resolved spec");
        let dw = self.freq_offset.expect("resolved spec");
        let tones: Vec<(f64, f64, f64)> = (0..self.tone_count())
            .filter(|&i| self.active[i])
            .map(|i| {
                let k = (i + 1) as f64;
                let omega = 2.0 * PI * k / self.total_subcarriers as f64 + dw;
                (self.amplitudes[i], omega, phases[i])
            })
            .collect();
        let samples = (1..=len)
            .map(|n| {
                let n = n as f64;
                let s: f64 = tones
                    .iter()
                    .map(|&(a, omega, alpha)| a * (omega * n + alpha).sin())
                    .sum();
                self.gain * s
            })
            .collect();
        Signal::new(samples)
    }
}

/// Generates the multi-tone signal of `spec`; random fields come from `seed`.
pub fn gen_multitone(spec: &MultiToneSpec, len: usize, seed: SignalSeed) -> Result<Signal> {
    spec.resolve(seed)?.synthesize(len)
}

/// Like [`gen_multitone`] with `num_nulled` random active subcarriers set to
/// zero amplitude.
pub fn gen_nullsub_multitone(
    spec: &MultiToneSpec,
    num_nulled: usize,
    len: usize,
    seed: SignalSeed,
) -> Result<Signal> {
    spec.with_nulls(num_nulled, seed)?.synthesize(len)
}

/// White Gaussian noise through a linear-phase bandpass filter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BandpassNoiseSpec {
    /// Band edges as fractions of the Nyquist band, `0 <= lo < hi <= 1`.
    pub passband: (f64, f64),
    /// Filter order; the filter has `filter_order + 1` taps.
    pub filter_order: usize,
    /// Peak magnitude after normalization.
    pub peak_target: f64,
}

impl BandpassNoiseSpec {
    /// Band `[0.25 pi, 0.75 pi]`, order 128.
    pub fn half_band(peak_target: f64) -> Self {
        Self {
            passband: (0.25, 0.75),
            filter_order: 128,
            peak_target,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let (lo, hi) = self.passband;
        if !(0.0 <= lo && lo < hi && hi <= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "degenerate passband [{lo}, {hi}]"
            )));
        }
        if self.filter_order == 0 {
            return Err(Error::InvalidParameter("filter order 0".into()));
        }
        if !(self.peak_target > 0.0 && self.peak_target.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "peak target {}",
                self.peak_target
            )));
        }
        Ok(())
    }

    /// Hamming-windowed sinc bandpass taps.
    pub fn taps(&self) -> Vec<f64> {
        let (lo, hi) = self.passband;
        let order = self.filter_order as f64;
        let ideal = |t: f64, frac: f64| {
            if t == 0.0 {
                frac
            } else {
                (frac * PI * t).sin() / (PI * t)
            }
        };
        (0..=self.filter_order)
            .map(|i| {
                let t = i as f64 - order / 2.0;
                let window = 0.54 - 0.46 * (2.0 * PI * i as f64 / order).cos();
                window * (ideal(t, hi) - ideal(t, lo))
            })
            .collect()
    }
}

/// Seeded bandpass noise scaled so that its peak magnitude is
/// `spec.peak_target`.
pub fn gen_bandpass_noise(spec: &BandpassNoiseSpec, len: usize, seed: SignalSeed) -> Result<Signal> {
    spec.validate()?;
    if len <= spec.filter_order {
        return Err(Error::InvalidParameter(format!(
            "length {len} must exceed filter order {}",
            spec.filter_order
        )));
    }
    let taps = spec.taps();
    let mut rng = seed.rng();
    let noise: Vec<f64> = (0..len + spec.filter_order)
        .map(|_| rng.sample(StandardNormal))
        .collect();
    // steady-state part of the convolution only
    let filtered: Vec<f64> = noise
        .windows(taps.len())
        .map(|w| taps.iter().rev().zip(w).map(|(h, x)| h * x).sum())
        .collect();
    let peak = filtered.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if peak == 0.0 {
        return Err(Error::InvalidParameter(
            "filtered noise is identically zero".into(),
        ));
    }
    let scale = spec.peak_target / peak;
    Signal::new(filtered.into_iter().map(|v| v * scale).collect())
}

/// Midtread uniform quantizer with step `2 / 2^bits`, rounding half away
/// from zero and clamping to `[-1, 1 - step]`.
pub fn quantize_uniform(x: &Signal, bits: u32) -> Result<Signal> {
    if !(1..=52).contains(&bits) {
        return Err(Error::InvalidParameter(format!("{bits} quantizer bits")));
    }
    if let Some((index, value)) = x.first_out_of_range() {
        return Err(Error::SampleOutOfRange { index, value });
    }
    let step = 2.0 / 2f64.powi(bits as i32);
    let top = 1.0 - step;
    Ok(x.map(|s| ((s / step).round() * step).clamp(-1.0, top)))
}

/// Quantizer step for `bits`.
pub fn quantizer_step(bits: u32) -> f64 {
    2.0 / 2f64.powi(bits as i32)
}

/// Largest scale `g` for which `max |model(g * unit)| <= 1 - headroom`,
/// located by bisection on the realized distorted peak.
pub fn max_feasible_scale(unit: &Signal, model: &PolynomialDistortion, headroom: f64) -> Result<f64> {
    if !(headroom > 0.0 && headroom < 1.0) {
        return Err(Error::InvalidParameter(format!("headroom {headroom}")));
    }
    let bound = 1.0 - headroom;
    let peak = unit.peak();
    if peak == 0.0 {
        return Err(Error::InfeasibleGain("signal is identically zero".into()));
    }
    let feasible = |g: f64| unit.samples().iter().all(|&u| model.eval(g * u).abs() <= bound);
    if !feasible(0.0) {
        return Err(Error::InfeasibleGain(format!(
            "offset a0 = {} already exceeds {bound}",
            model.a0
        )));
    }
    let mut hi = GAIN_SEARCH_LIMIT / peak;
    if feasible(hi) {
        return Ok(hi);
    }
    let mut lo = 0.0;
    while hi - lo > GAIN_REL_TOLERANCE * hi {
        let mid = 0.5 * (lo + hi);
        if feasible(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    if lo == 0.0 {
        return Err(Error::InfeasibleGain("bisection collapsed to zero".into()));
    }
    Ok(lo)
}

/// Largest gain `G` such that the distorted multi-tone stays within
/// `1 - headroom` in magnitude.
pub fn normalize_gain(
    spec: &MultiToneSpec,
    model: &PolynomialDistortion,
    headroom: f64,
    len: usize,
    seed: SignalSeed,
) -> Result<f64> {
    let unit = spec.resolve(seed)?.with_gain(1.0).synthesize(len)?;
    max_feasible_scale(&unit, model, headroom)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn seed(i: u64) -> SignalSeed {
        SignalSeed::new(42, i)
    }

    #[test]
    fn single_tone_direct_substitution() {
        let spec = MultiToneSpec::single_tone(1, FRAC_PI_4);
        let x = gen_multitone(&spec, 64, seed(0)).unwrap();
        assert_abs_diff_eq!(x.samples()[15], 0.5f64.sqrt(), epsilon = 1e-12);
    }

    #[test]
    fn zero_gain_gives_zero_signal() {
        let spec = MultiToneSpec::qpsk_random().with_gain(0.0);
        let x = gen_multitone(&spec, 128, seed(3)).unwrap();
        assert_eq!(x.len(), 128);
        assert!(x.samples().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn rejects_bad_phase_and_offset() {
        let mut spec = MultiToneSpec::qpsk_random();
        spec.phases = Some(vec![0.1; 31]);
        assert!(matches!(
            gen_multitone(&spec, 8, seed(0)),
            Err(Error::InvalidPhase { tone: 1, .. })
        ));
        let mut spec = MultiToneSpec::qpsk_random();
        spec.freq_offset = Some(PI / 60.0);
        assert!(matches!(
            gen_multitone(&spec, 8, seed(0)),
            Err(Error::FrequencyOffsetOutOfRange(_))
        ));
    }

    #[test]
    fn resolved_phases_are_qpsk() {
        let spec = MultiToneSpec::qpsk_random().resolve(seed(9)).unwrap();
        spec.validate().unwrap();
        assert!(spec.freq_offset.unwrap().abs() <= MAX_FREQ_OFFSET);
    }

    #[test]
    fn nulling_zero_is_noop_and_all_is_rejected() {
        let spec = MultiToneSpec::qpsk_random();
        let a = gen_multitone(&spec, 256, seed(5)).unwrap();
        let b = gen_nullsub_multitone(&spec, 0, 256, seed(5)).unwrap();
        assert_eq!(a, b);
        assert!(gen_nullsub_multitone(&spec, 31, 256, seed(5)).is_err());
        let nulled = spec.with_nulls(8, seed(5)).unwrap();
        assert_eq!(nulled.active_count(), 23);
    }

    #[test]
    fn distortion_examples() {
        let model = PolynomialDistortion::alternating(10, 0.15);
        assert_eq!(model.eval(0.0), 0.0);
        // term-by-term oracle
        let oracle = 1.0
            + 0.15
                * (2..=10)
                    .map(|p| if p % 2 == 0 { 1.0 } else { -1.0 } / p as f64)
                    .sum::<f64>();
        assert_abs_diff_eq!(model.eval(1.0), oracle, epsilon = 1e-15);
        assert_abs_diff_eq!(model.eval(1.0), 1.053155, epsilon = 1e-6);
        assert_eq!(model.coefficient(2), 0.075);
        assert_eq!(model.order(), 10);

        let x = Signal::new(vec![-0.7, 0.0, 0.3, 1.0]).unwrap();
        assert_eq!(apply_distortion(&PolynomialDistortion::identity(), &x), x);
    }

    #[test]
    fn quantizer_examples() {
        let x = Signal::new(vec![0.0, 1.0 / 256.0, -1.0 / 256.0, 1.0, -1.0]).unwrap();
        let q = quantize_uniform(&x, 8).unwrap();
        assert_eq!(
            q.samples(),
            &[0.0, 1.0 / 128.0, -1.0 / 128.0, 1.0 - 1.0 / 128.0, -1.0]
        );
        let bad = Signal::new(vec![0.0, 0.5, -1.5]).unwrap();
        assert!(matches!(
            quantize_uniform(&bad, 8),
            Err(Error::SampleOutOfRange { index: 2, .. })
        ));
        assert!(quantize_uniform(&x, 0).is_err());
    }

    #[test]
    fn bandpass_examples() {
        let spec = BandpassNoiseSpec::half_band(0.9);
        let x = gen_bandpass_noise(&spec, 1024, seed(1)).unwrap();
        assert_abs_diff_eq!(x.peak(), 0.9, epsilon = 1e-12);
        assert!(gen_bandpass_noise(&spec, 128, seed(1)).is_err());
        let mut degenerate = spec.clone();
        degenerate.passband = (0.5, 0.5);
        assert!(gen_bandpass_noise(&degenerate, 1024, seed(1)).is_err());
        assert_eq!(gen_bandpass_noise(&spec, 1024, seed(1)).unwrap(), x);
    }

    #[test]
    fn gain_for_unit_tone_is_one_minus_headroom() {
        let spec = MultiToneSpec::single_tone(1, FRAC_PI_4);
        let h = 2f64.powi(-8);
        let g = normalize_gain(&spec, &PolynomialDistortion::identity(), h, 256, seed(0)).unwrap();
        assert!((g - (1.0 - h)).abs() <= 1e-6 * (1.0 - h));
        assert!(g <= 1.0 - h);
    }

    #[test]
    fn gain_rejects_bad_headroom_and_offset() {
        let spec = MultiToneSpec::qpsk_random();
        let model = PolynomialDistortion::identity();
        assert!(normalize_gain(&spec, &model, 0.0, 64, seed(0)).is_err());
        let offset = PolynomialDistortion { a0: 1.0, ..model };
        assert!(matches!(
            normalize_gain(&spec, &offset, 0.1, 64, seed(0)),
            Err(Error::InfeasibleGain(_))
        ));
    }
}
