//! BPSK chip mapping, root-raised-cosine shaping and matched filtering,
//! and complex frequency mixing.

use num_complex::Complex64;
use std::f64::consts::PI;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum WaveformError {
    #[error("invalid RRC spec: {0}")]
    InvalidSpec(String),
    #[error("mixing by {frequency} Hz aliases at sample rate {sample_rate} Hz")]
    AliasRisk { frequency: f64, sample_rate: f64 },
}

/// Complex baseband samples at a known rate.
#[derive(Debug, Clone, PartialEq)]
pub struct IqBuffer {
    pub samples: Vec<Complex64>,
    pub sample_rate: f64,
}

impl IqBuffer {
    pub fn new(samples: Vec<Complex64>, sample_rate: f64) -> Self {
        debug_assert!(sample_rate > 0.0);
        Self {
            samples,
            sample_rate,
        }
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Mean of |x|^2; zero for an empty buffer.
    pub fn mean_power(&self) -> f64 {
        mean_power(&self.samples)
    }

    pub fn is_finite(&self) -> bool {
        self.samples
            .iter()
            .all(|s| s.re.is_finite() && s.im.is_finite())
    }
}

pub fn mean_power(samples: &[Complex64]) -> f64 {
    if samples.is_empty() {
        return 0.0;
    }
    samples.iter().map(|s| s.norm_sqr()).sum::<f64>() / samples.len() as f64
}

/// Root-raised-cosine filter parameters. `sps` is samples per chip.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RrcSpec {
    pub rolloff: f64,
    /// Filter length in chips.
    pub span: usize,
    pub sps: usize,
}

impl RrcSpec {
    pub const DEFAULT_ROLLOFF: f64 = 0.35;
    pub const DEFAULT_SPAN: usize = 11;

    pub fn new(sps: usize) -> Self {
        Self {
            rolloff: Self::DEFAULT_ROLLOFF,
            span: Self::DEFAULT_SPAN,
            sps,
        }
    }

    pub fn num_taps(&self) -> usize {
        self.span * self.sps + 1
    }

    /// Combined transmit + receive group delay in samples.
    pub fn chain_delay(&self) -> usize {
        self.span * self.sps
    }

    fn validate(&self) -> Result<(), WaveformError> {
        if !(self.rolloff > 0.0 && self.rolloff <= 1.0) {
            return Err(WaveformError::InvalidSpec(format!(
                "rolloff {} not in (0, 1]",
                self.rolloff
            )));
        }
        if self.sps == 0 || self.span == 0 {
            return Err(WaveformError::InvalidSpec(
                "span and sps must be positive".into(),
            ));
        }
        if !(self.span * self.sps).is_multiple_of(2) {
            return Err(WaveformError::InvalidSpec("span * sps must be even".into()));
        }
        Ok(())
    }
}

/// Chip 1 maps to +1, chip 0 to -1.
pub fn chips_to_symbols(chips: &[u8], chip_rate: f64) -> IqBuffer {
    let samples = chips
        .iter()
        .map(|&c| Complex64::new(if c & 1 == 1 { 1.0 } else { -1.0 }, 0.0))
        .collect();
    IqBuffer::new(samples, chip_rate)
}

/// Hard decision on the in-phase component: positive is chip 1.
pub fn slice(soft: &[Complex64]) -> Vec<u8> {
    soft.iter().map(|s| u8::from(s.re > 0.0)).collect()
}

/// Unit-energy root-raised-cosine impulse response, `span * sps + 1` taps.
pub fn rrc_taps(spec: &RrcSpec) -> Result<Vec<f64>, WaveformError> {
    spec.validate()?;
    let a = spec.rolloff;
    let n = spec.num_taps();
    let center = (n - 1) as f64 / 2.0;
    let singular = 1.0 / (4.0 * a);
    let mut taps: Vec<f64> = (0..n)
        .map(|k| {
            // Time in chip periods.
            let t = (k as f64 - center) / spec.sps as f64;
            if t.abs() < 1e-12 {
                1.0 - a + 4.0 * a / PI
            } else if (t.abs() - singular).abs() < 1e-9 {
                let x = PI / (4.0 * a);
                a / 2f64.sqrt() * ((1.0 + 2.0 / PI) * x.sin() + (1.0 - 2.0 / PI) * x.cos())
            } else {
                let num = (PI * t * (1.0 - a)).sin() + 4.0 * a * t * (PI * t * (1.0 + a)).cos();
                let den = PI * t * (1.0 - (4.0 * a * t).powi(2));
                num / den
            }
        })
        .collect();
    let norm = taps.iter().map(|h| h * h).sum::<f64>().sqrt();
    taps.iter_mut().for_each(|h| *h /= norm);
    Ok(taps)
}

/// Full linear convolution of a complex signal with real taps.
pub fn convolve(x: &[Complex64], taps: &[f64]) -> Vec<Complex64> {
    if x.is_empty() || taps.is_empty() {
        return Vec::new();
    }
    let m = taps.len();
    let mut padded = vec![Complex64::new(0.0, 0.0); x.len() + 2 * (m - 1)];
    padded[m - 1..m - 1 + x.len()].copy_from_slice(x);
    let rev: Vec<f64> = taps.iter().rev().copied().collect();
    (0..x.len() + m - 1)
        .map(|n| {
            let window = &padded[n..n + m];
            let (mut re, mut im) = (0.0, 0.0);
            for (s, h) in window.iter().zip(&rev) {
                re += s.re * h;
                im += s.im * h;
            }
            Complex64::new(re, im)
        })
        .collect()
}

/// Upsamples chip-rate symbols by `sps` through the RRC filter. The output is
/// scaled by `sqrt(sps)` so unit-power symbols give a unit-power waveform.
/// Length is `n * sps + span * sps`.
pub fn pulse_shape(symbols: &IqBuffer, spec: &RrcSpec) -> Result<IqBuffer, WaveformError> {
    let taps = rrc_taps(spec)?;
    let sample_rate = symbols.sample_rate * spec.sps as f64;
    if symbols.is_empty() {
        return Ok(IqBuffer::new(Vec::new(), sample_rate));
    }
    let gain = (spec.sps as f64).sqrt();
    let scaled: Vec<f64> = taps.iter().map(|h| h * gain).collect();
    let len = symbols.len() * spec.sps + taps.len() - 1;
    let mut out = vec![Complex64::new(0.0, 0.0); len];
    for (i, s) in symbols.samples.iter().enumerate() {
        let base = i * spec.sps;
        for (o, h) in out[base..base + scaled.len()].iter_mut().zip(&scaled) {
            *o += s * h;
        }
    }
    Ok(IqBuffer::new(out, sample_rate))
}

/// Filters with the same unit-energy RRC taps as the transmitter.
pub fn matched_filter(samples: &IqBuffer, spec: &RrcSpec) -> Result<IqBuffer, WaveformError> {
    let taps = rrc_taps(spec)?;
    Ok(IqBuffer::new(
        convolve(&samples.samples, &taps),
        samples.sample_rate,
    ))
}

/// Streaming FIR with real taps; keeps the last `taps.len() - 1` inputs.
#[derive(Debug, Clone)]
pub struct FirFilter {
    taps: Vec<f64>,
    history: Vec<Complex64>,
}

impl FirFilter {
    pub fn new(taps: Vec<f64>) -> Self {
        let history = vec![Complex64::new(0.0, 0.0); taps.len().saturating_sub(1)];
        Self { taps, history }
    }

    pub fn rrc(spec: &RrcSpec) -> Result<Self, WaveformError> {
        Ok(Self::new(rrc_taps(spec)?))
    }

    pub fn taps(&self) -> &[f64] {
        &self.taps
    }

    /// Filters one block; output has the same length as `input`.
    pub fn process(&mut self, input: &[Complex64]) -> Vec<Complex64> {
        let m = self.taps.len();
        if m == 0 {
            return vec![Complex64::new(0.0, 0.0); input.len()];
        }
        let mut buf = std::mem::take(&mut self.history);
        buf.extend_from_slice(input);
        let rev: Vec<f64> = self.taps.iter().rev().copied().collect();
        let out = buf
            .windows(m)
            .map(|w| {
                let (mut re, mut im) = (0.0, 0.0);
                for (s, h) in w.iter().zip(&rev) {
                    re += s.re * h;
                    im += s.im * h;
                }
                Complex64::new(re, im)
            })
            .collect();
        self.history = buf.split_off(buf.len() - (m - 1));
        out
    }
}

fn check_alias(frequency: f64, sample_rate: f64) -> Result<(), WaveformError> {
    if frequency.abs() >= sample_rate / 2.0 || !frequency.is_finite() {
        return Err(WaveformError::AliasRisk {
            frequency,
            sample_rate,
        });
    }
    Ok(())
}

/// Multiplies sample `n` by `exp(i 2 pi f n / fs)`.
pub fn mix(samples: &IqBuffer, frequency: f64) -> Result<IqBuffer, WaveformError> {
    mix_with_phase(samples, frequency, 0.0)
}

/// Like [`mix`] with an additional static phase offset in radians.
pub fn mix_with_phase(
    samples: &IqBuffer,
    frequency: f64,
    phase: f64,
) -> Result<IqBuffer, WaveformError> {
    check_alias(frequency, samples.sample_rate)?;
    let step = 2.0 * PI * frequency / samples.sample_rate;
    let out = samples
        .samples
        .iter()
        .enumerate()
        .map(|(n, s)| s * Complex64::cis(phase + step * n as f64))
        .collect();
    Ok(IqBuffer::new(out, samples.sample_rate))
}
