//! Simulated RF path: gain, fractional delay, carrier offset and AWGN.

use crate::waveform::{mix_with_phase, IqBuffer, WaveformError};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use thiserror::Error;

/// Full-scale transmit amplitude.
pub const MAX_AMPLITUDE: u16 = 32767;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ChannelError {
    #[error("cannot set a finite SNR on a zero-power signal")]
    ZeroSignal,
    #[error("amplitude {0} exceeds {MAX_AMPLITUDE}")]
    AmplitudeOutOfRange(u16),
    #[error("delay {0} must be finite and non-negative")]
    InvalidDelay(f64),
    #[error("SNR must not be NaN")]
    InvalidSnr,
    #[error(transparent)]
    Waveform(#[from] WaveformError),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelConfig {
    /// Ratio of signal power to noise power over the full simulated
    /// bandwidth. `f64::INFINITY` disables noise.
    pub snr_db: f64,
    /// Transmit amplitude, 0..=32767, mapped to linear gain `amplitude / 32767`.
    pub amplitude: u16,
    pub cfo_hz: f64,
    pub phase_rad: f64,
    pub delay_samples: f64,
    pub seed: u64,
    /// Signal power used to size the noise. `None` measures it from the
    /// input; bursty signals with idle gaps should pass the active-region
    /// power instead. Gain is applied on top either way.
    pub signal_power: Option<f64>,
}

impl Default for ChannelConfig {
    fn default() -> Self {
        Self {
            snr_db: f64::INFINITY,
            amplitude: MAX_AMPLITUDE,
            cfo_hz: 0.0,
            phase_rad: 0.0,
            delay_samples: 0.0,
            seed: 0,
            signal_power: None,
        }
    }
}

impl ChannelConfig {
    pub fn gain(&self) -> f64 {
        f64::from(self.amplitude) / f64::from(MAX_AMPLITUDE)
    }
}

/// Delays by a non-negative, possibly fractional, number of samples using
/// linear interpolation. The output grows by `ceil(delay)` samples.
pub fn fractional_delay(samples: &[Complex64], delay: f64) -> Vec<Complex64> {
    let whole = delay.floor() as usize;
    let frac = delay - whole as f64;
    if frac == 0.0 {
        let mut out = vec![Complex64::new(0.0, 0.0); whole];
        out.extend_from_slice(samples);
        return out;
    }
    let zero = Complex64::new(0.0, 0.0);
    let at = |i: isize| -> Complex64 {
        if i >= 0 && (i as usize) < samples.len() {
            samples[i as usize]
        } else {
            zero
        }
    };
    (0..samples.len() + whole + 1)
        .map(|n| {
            let k = n as isize - whole as isize;
            at(k) * (1.0 - frac) + at(k - 1) * frac
        })
        .collect()
}

/// Adds circularly-symmetric Gaussian noise of total variance
/// `signal_power / 10^(snr_db / 10)`.
pub fn add_noise(
    samples: &mut [Complex64],
    snr_db: f64,
    signal_power: f64,
    rng: &mut impl rand::Rng,
) -> Result<(), ChannelError> {
    if snr_db.is_nan() {
        return Err(ChannelError::InvalidSnr);
    }
    if snr_db == f64::INFINITY {
        return Ok(());
    }
    if signal_power <= 0.0 {
        return Err(ChannelError::ZeroSignal);
    }
    let sigma = (signal_power / 10f64.powf(snr_db / 10.0) / 2.0).sqrt();
    for s in samples.iter_mut() {
        let re: f64 = StandardNormal.sample(rng);
        let im: f64 = StandardNormal.sample(rng);
        *s += Complex64::new(re * sigma, im * sigma);
    }
    Ok(())
}

/// AWGN at `snr_db` relative to the measured input power, reproducible from `seed`.
pub fn awgn(samples: &IqBuffer, snr_db: f64, seed: u64) -> Result<IqBuffer, ChannelError> {
    let mut out = samples.clone();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    add_noise(&mut out.samples, snr_db, samples.mean_power(), &mut rng)?;
    Ok(out)
}

/// `awgn(mix(delay(scale(x)), cfo, phase), snr)`.
pub fn apply_channel(samples: &IqBuffer, config: &ChannelConfig) -> Result<IqBuffer, ChannelError> {
    if config.amplitude > MAX_AMPLITUDE {
        return Err(ChannelError::AmplitudeOutOfRange(config.amplitude));
    }
    if !(config.delay_samples.is_finite() && config.delay_samples >= 0.0) {
        return Err(ChannelError::InvalidDelay(config.delay_samples));
    }
    let gain = config.gain();
    let scaled: Vec<Complex64> = samples.samples.iter().map(|s| s * gain).collect();
    let delayed = IqBuffer::new(
        fractional_delay(&scaled, config.delay_samples),
        samples.sample_rate,
    );
    let mut out = if config.cfo_hz == 0.0 && config.phase_rad == 0.0 {
        delayed
    } else {
        mix_with_phase(&delayed, config.cfo_hz, config.phase_rad)?
    };
    let power = match config.signal_power {
        Some(p) => p * gain * gain,
        None => samples.mean_power() * gain * gain,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    add_noise(&mut out.samples, config.snr_db, power, &mut rng)?;
    Ok(out)
}
