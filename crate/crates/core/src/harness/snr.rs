use super::HarnessError;
use num_complex::Complex64;

pub const MIN_SNR_SAMPLES: usize = 10_000;
pub const SNR_FLOOR_DB: f64 = -10.0;
pub const SNR_CEILING_DB: f64 = 30.0;

/// Blind second/fourth-moment SNR estimate for a constant-modulus signal in
/// complex Gaussian noise, clamped to [-10, 30] dB.
///
/// With `M2 = E|y|^2` and `M4 = E|y|^4`, signal power is
/// `sqrt(2 M2^2 - M4)` and noise power the remainder of `M2`.
pub fn estimate_snr(samples: &[Complex64]) -> Result<f64, HarnessError> {
    if samples.len() < MIN_SNR_SAMPLES {
        return Err(HarnessError::TooFewSamples {
            have: samples.len(),
            need: MIN_SNR_SAMPLES,
        });
    }
    let n = samples.len() as f64;
    let (m2, m4) = samples.iter().fold((0.0, 0.0), |(a, b), s| {
        let p = s.norm_sqr();
        (a + p, b + p * p)
    });
    let (m2, m4) = (m2 / n, m4 / n);
    let disc = 2.0 * m2 * m2 - m4;
    if disc <= 0.0 || m2 == 0.0 {
        return Ok(SNR_FLOOR_DB);
    }
    let signal = disc.sqrt();
    let noise = m2 - signal;
    if noise <= 0.0 {
        return Ok(SNR_CEILING_DB);
    }
    Ok((10.0 * (signal / noise).log10()).clamp(SNR_FLOOR_DB, SNR_CEILING_DB))
}
