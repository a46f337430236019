use super::HarnessError;
use num_complex::Complex64;
use rustfft::FftPlanner;
use std::f64::consts::PI;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PsdPoint {
    pub frequency_hz: f64,
    pub power_db: f64,
}

/// Welch power spectral density: Hann-windowed segments of `fft_size` with
/// 50% overlap, averaged. Bins run from -fs/2 upward; power is in dB
/// relative to unit power per Hz.
pub fn psd(
    samples: &[Complex64],
    sample_rate: f64,
    fft_size: usize,
) -> Result<Vec<PsdPoint>, HarnessError> {
    if !fft_size.is_power_of_two() || fft_size < 2 || fft_size > samples.len() {
        return Err(HarnessError::InvalidFftSize {
            fft_size,
            len: samples.len(),
        });
    }
    let window: Vec<f64> = (0..fft_size)
        .map(|n| 0.5 - 0.5 * (2.0 * PI * n as f64 / fft_size as f64).cos())
        .collect();
    let window_energy: f64 = window.iter().map(|w| w * w).sum();
    let fft = FftPlanner::new().plan_fft_forward(fft_size);
    let hop = fft_size / 2;
    let mut acc = vec![0.0; fft_size];
    let mut segments = 0usize;
    let mut buf = vec![Complex64::new(0.0, 0.0); fft_size];
    let mut start = 0;
    while start + fft_size <= samples.len() {
        for ((b, s), w) in buf
            .iter_mut()
            .zip(&samples[start..start + fft_size])
            .zip(&window)
        {
            *b = s * w;
        }
        fft.process(&mut buf);
        for (a, b) in acc.iter_mut().zip(&buf) {
            *a += b.norm_sqr();
        }
        segments += 1;
        start += hop;
    }
    let scale = 1.0 / (segments as f64 * window_energy * sample_rate);
    let half = fft_size / 2;
    Ok((0..fft_size)
        .map(|i| {
            // fftshift: output index i holds bin (i + half) mod N.
            let bin = (i + half) % fft_size;
            let frequency_hz = (i as f64 - half as f64) * sample_rate / fft_size as f64;
            PsdPoint {
                frequency_hz,
                power_db: 10.0 * (acc[bin] * scale).max(1e-300).log10(),
            }
        })
        .collect())
}

/// Index of the strongest bin.
pub fn peak_index(psd: &[PsdPoint]) -> usize {
    psd.iter()
        .enumerate()
        .max_by(|a, b| a.1.power_db.total_cmp(&b.1.power_db))
        .map(|(i, _)| i)
        .unwrap_or(0)
}

/// Width of the contiguous region around the peak that stays within
/// `drop_db` of it, with edges linearly interpolated between bins.
pub fn bandwidth_at(psd: &[PsdPoint], drop_db: f64) -> f64 {
    let peak = peak_index(psd);
    let level = psd[peak].power_db - drop_db;
    let crossing = |inside: usize, outside: usize| -> f64 {
        let (a, b) = (psd[inside], psd[outside]);
        let t = (a.power_db - level) / (a.power_db - b.power_db);
        a.frequency_hz + t * (b.frequency_hz - a.frequency_hz)
    };
    let mut hi = peak;
    while hi + 1 < psd.len() && psd[hi + 1].power_db >= level {
        hi += 1;
    }
    let upper = if hi + 1 < psd.len() {
        crossing(hi, hi + 1)
    } else {
        psd[hi].frequency_hz
    };
    let mut lo = peak;
    while lo > 0 && psd[lo - 1].power_db >= level {
        lo -= 1;
    }
    let lower = if lo > 0 {
        crossing(lo, lo - 1)
    } else {
        psd[lo].frequency_hz
    };
    upper - lower
}
