//! Measurement harness: metrics, theory curves, spectrum and SNR
//! estimation, I/Q files and the loopback experiments.

mod experiment;
mod iq;
mod metrics;
mod psd;
mod snr;
pub mod theory;

pub use experiment::*;
pub use iq::{iq_read, iq_write};
pub use metrics::*;
pub use psd::{bandwidth_at, peak_index, psd, PsdPoint};
pub use snr::{estimate_snr, MIN_SNR_SAMPLES, SNR_CEILING_DB, SNR_FLOOR_DB};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("compared sequences differ in length ({sent} vs {received})")]
    LengthMismatch { sent: usize, received: usize },
    #[error("need at least {need} samples, got {have}")]
    TooFewSamples { have: usize, need: usize },
    #[error("FFT size {fft_size} must be a power of two no larger than the input ({len})")]
    InvalidFftSize { fft_size: usize, len: usize },
    #[error("I/Q file holds {0} floats, which is not a whole number of samples")]
    OddFloatCount(usize),
    #[error("experiment: {0}")]
    Experiment(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
