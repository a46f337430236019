//! Software modem for the IEEE 802.15.4 868/915 MHz PHY: DSSS spreading with
//! differential BPSK, RRC pulse shaping, a synchronizing receiver with packet
//! sink, a channel simulator and a BER/PER measurement harness.

pub mod channel;
pub mod exec;
pub mod framing;
pub mod harness;
pub mod modem;
pub mod rateplan;
pub mod spreading;
pub mod sync;
pub mod waveform;

pub use num_complex::Complex64;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("framing: {0}")]
    Frame(#[from] framing::FrameError),
    #[error("waveform: {0}")]
    Waveform(#[from] waveform::WaveformError),
    #[error("channel: {0}")]
    Channel(#[from] channel::ChannelError),
    #[error("rate plan: {0}")]
    Rate(#[from] rateplan::RateError),
    #[error("harness: {0}")]
    Harness(#[from] harness::HarnessError),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}
