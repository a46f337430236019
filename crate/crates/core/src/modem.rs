//! Transmit and receive chains assembled from the building blocks.
//!
//! Transmit: octets -> LSB-first bits -> differential encoder -> 15-chip
//! spreading -> BPSK -> RRC interpolation (-> optional IF mix).
//! Receive: (IF mix down ->) squelch -> AGC -> matched filter -> Costas loop
//! -> Mueller-Muller timing -> slicer -> packet sink.

use crate::framing::{build_frame, FrameEvent, PacketSink, PhyFrame, SinkConfig};
use crate::rateplan::Band;
use crate::spreading::{diff_encode, spread, DiffState, CHIPS_PER_BIT};
use crate::sync::{genie_demod, GenieParams, LoopMode, SyncConfig, Synchronizer};
use crate::waveform::{chips_to_symbols, mix, pulse_shape, slice, IqBuffer, RrcSpec};
use crate::Error;
use num_complex::Complex64;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModemConfig {
    pub band: Band,
    /// Samples per chip.
    pub sps: usize,
    pub rrc: RrcSpec,
    pub sync: SyncConfig,
    pub sink: SinkConfig,
    /// Padding modulus for transmitted frames.
    pub byte_modulus: usize,
}

impl ModemConfig {
    /// Defaults for `band` at `sps` samples per chip. Odd `sps` gets an even
    /// filter span so the RRC keeps an odd tap count.
    pub fn new(band: Band, sps: usize) -> Self {
        let mut rrc = RrcSpec::new(sps);
        if sps % 2 == 1 {
            rrc.span += 1;
        }
        Self {
            band,
            sps,
            rrc,
            sync: SyncConfig::new(sps),
            sink: SinkConfig::default(),
            byte_modulus: 1,
        }
    }

    pub fn chip_rate(&self) -> f64 {
        self.band.chip_rate() as f64
    }

    pub fn bit_rate(&self) -> f64 {
        self.band.bit_rate() as f64
    }

    pub fn sample_rate(&self) -> f64 {
        self.chip_rate() * self.sps as f64
    }

    /// dB to add to a full-band SNR to get Eb/N0.
    pub fn ebn0_offset_db(&self) -> f64 {
        10.0 * (self.sample_rate() / self.bit_rate()).log10()
    }

    /// dB to add to a full-band SNR to get the per-chip Es/N0.
    pub fn chip_snr_offset_db(&self) -> f64 {
        10.0 * (self.sps as f64).log10()
    }
}

/// Differentially encodes, spreads and shapes raw bits. The encoder starts
/// from state 0.
pub fn modulate_bits(bits: &[u8], config: &ModemConfig) -> Result<IqBuffer, Error> {
    let encoded = diff_encode(bits, &mut DiffState::default());
    modulate_chips(&spread(&encoded), config)
}

/// BPSK-maps and pulse-shapes a chip sequence.
pub fn modulate_chips(chips: &[u8], config: &ModemConfig) -> Result<IqBuffer, Error> {
    let symbols = chips_to_symbols(chips, config.chip_rate());
    Ok(pulse_shape(&symbols, &config.rrc)?)
}

/// Builds and modulates one frame.
pub fn transmit_frame(payload: &[u8], config: &ModemConfig) -> Result<(PhyFrame, IqBuffer), Error> {
    let frame = build_frame(payload, config.byte_modulus)?;
    let iq = modulate_bits(&frame.to_bits(), config)?;
    Ok((frame, iq))
}

/// Transmits several payloads as separate bursts with `idle` zero samples
/// before each burst and after the last one.
pub fn transmit_bursts<P: AsRef<[u8]>>(
    payloads: &[P],
    idle: usize,
    config: &ModemConfig,
) -> Result<IqBuffer, Error> {
    let zero = Complex64::new(0.0, 0.0);
    let mut samples = vec![zero; idle];
    for p in payloads {
        let (_, iq) = transmit_frame(p.as_ref(), config)?;
        samples.extend(iq.samples);
        samples.extend(std::iter::repeat_n(zero, idle));
    }
    Ok(IqBuffer::new(samples, config.sample_rate()))
}

/// Shifts a baseband buffer up to an intermediate frequency.
pub fn to_if(iq: &IqBuffer, if_hz: f64) -> Result<IqBuffer, Error> {
    Ok(mix(iq, if_hz)?)
}

/// Full synchronizing receiver. One instance per stream.
#[derive(Debug, Clone)]
pub struct Receiver {
    sync: Synchronizer,
    sink: PacketSink,
    if_hz: f64,
    sample_rate: f64,
    consumed: usize,
    /// Samples between loop-mode decisions.
    mode_chunk: usize,
}

impl Receiver {
    pub fn new(config: &ModemConfig) -> Result<Self, Error> {
        Ok(Self {
            sync: Synchronizer::new(&config.sync, &config.rrc)?,
            sink: PacketSink::new(config.sink),
            if_hz: 0.0,
            sample_rate: config.sample_rate(),
            consumed: 0,
            mode_chunk: config.sps * CHIPS_PER_BIT,
        })
    }

    /// Expects input centred on `if_hz` rather than at baseband.
    pub fn with_if(mut self, if_hz: f64) -> Self {
        self.if_hz = if_hz;
        self
    }

    pub fn synchronizer(&self) -> &Synchronizer {
        &self.sync
    }

    /// Soft chips for a block of samples, without running the sink.
    pub fn soft_chips(&mut self, samples: &[Complex64]) -> Vec<Complex64> {
        if self.if_hz == 0.0 {
            self.consumed += samples.len();
            return self.sync.process(samples);
        }
        let w = -2.0 * std::f64::consts::PI * self.if_hz / self.sample_rate;
        let start = self.consumed;
        let down: Vec<Complex64> = samples
            .iter()
            .enumerate()
            .map(|(n, s)| s * Complex64::cis(w * (start + n) as f64))
            .collect();
        self.consumed += samples.len();
        self.sync.process(&down)
    }

    /// Runs the full chain. Loop gains follow the packet sink: wide while
    /// it searches for a preamble, narrow once it has locked.
    pub fn process(&mut self, samples: &[Complex64]) -> Vec<FrameEvent> {
        let mut events = Vec::new();
        for chunk in samples.chunks(self.mode_chunk) {
            let chips = slice(&self.soft_chips(chunk));
            for &chip in &chips {
                let out = self.sink.push_chip(chip);
                events.extend(out.frame);
            }
            let mode = if self.sink.state().is_locked() {
                LoopMode::Track
            } else {
                LoopMode::Acquire
            };
            self.sync.set_mode(mode);
        }
        events
    }
}

/// Receives with carrier and timing taken from the channel instead of the
/// synchronization loops.
pub fn receive_genie(
    samples: &[Complex64],
    genie: &GenieParams,
    config: &ModemConfig,
) -> Result<Vec<FrameEvent>, Error> {
    let soft = genie_demod(samples, genie, &config.rrc)?;
    Ok(PacketSink::new(config.sink).push_chips(&slice(&soft)))
}
