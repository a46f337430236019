//! Packet sink: turns a stream of hard chip decisions into frames.
//!
//! The sink slides a 15-chip window over the input until it sees either
//! codeword within the chip error budget. That fixes symbol alignment and
//! the differential reference (so a 180 degree carrier ambiguity decodes the
//! same). It then counts preamble zeros, hunts for the SFD, reads the length
//! octet and collects the PSDU before checking the FCS.
//!
//! Every cyclic shift of a codeword lies 7 chips from the other codeword, so
//! at a few percent chip error rate a misaligned window occasionally passes
//! the acquisition test. Each counted preamble zero must therefore also lie
//! within `preamble_run_budget` of its codeword, which a misaligned run
//! practically never does.

use super::{crc16, Fcs, FCS_LEN, MAX_PSDU_LEN, SFD};
use crate::spreading::{despread, ChipWord, DiffState, CHIPS_PER_BIT};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SinkConfig {
    /// Mismatching chips tolerated when acquiring on a preamble codeword.
    pub chip_error_budget: u32,
    /// Mismatching chips tolerated on each preamble symbol after acquisition.
    pub preamble_run_budget: u32,
    /// Consecutive decoded zeros (counting the acquisition symbol) that arm
    /// the SFD search.
    pub preamble_bits: usize,
    /// Bits the SFD search may consume before falling back to acquisition.
    pub sfd_search_bits: usize,
}

impl Default for SinkConfig {
    fn default() -> Self {
        Self {
            chip_error_budget: 2,
            preamble_run_budget: 4,
            preamble_bits: 8,
            sfd_search_bits: 48,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SinkPhase {
    #[default]
    SearchPreamble,
    SyncSfd,
    DecodeLength,
    DecodePayload,
    /// A frame was completed on the previous chip.
    CheckCrc,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FrameEvent {
    pub psdu: Vec<u8>,
    pub crc_ok: bool,
}

impl FrameEvent {
    pub fn payload(&self) -> &[u8] {
        &self.psdu[..self.psdu.len().saturating_sub(FCS_LEN)]
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct SinkOutput {
    pub bit: Option<u8>,
    pub frame: Option<FrameEvent>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SinkState {
    pub phase: SinkPhase,
    pub shift_register: ChipWord,
    pub chip_error_budget: u32,
    config: SinkConfig,
    /// Chips shifted in since reset, saturating at 15.
    fill: usize,
    /// Symbol-aligned; only meaningful in `SearchPreamble`.
    locked: bool,
    chip_phase: usize,
    diff: DiffState,
    zero_run: usize,
    phase_bits: usize,
    octet: u8,
    octet_bits: u8,
    length: usize,
    psdu: Vec<u8>,
}

impl SinkState {
    pub fn new(config: SinkConfig) -> Self {
        Self {
            phase: SinkPhase::SearchPreamble,
            shift_register: ChipWord::default(),
            chip_error_budget: config.chip_error_budget,
            config,
            fill: 0,
            locked: false,
            chip_phase: 0,
            diff: DiffState::default(),
            zero_run: 0,
            phase_bits: 0,
            octet: 0,
            octet_bits: 0,
            length: 0,
            psdu: Vec::new(),
        }
    }

    pub fn config(&self) -> SinkConfig {
        self.config
    }

    /// True from preamble acquisition until the frame ends or is abandoned.
    pub fn is_locked(&self) -> bool {
        match self.phase {
            SinkPhase::SearchPreamble => self.locked,
            SinkPhase::CheckCrc => false,
            _ => true,
        }
    }

    fn restart_search(&mut self) {
        self.phase = SinkPhase::SearchPreamble;
        self.locked = false;
        self.zero_run = 0;
        self.phase_bits = 0;
        self.octet = 0;
        self.octet_bits = 0;
        self.psdu.clear();
    }

    /// Tries to acquire on the current window.
    fn try_lock(&mut self) -> Option<u8> {
        if self.fill < CHIPS_PER_BIT {
            return None;
        }
        let w = self.shift_register;
        let reference = if w.hamming_distance(ChipWord::ZERO) <= self.chip_error_budget {
            0
        } else if w.hamming_distance(ChipWord::ONE) <= self.chip_error_budget {
            1
        } else {
            return None;
        };
        self.locked = true;
        self.chip_phase = 0;
        self.diff.last = reference;
        self.zero_run = 1;
        if self.zero_run >= self.config.preamble_bits {
            self.arm_sfd();
        }
        Some(0)
    }

    fn arm_sfd(&mut self) {
        self.phase = SinkPhase::SyncSfd;
        self.octet = 0;
        self.phase_bits = 0;
    }

    /// Advances the symbol clock; returns the decoded bit at symbol boundaries.
    fn next_bit(&mut self) -> Option<(u8, u32)> {
        self.chip_phase += 1;
        if self.chip_phase < CHIPS_PER_BIT {
            return None;
        }
        self.chip_phase = 0;
        let (encoded, distance) = despread(self.shift_register);
        let bit = encoded ^ self.diff.last;
        self.diff.last = encoded;
        Some((bit, distance))
    }

    /// Accumulates an LSB-first octet; returns it once complete.
    fn push_octet_bit(&mut self, bit: u8) -> Option<u8> {
        self.octet |= bit << self.octet_bits;
        self.octet_bits += 1;
        if self.octet_bits < 8 {
            return None;
        }
        let o = self.octet;
        self.octet = 0;
        self.octet_bits = 0;
        Some(o)
    }

    fn on_bit(&mut self, bit: u8, distance: u32) -> Option<FrameEvent> {
        match self.phase {
            SinkPhase::SearchPreamble => {
                if bit == 0 && distance <= self.config.preamble_run_budget {
                    self.zero_run += 1;
                    if self.zero_run >= self.config.preamble_bits {
                        self.arm_sfd();
                    }
                } else {
                    self.restart_search();
                }
                None
            }
            SinkPhase::SyncSfd => {
                self.octet = (self.octet >> 1) | (bit << 7);
                self.phase_bits += 1;
                if self.octet == SFD {
                    self.phase = SinkPhase::DecodeLength;
                    self.octet = 0;
                    self.octet_bits = 0;
                } else if self.phase_bits >= self.config.sfd_search_bits {
                    self.restart_search();
                }
                None
            }
            SinkPhase::DecodeLength => {
                if let Some(length) = self.push_octet_bit(bit) {
                    let length = usize::from(length);
                    if (FCS_LEN..=MAX_PSDU_LEN).contains(&length) {
                        self.length = length;
                        self.psdu.clear();
                        self.phase = SinkPhase::DecodePayload;
                    } else {
                        self.restart_search();
                    }
                }
                None
            }
            SinkPhase::DecodePayload => {
                let octet = self.push_octet_bit(bit)?;
                self.psdu.push(octet);
                if self.psdu.len() < self.length {
                    return None;
                }
                let psdu = std::mem::take(&mut self.psdu);
                let n = psdu.len();
                let carried = Fcs::from_octets([psdu[n - 2], psdu[n - 1]]);
                let crc_ok = crc16(&psdu[..n - FCS_LEN]) == carried;
                self.phase = SinkPhase::CheckCrc;
                Some(FrameEvent { psdu, crc_ok })
            }
            SinkPhase::CheckCrc => unreachable!("no bits are decoded in CheckCrc"),
        }
    }
}

impl Default for SinkState {
    fn default() -> Self {
        Self::new(SinkConfig::default())
    }
}

/// Advances the sink by one hard chip decision (0 or 1).
pub fn sink_step(mut state: SinkState, chip: u8) -> (SinkState, Option<u8>, Option<FrameEvent>) {
    state.shift_register = state.shift_register.shifted_in(chip);
    state.fill = (state.fill + 1).min(CHIPS_PER_BIT);

    if state.phase == SinkPhase::CheckCrc {
        state.restart_search();
    }
    if state.phase == SinkPhase::SearchPreamble && !state.locked {
        let bit = state.try_lock();
        return (state, bit, None);
    }
    let Some((bit, distance)) = state.next_bit() else {
        return (state, None, None);
    };
    let frame = state.on_bit(bit, distance);
    (state, Some(bit), frame)
}

/// Owning wrapper around [`sink_step`] for streaming use.
#[derive(Debug, Clone, Default)]
pub struct PacketSink {
    state: SinkState,
}

impl PacketSink {
    pub fn new(config: SinkConfig) -> Self {
        Self {
            state: SinkState::new(config),
        }
    }

    pub fn state(&self) -> &SinkState {
        &self.state
    }

    pub fn push_chip(&mut self, chip: u8) -> SinkOutput {
        let state = std::mem::take(&mut self.state);
        let (state, bit, frame) = sink_step(state, chip);
        self.state = state;
        SinkOutput { bit, frame }
    }

    /// Feeds a run of chips and returns every completed frame.
    pub fn push_chips(&mut self, chips: &[u8]) -> Vec<FrameEvent> {
        chips
            .iter()
            .filter_map(|&c| self.push_chip(c).frame)
            .collect()
    }
}
