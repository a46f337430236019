//! PHY frame construction, parsing and the receive-side packet sink.
//!
//! On-air layout: four `0x00` preamble octets, the SFD, a one-octet length,
//! then the PSDU (payload followed by the two FCS octets). Octets are sent
//! least-significant bit first. Everything between the length octet and the
//! FCS is treated as opaque payload.

mod crc;
mod sink;

pub use crc::{crc16, Fcs};
pub use sink::{sink_step, FrameEvent, PacketSink, SinkConfig, SinkOutput, SinkPhase, SinkState};

use thiserror::Error;

pub const PREAMBLE_LEN: usize = 4;
pub const SFD: u8 = 0xA7;
pub const FCS_LEN: usize = 2;
pub const MAX_PSDU_LEN: usize = 127;
pub const MAX_PAYLOAD_LEN: usize = MAX_PSDU_LEN - FCS_LEN;
/// Preamble, SFD and length octets.
pub const HEADER_LEN: usize = PREAMBLE_LEN + 2;
pub const MAX_FRAME_LEN: usize = HEADER_LEN + MAX_PSDU_LEN;
pub const PAD_OCTET: u8 = 0x00;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FrameError {
    #[error("payload of {0} octets exceeds the {MAX_PAYLOAD_LEN}-octet limit")]
    PayloadTooLong(usize),
    #[error("byte modulus must be positive")]
    ZeroModulus,
    #[error("preamble not found")]
    NoPreamble,
    #[error("start-of-frame delimiter mismatch (got {0:#04x})")]
    BadSfd(u8),
    #[error("length field {0} outside 2..=127")]
    BadLength(u8),
    #[error("bit stream ended before the frame was complete")]
    Truncated,
    #[error("frame check sequence mismatch (carried {carried:#06x}, computed {computed:#06x})")]
    CrcMismatch { carried: u16, computed: u16 },
}

/// A PHY frame. The preamble is implicit (always four `0x00` octets).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PhyFrame {
    pub sfd: u8,
    /// Payload followed by the two FCS octets.
    pub psdu: Vec<u8>,
    /// Trailing `0x00` octets appended after the FCS.
    pub pad: usize,
}

impl PhyFrame {
    pub fn length(&self) -> u8 {
        self.psdu.len() as u8
    }

    pub fn payload(&self) -> &[u8] {
        &self.psdu[..self.psdu.len() - FCS_LEN]
    }

    pub fn fcs(&self) -> Fcs {
        let n = self.psdu.len();
        Fcs::from_octets([self.psdu[n - 2], self.psdu[n - 1]])
    }

    pub fn crc_ok(&self) -> bool {
        crc16(self.payload()) == self.fcs()
    }

    /// Size before padding.
    pub fn unpadded_len(&self) -> usize {
        HEADER_LEN + self.psdu.len()
    }

    pub fn to_octets(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(self.unpadded_len() + self.pad);
        out.extend_from_slice(&[0; PREAMBLE_LEN]);
        out.push(self.sfd);
        out.push(self.length());
        out.extend_from_slice(&self.psdu);
        out.resize(out.len() + self.pad, PAD_OCTET);
        out
    }

    pub fn to_bits(&self) -> Vec<u8> {
        octets_to_bits(&self.to_octets())
    }
}

/// Builds a frame around `payload`, zero-padding so the serialized size is
/// a multiple of `byte_modulus`.
pub fn build_frame(payload: &[u8], byte_modulus: usize) -> Result<PhyFrame, FrameError> {
    if payload.len() > MAX_PAYLOAD_LEN {
        return Err(FrameError::PayloadTooLong(payload.len()));
    }
    if byte_modulus == 0 {
        return Err(FrameError::ZeroModulus);
    }
    let mut psdu = Vec::with_capacity(payload.len() + FCS_LEN);
    psdu.extend_from_slice(payload);
    psdu.extend_from_slice(&crc16(payload).to_octets());
    let unpadded = HEADER_LEN + psdu.len();
    let pad = (byte_modulus - unpadded % byte_modulus) % byte_modulus;
    Ok(PhyFrame {
        sfd: SFD,
        psdu,
        pad,
    })
}

/// Parses a bit stream that starts at a preamble boundary. No error
/// correction is attempted; the first failing stage is reported.
pub fn parse_frame(bits: &[u8]) -> Result<PhyFrame, FrameError> {
    let mut octets = bits.chunks_exact(8).map(bits_to_octet);
    for _ in 0..PREAMBLE_LEN {
        if octets.next().ok_or(FrameError::NoPreamble)? != 0 {
            return Err(FrameError::NoPreamble);
        }
    }
    let sfd = octets.next().ok_or(FrameError::BadSfd(0))?;
    if sfd != SFD {
        return Err(FrameError::BadSfd(sfd));
    }
    let length = octets.next().ok_or(FrameError::Truncated)?;
    if !(FCS_LEN..=MAX_PSDU_LEN).contains(&usize::from(length)) {
        return Err(FrameError::BadLength(length));
    }
    let psdu: Vec<u8> = octets.by_ref().take(usize::from(length)).collect();
    if psdu.len() < usize::from(length) {
        return Err(FrameError::Truncated);
    }
    let pad = octets.take_while(|&o| o == PAD_OCTET).count();
    let frame = PhyFrame { sfd, psdu, pad };
    let computed = crc16(frame.payload());
    if computed != frame.fcs() {
        return Err(FrameError::CrcMismatch {
            carried: frame.fcs().0,
            computed: computed.0,
        });
    }
    Ok(frame)
}

/// Expands octets into bits, least-significant bit first.
pub fn octets_to_bits(octets: &[u8]) -> Vec<u8> {
    octets
        .iter()
        .flat_map(|&o| (0..8).map(move |i| (o >> i) & 1))
        .collect()
}

/// Packs up to eight LSB-first bits into an octet.
pub fn bits_to_octet(bits: &[u8]) -> u8 {
    bits.iter()
        .enumerate()
        .fold(0u8, |acc, (i, &b)| acc | ((b & 1) << i))
}

pub fn bits_to_octets(bits: &[u8]) -> Vec<u8> {
    bits.chunks_exact(8).map(bits_to_octet).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn minimal_frame_sizes() {
        let f = build_frame(&[], 1).unwrap();
        assert_eq!(f.to_octets().len(), 8);
        assert_eq!(f.pad, 0);

        let f = build_frame(&[0x55; 122], 1).unwrap();
        assert_eq!(f.to_octets().len(), 130);
        assert_eq!(f.pad, 0);

        let f = build_frame(&[], 16).unwrap();
        assert_eq!(f.pad, 8);
        assert_eq!(f.to_octets().len(), 16);
        assert!(f.to_octets()[8..].iter().all(|&o| o == PAD_OCTET));
    }

    #[test]
    fn payload_limit() {
        assert!(build_frame(&[0; MAX_PAYLOAD_LEN], 1).is_ok());
        assert_eq!(
            build_frame(&[0; 126], 1),
            Err(FrameError::PayloadTooLong(126))
        );
        assert_eq!(build_frame(&[], 0), Err(FrameError::ZeroModulus));
    }

    #[test]
    fn serialized_layout() {
        let f = build_frame(&[0x01, 0x02], 1).unwrap();
        let o = f.to_octets();
        assert_eq!(&o[..6], &[0, 0, 0, 0, SFD, 4]);
        assert_eq!(&o[6..8], &[0x01, 0x02]);
        assert_eq!(&o[8..], &crc16(&[0x01, 0x02]).to_octets());
        // LSB first: 0xA7 = 1010_0111.
        assert_eq!(&f.to_bits()[32..40], &[1, 1, 1, 0, 0, 1, 0, 1]);
    }

    #[test]
    fn parse_rejects_corruption() {
        let f = build_frame(b"hello", 1).unwrap();
        let mut bits = f.to_bits();
        assert_eq!(parse_frame(&bits).unwrap().payload(), b"hello");
        bits[48 + 3] ^= 1;
        assert!(matches!(
            parse_frame(&bits),
            Err(FrameError::CrcMismatch { .. })
        ));
    }

    #[test]
    fn parse_degenerate_inputs() {
        let zeros = vec![0u8; 1040];
        assert_eq!(parse_frame(&zeros), Err(FrameError::BadSfd(0)));
        let mut bits = build_frame(b"x", 1).unwrap().to_bits();
        bits[0] = 1;
        assert_eq!(parse_frame(&bits), Err(FrameError::NoPreamble));
        assert_eq!(parse_frame(&[]), Err(FrameError::NoPreamble));
        let bits = build_frame(b"abc", 1).unwrap().to_bits();
        assert_eq!(
            parse_frame(&bits[..bits.len() - 8]),
            Err(FrameError::Truncated)
        );
    }

    #[test]
    fn oversized_length_field_is_rejected() {
        let mut octets = build_frame(b"abc", 1).unwrap().to_octets();
        octets[5] = 200;
        assert_eq!(
            parse_frame(&octets_to_bits(&octets)),
            Err(FrameError::BadLength(200))
        );
    }

    #[test]
    fn every_single_bit_flip_in_psdu_is_detected() {
        let payload: Vec<u8> = (0..122u32).map(|i| (i * 37 + 11) as u8).collect();
        let frame = build_frame(&payload, 1).unwrap();
        let bits = frame.to_bits();
        let psdu_start = HEADER_LEN * 8;
        for i in psdu_start..bits.len() {
            let mut corrupted = bits.clone();
            corrupted[i] ^= 1;
            assert!(
                matches!(parse_frame(&corrupted), Err(FrameError::CrcMismatch { .. })),
                "flip at bit {i} went undetected"
            );
        }
    }

    proptest! {
        #[test]
        fn build_parse_round_trip(
            payload in proptest::collection::vec(any::<u8>(), 0..=MAX_PAYLOAD_LEN),
            modulus in 1usize..64,
        ) {
            let frame = build_frame(&payload, modulus).unwrap();
            prop_assert!(frame.pad < modulus);
            prop_assert_eq!((frame.unpadded_len() + frame.pad) % modulus, 0);
            prop_assert!(frame.unpadded_len() <= MAX_FRAME_LEN);
            prop_assert!(frame.crc_ok());
            let parsed = parse_frame(&frame.to_bits()).unwrap();
            prop_assert_eq!(parsed.payload(), &payload[..]);
            prop_assert_eq!(parsed.pad, frame.pad);
        }

        #[test]
        fn bit_packing_round_trip(octets in proptest::collection::vec(any::<u8>(), 0..64)) {
            prop_assert_eq!(bits_to_octets(&octets_to_bits(&octets)), octets);
        }
    }
}
