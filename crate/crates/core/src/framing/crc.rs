//! 16-bit frame check sequence (ITU-T CRC-16, x^16 + x^12 + x^5 + 1).
//!
//! Zero initial value, no final XOR, bits processed least-significant first,
//! matching the LSB-first octet transmission order of the PHY.

/// Reflected form of 0x1021.
const POLY_REFLECTED: u16 = 0x8408;

const TABLE: [u16; 256] = build_table();

const fn build_table() -> [u16; 256] {
    let mut table = [0u16; 256];
    let mut i = 0;
    while i < 256 {
        let mut crc = i as u16;
        let mut k = 0;
        while k < 8 {
            crc = if crc & 1 != 0 {
                (crc >> 1) ^ POLY_REFLECTED
            } else {
                crc >> 1
            };
            k += 1;
        }
        table[i] = crc;
        i += 1;
    }
    table
}

/// A frame check sequence value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Fcs(pub u16);

impl Fcs {
    /// Octets in transmission order (low octet first).
    pub fn to_octets(self) -> [u8; 2] {
        self.0.to_le_bytes()
    }

    pub fn from_octets(octets: [u8; 2]) -> Self {
        Fcs(u16::from_le_bytes(octets))
    }
}

pub fn crc16(data: &[u8]) -> Fcs {
    let crc = data.iter().fold(0u16, |crc, &b| {
        (crc >> 8) ^ TABLE[usize::from((crc as u8) ^ b)]
    });
    Fcs(crc)
}
