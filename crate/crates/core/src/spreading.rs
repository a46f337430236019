//! Differential bit coding and 15-chip DSSS spreading for the 868/915 MHz PHY.
//!
//! Bits and chips are carried as `u8` values restricted to 0 and 1.

/// Number of chips per spread bit.
pub const CHIPS_PER_BIT: usize = 15;

const CHIP_MASK: u16 = 0x7fff;

/// A 15-chip pseudo-noise word. Chip `c0` sits at bit 14 of the carrier and
/// bit 15 is always zero.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct ChipWord(u16);

impl ChipWord {
    /// Codeword for bit 0: `1 1 1 1 0 1 0 1 1 0 0 1 0 0 0`.
    pub const ZERO: ChipWord = ChipWord(0b111_1010_1100_1000);
    /// Codeword for bit 1: `0 0 0 0 1 0 1 0 0 1 1 0 1 1 1`.
    pub const ONE: ChipWord = ChipWord(0b000_0101_0011_0111);

    /// Wraps a packed carrier; the unused top bit is cleared.
    pub fn from_packed(packed: u16) -> Self {
        ChipWord(packed & CHIP_MASK)
    }

    /// Packs `c0..c14` from a slice of exactly 15 chips.
    ///
    /// # Panics
    /// If `chips.len() != 15`.
    pub fn from_chips(chips: &[u8]) -> Self {
        assert_eq!(chips.len(), CHIPS_PER_BIT, "a chip word holds 15 chips");
        chips.iter().fold(ChipWord(0), |w, &c| w.shifted_in(c))
    }

    pub fn packed(self) -> u16 {
        self.0
    }

    /// Chip `i` (0-based, `c0` first).
    pub fn chip(self, i: usize) -> u8 {
        debug_assert!(i < CHIPS_PER_BIT);
        ((self.0 >> (CHIPS_PER_BIT - 1 - i)) & 1) as u8
    }

    pub fn chips(self) -> [u8; CHIPS_PER_BIT] {
        std::array::from_fn(|i| self.chip(i))
    }

    pub fn complement(self) -> Self {
        ChipWord(!self.0 & CHIP_MASK)
    }

    pub fn hamming_distance(self, other: ChipWord) -> u32 {
        (self.0 ^ other.0).count_ones()
    }

    /// Treats the word as a rolling window: drops `c0`, appends `chip` as the new `c14`.
    pub fn shifted_in(self, chip: u8) -> Self {
        ChipWord(((self.0 << 1) | u16::from(chip & 1)) & CHIP_MASK)
    }
}

/// Differential coder state: the previous encoded bit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct DiffState {
    pub last: u8,
}

/// `e[n] = b[n] ^ e[n-1]`, seeded from `state.last`.
pub fn diff_encode(bits: &[u8], state: &mut DiffState) -> Vec<u8> {
    bits.iter()
        .map(|&b| {
            state.last ^= b & 1;
            state.last
        })
        .collect()
}

/// `b[n] = e[n] ^ e[n-1]`, seeded from `state.last`.
pub fn diff_decode(bits: &[u8], state: &mut DiffState) -> Vec<u8> {
    bits.iter()
        .map(|&e| {
            let e = e & 1;
            let b = e ^ state.last;
            state.last = e;
            b
        })
        .collect()
}

pub fn spread_bit(bit: u8) -> ChipWord {
    if bit & 1 == 0 {
        ChipWord::ZERO
    } else {
        ChipWord::ONE
    }
}

/// Spreads every bit into its 15 chips, `c0` first.
pub fn spread(bits: &[u8]) -> Vec<u8> {
    let mut chips = Vec::with_capacity(bits.len() * CHIPS_PER_BIT);
    for &b in bits {
        chips.extend_from_slice(&spread_bit(b).chips());
    }
    chips
}

/// Minimum-distance hard decision. Returns the bit and its Hamming distance
/// (0..=7; the two codewords are 15 apart so there are no ties).
pub fn despread(word: ChipWord) -> (u8, u32) {
    let d0 = word.hamming_distance(ChipWord::ZERO);
    if d0 <= 7 {
        (0, d0)
    } else {
        (1, CHIPS_PER_BIT as u32 - d0)
    }
}

/// Despreads consecutive 15-chip groups; a trailing partial group is dropped.
pub fn despread_chips(chips: &[u8]) -> Vec<u8> {
    chips
        .chunks_exact(CHIPS_PER_BIT)
        .map(|c| despread(ChipWord::from_chips(c)).0)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn bits(s: &str) -> Vec<u8> {
        s.split_whitespace().map(|t| t.parse().unwrap()).collect()
    }

    #[test]
    fn codewords_match_chip_table() {
        assert_eq!(
            spread_bit(0).chips().to_vec(),
            bits("1 1 1 1 0 1 0 1 1 0 0 1 0 0 0")
        );
        assert_eq!(
            spread_bit(1).chips().to_vec(),
            bits("0 0 0 0 1 0 1 0 0 1 1 0 1 1 1")
        );
        assert_eq!(spread_bit(0), spread_bit(1).complement());
        assert_eq!(ChipWord::ZERO.packed() & 0x8000, 0);
        assert_eq!(ChipWord::ZERO.packed() | ChipWord::ONE.packed(), 0x7fff);
    }

    #[test]
    fn diff_examples() {
        let mut s = DiffState::default();
        assert_eq!(diff_encode(&[0, 0, 0, 0], &mut s), vec![0, 0, 0, 0]);
        let mut s = DiffState::default();
        assert_eq!(diff_encode(&[1, 0, 1, 1], &mut s), vec![1, 1, 0, 1]);
        assert_eq!(s.last, 1);
        let mut s = DiffState::default();
        assert_eq!(diff_decode(&[1, 1, 0, 1], &mut s), vec![1, 0, 1, 1]);
        let mut s = DiffState::default();
        assert_eq!(diff_decode(&[0, 0, 0, 0], &mut s), vec![0; 4]);
    }

    #[test]
    fn despread_examples() {
        assert_eq!(despread(ChipWord::ZERO), (0, 0));
        assert_eq!(despread(ChipWord::ONE), (1, 0));
        let flipped = ChipWord::from_packed(ChipWord::ZERO.packed() ^ 0b111 << 12);
        assert_eq!(despread(flipped), (0, 3));
    }

    #[test]
    fn despread_matches_brute_force_for_every_word() {
        for packed in 0..=0x7fffu16 {
            let w = ChipWord::from_packed(packed);
            let chips = w.chips();
            let dist = |cw: ChipWord| {
                chips
                    .iter()
                    .zip(cw.chips())
                    .filter(|(a, b)| *a != b)
                    .count() as u32
            };
            let (d0, d1) = (dist(ChipWord::ZERO), dist(ChipWord::ONE));
            let expected = if d0 < d1 { (0, d0) } else { (1, d1) };
            assert_eq!(despread(w), expected, "word {packed:#06x}");
            assert!(expected.1 <= 7);
        }
    }

    #[test]
    fn rolling_window_reproduces_word() {
        let w = ChipWord::ZERO
            .chips()
            .iter()
            .fold(ChipWord::ONE, |acc, &c| acc.shifted_in(c));
        assert_eq!(w, ChipWord::ZERO);
    }

    proptest! {
        #[test]
        fn diff_round_trip(b in proptest::collection::vec(0u8..2, 0..200), seed in 0u8..2) {
            let mut enc = DiffState { last: seed };
            let mut dec = DiffState { last: seed };
            let e = diff_encode(&b, &mut enc);
            prop_assert_eq!(diff_decode(&e, &mut dec), b);
            prop_assert_eq!(enc.last, e.last().copied().unwrap_or(seed));
        }

        #[test]
        fn inverted_stream_only_disturbs_first_bit(e in proptest::collection::vec(0u8..2, 1..200)) {
            let inv: Vec<u8> = e.iter().map(|b| b ^ 1).collect();
            let a = diff_decode(&e, &mut DiffState::default());
            let b = diff_decode(&inv, &mut DiffState::default());
            prop_assert_eq!(&a[1..], &b[1..]);
        }

        #[test]
        fn complement_flips_decision(packed in 0u16..0x8000) {
            let w = ChipWord::from_packed(packed);
            prop_assert_eq!(despread(w).0 ^ despread(w.complement()).0, 1);
        }

        #[test]
        fn spread_despread_round_trip(b in proptest::collection::vec(0u8..2, 0..100)) {
            prop_assert_eq!(despread_chips(&spread(&b)), b);
        }
    }
}
