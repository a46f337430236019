//! Closed-form reference curves.

use crate::spreading::CHIPS_PER_BIT;
use statrs::function::erf::erfc;

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// Gaussian tail probability `Q(x)`.
pub fn q_function(x: f64) -> f64 {
    0.5 * erfc(x / std::f64::consts::SQRT_2)
}

/// Coherent BPSK bit error probability `Q(sqrt(2 Eb/N0))`.
pub fn bpsk_ber(ebn0_db: f64) -> f64 {
    q_function((2.0 * db_to_linear(ebn0_db)).sqrt())
}

/// Noncoherent D-BPSK matched-filter bound `0.5 exp(-Eb/N0)`.
pub fn dbpsk_mfb(ebn0_db: f64) -> f64 {
    0.5 * (-db_to_linear(ebn0_db)).exp()
}

fn binomial(n: u64, k: u64) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Probability that a hard-decision despreader picks the wrong codeword
/// when each chip flips independently with probability `p`: at least 8 of
/// the 15 chips must flip.
pub fn despread_error_probability(p: f64) -> f64 {
    let n = CHIPS_PER_BIT as u64;
    (n / 2 + 1..=n)
        .map(|k| binomial(n, k) * p.powi(k as i32) * (1.0 - p).powi((n - k) as i32))
        .sum()
}

/// Frame error probability when each of `bits` bits fails independently.
pub fn frame_error_probability(ber: f64, bits: u64) -> f64 {
    1.0 - (1.0 - ber).powf(bits as f64)
}
