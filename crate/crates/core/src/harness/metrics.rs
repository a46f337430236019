use super::HarnessError;
use crate::framing::FrameEvent;
use std::io::Write;

/// Bit error rate between two aligned bit sequences. Empty input gives 0.
pub fn ber(sent: &[u8], received: &[u8]) -> Result<f64, HarnessError> {
    if sent.len() != received.len() {
        return Err(HarnessError::LengthMismatch {
            sent: sent.len(),
            received: received.len(),
        });
    }
    if sent.is_empty() {
        return Ok(0.0);
    }
    Ok(count_bit_errors(sent, received) as f64 / sent.len() as f64)
}

pub fn count_bit_errors(a: &[u8], b: &[u8]) -> u64 {
    a.iter().zip(b).filter(|(x, y)| (*x ^ *y) & 1 == 1).count() as u64
}

/// Bit errors between two octet strings of equal length.
pub fn count_octet_bit_errors(a: &[u8], b: &[u8]) -> u64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| u64::from((x ^ y).count_ones()))
        .sum()
}

/// Sequence number carried in the first two payload octets.
pub fn sequence_number(payload: &[u8]) -> Option<u16> {
    (payload.len() >= 2).then(|| u16::from_le_bytes([payload[0], payload[1]]))
}

/// Fraction of sent payloads with no matching `crc_ok` event. Frames are
/// matched on their sequence number and must carry identical payloads.
pub fn per<P: AsRef<[u8]>>(sent: &[P], received: &[FrameEvent]) -> f64 {
    if sent.is_empty() {
        return 0.0;
    }
    let ok = frames_ok(sent, received);
    1.0 - ok as f64 / sent.len() as f64
}

pub fn frames_ok<P: AsRef<[u8]>>(sent: &[P], received: &[FrameEvent]) -> usize {
    let good: std::collections::HashMap<u16, &[u8]> = received
        .iter()
        .filter(|e| e.crc_ok)
        .filter_map(|e| Some((sequence_number(e.payload())?, e.payload())))
        .collect();
    sent.iter()
        .filter(|p| {
            let p = p.as_ref();
            sequence_number(p)
                .and_then(|s| good.get(&s))
                .is_some_and(|r| *r == p)
        })
        .count()
}

/// One measured point of a sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricRow {
    /// Full-band channel SNR.
    pub snr_db: f64,
    /// Energy per information bit over N0 (per chip for chip-level runs).
    pub ebn0_db: f64,
    pub ber: f64,
    pub per: f64,
    pub frames_sent: u64,
    pub frames_ok: u64,
    pub bit_errors: u64,
    pub bits_compared: u64,
}

impl MetricRow {
    pub fn is_consistent(&self) -> bool {
        (0.0..=1.0).contains(&self.ber)
            && (0.0..=1.0).contains(&self.per)
            && self.frames_ok <= self.frames_sent
            && self.bit_errors <= self.bits_compared
    }
}

pub const CSV_HEADER: &str = "snr_db,ebn0_db,ber,per,frames_sent,frames_ok,bits_compared";

/// Writes a comment line describing the Eb/N0 reference, the header and one
/// row per point.
pub fn write_csv(out: &mut impl Write, rows: &[MetricRow], ebn0_note: &str) -> std::io::Result<()> {
    writeln!(out, "# {ebn0_note}")?;
    writeln!(out, "{CSV_HEADER}")?;
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{},{},{}",
            r.snr_db, r.ebn0_db, r.ber, r.per, r.frames_sent, r.frames_ok, r.bits_compared
        )?;
    }
    Ok(())
}
