//! Raw I/Q files: interleaved little-endian `f32` pairs, no header.

use super::HarnessError;
use crate::waveform::IqBuffer;
use num_complex::Complex64;
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

pub fn iq_write(samples: &[Complex64], path: impl AsRef<Path>) -> Result<(), HarnessError> {
    let mut w = BufWriter::new(File::create(path)?);
    for s in samples {
        w.write_all(&(s.re as f32).to_le_bytes())?;
        w.write_all(&(s.im as f32).to_le_bytes())?;
    }
    w.flush()?;
    Ok(())
}

pub fn iq_read(path: impl AsRef<Path>, sample_rate: f64) -> Result<IqBuffer, HarnessError> {
    let mut bytes = Vec::new();
    BufReader::new(File::open(path)?).read_to_end(&mut bytes)?;
    if bytes.len() % 8 != 0 {
        return Err(HarnessError::OddFloatCount(bytes.len() / 4));
    }
    let f = |b: &[u8]| f64::from(f32::from_le_bytes([b[0], b[1], b[2], b[3]]));
    let samples = bytes
        .chunks_exact(8)
        .map(|c| Complex64::new(f(&c[..4]), f(&c[4..])))
        .collect();
    Ok(IqBuffer::new(samples, sample_rate))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn empty_buffer_gives_empty_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("empty.iq");
        iq_write(&[], &path).unwrap();
        assert_eq!(std::fs::metadata(&path).unwrap().len(), 0);
        assert!(iq_read(&path, 1.0).unwrap().is_empty());
    }

    #[test]
    fn single_sample_layout() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("one.iq");
        iq_write(&[Complex64::new(1.0, -1.0)], &path).unwrap();
        let bytes = std::fs::read(&path).unwrap();
        assert_eq!(
            bytes,
            [1.0f32.to_le_bytes(), (-1.0f32).to_le_bytes()].concat()
        );
    }

    #[test]
    fn round_trip_is_exact() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let x: Vec<Complex64> = (0..10_000)
            .map(|_| {
                Complex64::new(
                    f64::from(rng.random::<f32>() - 0.5),
                    f64::from(rng.random::<f32>() * 3.0),
                )
            })
            .collect();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("rt.iq");
        iq_write(&x, &path).unwrap();
        let back = iq_read(&path, 2.5).unwrap();
        assert_eq!(back.samples, x);
        assert_eq!(back.sample_rate, 2.5);
    }

    #[test]
    fn truncated_file_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("odd.iq");
        std::fs::write(&path, [0u8; 12]).unwrap();
        assert!(matches!(
            iq_read(&path, 1.0),
            Err(HarnessError::OddFloatCount(3))
        ));
        std::fs::write(&path, [0u8; 7]).unwrap();
        assert!(matches!(
            iq_read(&path, 1.0),
            Err(HarnessError::OddFloatCount(_))
        ));
    }
}
