use num_complex::Complex64;
use std::f64::consts::PI;

/// Frequency clamp in radians per sample.
pub const MAX_FREQUENCY: f64 = 0.25;

/// Loop-filter gains for a second-order loop with the given normalized
/// bandwidth and damping.
pub fn loop_gains(bandwidth: f64, damping: f64) -> (f64, f64) {
    let denom = 1.0 + 2.0 * damping * bandwidth + bandwidth * bandwidth;
    let alpha = 4.0 * damping * bandwidth / denom;
    let beta = 4.0 * bandwidth * bandwidth / denom;
    (alpha, beta)
}

/// Wraps an angle into (-pi, pi].
pub fn wrap_phase(phase: f64) -> f64 {
    let mut p = phase % (2.0 * PI);
    if p <= -PI {
        p += 2.0 * PI;
    } else if p > PI {
        p -= 2.0 * PI;
    }
    p
}

/// Second-order BPSK Costas loop. The phase detector is `Re(y) * Im(y)` on
/// the derotated sample, so lock is ambiguous modulo pi.
#[derive(Debug, Clone)]
pub struct CostasLoop {
    alpha: f64,
    beta: f64,
    phase: f64,
    frequency: f64,
}

impl CostasLoop {
    /// Critically damped loop with normalized bandwidth `bandwidth`.
    pub fn new(bandwidth: f64) -> Self {
        let (alpha, beta) = loop_gains(bandwidth, 1.0);
        Self {
            alpha,
            beta,
            phase: 0.0,
            frequency: 0.0,
        }
    }

    /// Changes the loop bandwidth, keeping phase and frequency.
    pub fn set_bandwidth(&mut self, bandwidth: f64) {
        (self.alpha, self.beta) = loop_gains(bandwidth, 1.0);
    }

    pub fn phase(&self) -> f64 {
        self.phase
    }

    /// Tracked frequency in radians per sample.
    pub fn frequency(&self) -> f64 {
        self.frequency
    }

    pub fn process(&mut self, input: &[Complex64]) -> Vec<Complex64> {
        input
            .iter()
            .map(|&x| {
                let y = x * Complex64::cis(-self.phase);
                let err = (y.re * y.im).clamp(-1.0, 1.0);
                self.frequency =
                    (self.frequency + self.beta * err).clamp(-MAX_FREQUENCY, MAX_FREQUENCY);
                self.phase = wrap_phase(self.phase + self.frequency + self.alpha * err);
                y
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn bpsk(n: usize, seed: u64) -> Vec<Complex64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n)
            .map(|_| Complex64::new(if rng.random_bool(0.5) { 1.0 } else { -1.0 }, 0.0))
            .collect()
    }

    #[test]
    fn wraps_into_half_open_interval() {
        assert_eq!(wrap_phase(PI), PI);
        assert!((wrap_phase(-PI) - PI).abs() < 1e-12);
        assert!((wrap_phase(3.0 * PI) - PI).abs() < 1e-9);
        assert!((wrap_phase(0.5 + 4.0 * PI) - 0.5).abs() < 1e-9);
    }

    #[test]
    fn aligned_input_passes_through() {
        let x = bpsk(2000, 1);
        let y = CostasLoop::new(0.005).process(&x);
        for (a, b) in x.iter().zip(&y) {
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn removes_static_phase() {
        let x = vec![Complex64::cis(0.3); 5000];
        let y = CostasLoop::new(0.005).process(&x);
        let tail = &y[4000..];
        let mean_im = tail.iter().map(|s| s.im).sum::<f64>() / tail.len() as f64;
        assert!(mean_im.abs() < 1e-2, "residual {mean_im}");
    }

    #[test]
    fn tracks_carrier_offset() {
        let w = 2.0 * PI * 1e-3;
        let x: Vec<Complex64> = bpsk(5000, 2)
            .iter()
            .enumerate()
            .map(|(n, s)| s * Complex64::cis(w * n as f64 + 1.0))
            .collect();
        let mut costas = CostasLoop::new(0.005);
        let y = costas.process(&x);
        let rel = (costas.frequency() - w).abs() / w;
        assert!(rel < 0.05, "frequency {} vs {w}", costas.frequency());
        // Residual phase is 0 or pi.
        assert!(y[4500..].iter().all(|s| s.im.abs() < 0.05));
    }

    #[test]
    fn gains_follow_bandwidth() {
        let (a, b) = loop_gains(0.005, 1.0);
        assert!((a - 0.02 / 1.010025).abs() < 1e-15);
        assert!((b - 1e-4 / 1.010025).abs() < 1e-15);
    }
}
