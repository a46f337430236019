use num_complex::Complex64;

pub const MIN_GAIN: f64 = 1e-6;
pub const MAX_GAIN: f64 = 1e6;

/// Automatic gain control driving mean `|y|` toward `reference`.
///
/// The update is multiplicative, `g *= 1 + rate * (1 - |y| / reference)`,
/// so convergence speed does not depend on the input scale. Exact-zero
/// input (a closed squelch) holds the gain.
#[derive(Debug, Clone)]
pub struct Agc {
    reference: f64,
    rate: f64,
    gain: f64,
}

impl Agc {
    pub fn new(reference: f64, rate: f64) -> Self {
        assert!(reference > 0.0, "AGC reference must be positive");
        Self {
            reference,
            rate,
            gain: 1.0,
        }
    }

    pub fn gain(&self) -> f64 {
        self.gain
    }

    pub fn process(&mut self, input: &[Complex64]) -> Vec<Complex64> {
        input
            .iter()
            .map(|&x| {
                let y = x * self.gain;
                let mag = y.norm();
                if mag > 0.0 {
                    let step = (self.rate * (1.0 - mag / self.reference)).clamp(-0.5, 0.5);
                    self.gain = (self.gain * (1.0 + step)).clamp(MIN_GAIN, MAX_GAIN);
                }
                y
            })
            .collect()
    }
}
