use num_complex::Complex64;

/// Power squelch: passes samples while a single-pole running average of
/// `|x|^2` is at or above the threshold, zeroes them otherwise.
#[derive(Debug, Clone)]
pub struct PowerSquelch {
    threshold: f64,
    alpha: f64,
    avg_power: f64,
}

impl PowerSquelch {
    pub fn new(threshold_db: f64, alpha: f64) -> Self {
        Self {
            threshold: 10f64.powf(threshold_db / 10.0),
            alpha,
            avg_power: 0.0,
        }
    }

    pub fn avg_power(&self) -> f64 {
        self.avg_power
    }

    pub fn is_open(&self) -> bool {
        self.avg_power >= self.threshold
    }

    pub fn process(&mut self, input: &[Complex64]) -> Vec<Complex64> {
        input
            .iter()
            .map(|&x| {
                self.avg_power += self.alpha * (x.norm_sqr() - self.avg_power);
                if self.is_open() {
                    x
                } else {
                    Complex64::new(0.0, 0.0)
                }
            })
            .collect()
    }
}
