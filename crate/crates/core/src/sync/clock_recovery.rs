use num_complex::Complex64;

/// Mueller-Muller symbol timing recovery with linear interpolation.
///
/// Emits one interpolated sample per chip. The timing error
/// `e = d[n-1] * y[n] - d[n] * y[n-1]` (decisions are signs of the real
/// part) is clipped to +-1 and steers both the fractional offset `mu` and
/// the samples-per-chip estimate `omega`.
#[derive(Debug, Clone)]
pub struct ClockRecoveryMm {
    nominal_omega: f64,
    omega_limit: f64,
    gain_mu: f64,
    gain_omega: f64,
    mu: f64,
    omega: f64,
    last: f64,
    pending: Vec<Complex64>,
    /// Input samples still to be skipped when a step overshot the buffer.
    skip: usize,
}

fn decide(x: f64) -> f64 {
    if x >= 0.0 {
        1.0
    } else {
        -1.0
    }
}

impl ClockRecoveryMm {
    /// `omega_limit` is the relative bound on `omega` around `omega`.
    pub fn new(omega: f64, gain_mu: f64, gain_omega: f64, omega_limit: f64) -> Self {
        assert!(
            omega >= 2.0,
            "timing recovery needs at least 2 samples per chip"
        );
        Self {
            nominal_omega: omega,
            omega_limit,
            gain_mu,
            gain_omega,
            mu: 0.0,
            omega,
            last: 0.0,
            pending: Vec::new(),
            skip: 0,
        }
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn omega(&self) -> f64 {
        self.omega
    }

    pub fn omega_bounds(&self) -> (f64, f64) {
        (
            self.nominal_omega * (1.0 - self.omega_limit),
            self.nominal_omega * (1.0 + self.omega_limit),
        )
    }

    /// Changes the adaptation gains, keeping `mu` and `omega`.
    pub fn set_gains(&mut self, gain_mu: f64, gain_omega: f64) {
        self.gain_mu = gain_mu;
        self.gain_omega = gain_omega;
    }

    /// Sets the fractional sampling offset, e.g. for a known timing phase.
    pub fn set_mu(&mut self, mu: f64) {
        self.mu = mu.rem_euclid(1.0);
    }

    pub fn process(&mut self, input: &[Complex64]) -> Vec<Complex64> {
        self.pending.extend_from_slice(input);
        let (lo, hi) = self.omega_bounds();
        let mut out = Vec::with_capacity((input.len() as f64 / lo) as usize + 2);
        let mut i = self.skip;
        while i + 1 < self.pending.len() {
            let y = self.pending[i] * (1.0 - self.mu) + self.pending[i + 1] * self.mu;
            let err = (decide(self.last) * y.re - decide(y.re) * self.last).clamp(-1.0, 1.0);
            self.last = y.re;
            out.push(y);
            self.omega = (self.omega + self.gain_omega * err).clamp(lo, hi);
            let next = self.mu + self.omega + self.gain_mu * err;
            let step = next.floor();
            self.mu = next - step;
            i += step as usize;
        }
        let consumed = i.min(self.pending.len());
        self.skip = i - consumed;
        self.pending.drain(..consumed);
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::waveform::{chips_to_symbols, matched_filter, pulse_shape, slice, RrcSpec};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_chips(n: usize, seed: u64) -> Vec<u8> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n).map(|_| rng.random_range(0..2)).collect()
    }

    /// Matched-filter output, normalized to unit chip amplitude.
    fn received(chips: &[u8], sps: usize) -> Vec<Complex64> {
        let spec = RrcSpec::new(sps);
        let tx = pulse_shape(&chips_to_symbols(chips, 1.0), &spec).unwrap();
        let rx = matched_filter(&tx, &spec).unwrap();
        let scale = 1.0 / (sps as f64).sqrt();
        rx.samples.iter().map(|s| s * scale).collect()
    }

    /// Linear-interpolation resampler standing in for a clock offset.
    fn resample(x: &[Complex64], step: f64, start: f64) -> Vec<Complex64> {
        let mut out = vec![];
        let mut t = start;
        while (t as usize) + 1 < x.len() {
            let k = t as usize;
            let f = t - k as f64;
            out.push(x[k] * (1.0 - f) + x[k + 1] * f);
            t += step;
        }
        out
    }

    /// Chip decisions aligned to the transmitted chips (best of a few lags).
    fn errors_after(decisions: &[u8], chips: &[u8], skip: usize) -> usize {
        (0..4)
            .map(|lag| {
                decisions[skip + lag..]
                    .iter()
                    .zip(&chips[skip..])
                    .filter(|(a, b)| a != b)
                    .count()
            })
            .min()
            .unwrap()
    }

    #[test]
    fn ideal_sampling_reproduces_chips() {
        let sps = 8;
        let chips = random_chips(2000, 1);
        let rx = received(&chips, sps);
        let start = RrcSpec::new(sps).chain_delay();
        let mut mm = ClockRecoveryMm::new(sps as f64, 0.05, 2.5e-4, 0.05);
        let soft = mm.process(&rx[start..]);
        let decisions = slice(&soft);
        assert_eq!(&decisions[..chips.len()], &chips[..]);
    }

    #[test]
    fn converges_from_half_sample_offset() {
        let sps = 8;
        let chips = random_chips(3000, 2);
        let rx = received(&chips, sps);
        let start = RrcSpec::new(sps).chain_delay();
        let shifted = resample(&rx, 1.0, start as f64 + 0.5);
        let mut mm = ClockRecoveryMm::new(sps as f64, 0.05, 2.5e-4, 0.05);
        let decisions = slice(&mm.process(&shifted));
        // Allow 50 chips of convergence, then no errors at all.
        let errs = errors_after(
            &decisions[..chips.len() - 10],
            &chips[..chips.len() - 10],
            50,
        );
        assert_eq!(errs, 0);
    }

    #[test]
    fn tracks_clock_rate_mismatch() {
        let sps = 8;
        let chips = random_chips(20_000, 3);
        let rx = received(&chips, sps);
        let start = RrcSpec::new(sps).chain_delay() as f64;
        // Receiver sees 2% more samples per chip than nominal.
        let stretched = resample(&rx, 1.0 / 1.02, start * 1.02 / 1.02);
        let mut mm = ClockRecoveryMm::new(sps as f64, 0.05, 2.5e-4, 0.05);
        mm.process(&stretched);
        let truth = sps as f64 * 1.02;
        assert!(
            (mm.omega() - truth).abs() / truth < 0.005,
            "omega {}",
            mm.omega()
        );
    }

    #[test]
    fn state_stays_bounded_on_garbage() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let mut mm = ClockRecoveryMm::new(4.0, 0.05, 2.5e-4, 0.1);
        for _ in 0..50 {
            let block: Vec<Complex64> = (0..1000)
                .map(|_| Complex64::new(rng.random_range(-1e6..1e6), rng.random_range(-1e6..1e6)))
                .collect();
            mm.process(&block);
            let (lo, hi) = mm.omega_bounds();
            assert!(mm.omega() >= lo && mm.omega() <= hi);
            assert!((0.0..1.0).contains(&mm.mu()));
        }
    }

    #[test]
    fn streaming_matches_batch() {
        let chips = random_chips(500, 5);
        let rx = received(&chips, 4);
        let mut a = ClockRecoveryMm::new(4.0, 0.05, 2.5e-4, 0.05);
        let batch = a.process(&rx);
        let mut b = ClockRecoveryMm::new(4.0, 0.05, 2.5e-4, 0.05);
        let mut streamed = vec![];
        for chunk in rx.chunks(37) {
            streamed.extend(b.process(chunk));
        }
        assert_eq!(batch, streamed);
    }
}
