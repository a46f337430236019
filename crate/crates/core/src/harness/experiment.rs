//! Monte-Carlo loopback sweeps: continuous-stream BER, raw chip error rate
//! and burst PER. Every work item draws from its own seed derived from the
//! master seed, so results do not depend on the execution mode.

use super::metrics::{count_bit_errors, count_octet_bit_errors, MetricRow};
use super::HarnessError;
use crate::channel::{apply_channel, ChannelConfig};
use crate::exec::{derive_seed, map_indexed, Execution};
use crate::framing::{build_frame, FrameEvent, FCS_LEN};
use crate::modem::{modulate_bits, modulate_chips, receive_genie, ModemConfig, Receiver};
use crate::rateplan::Band;
use crate::spreading::{despread, ChipWord, CHIPS_PER_BIT};
use crate::sync::{genie_demod, GenieParams, LoopMode, Synchronizer};
use crate::waveform::slice;
use crate::Error;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub modem: ModemConfig,
    /// Full-band channel SNR of each point.
    pub snr_points_db: Vec<f64>,
    pub seed: u64,
    /// Hand the receiver the true channel instead of running the loops.
    pub genie: bool,
    pub exec: Execution,
    /// Lower bound on compared bits (or chips) per point for BER runs.
    pub min_bits_per_point: u64,
    /// Data bits per independently generated stream in BER runs.
    pub block_bits: usize,
    /// Bits at the head of each stream excluded while the loops settle.
    pub warmup_bits: usize,
    /// Leading bits of each BER stream run with the acquisition loop gains.
    pub acquisition_bits: usize,
    pub frames_per_point: usize,
    pub payload_size: usize,
    /// Silence before and after each burst in PER runs.
    pub idle_samples: usize,
    /// Carrier offsets are drawn uniformly from `+-max_cfo_hz`.
    pub max_cfo_hz: f64,
    pub random_phase: bool,
    /// Draw a fractional delay uniformly from `[0, sps)`.
    pub random_delay: bool,
}

impl ExperimentConfig {
    pub fn new(band: Band) -> Self {
        let modem = ModemConfig::new(band, crate::rateplan::DEFAULT_SPS_CHIP);
        Self {
            idle_samples: modem.rrc.chain_delay() + 64 * modem.sps,
            modem,
            snr_points_db: Vec::new(),
            seed: 1,
            genie: false,
            exec: Execution::default(),
            min_bits_per_point: 100_000,
            block_bits: 2000,
            warmup_bits: 64,
            acquisition_bits: 16,
            frames_per_point: 100,
            payload_size: 122,
            max_cfo_hz: 0.0,
            random_phase: true,
            random_delay: true,
        }
    }

    /// Channel SNR that yields `ebn0_db` at this configuration's rates.
    pub fn snr_for_ebn0(&self, ebn0_db: f64) -> f64 {
        ebn0_db - self.modem.ebn0_offset_db()
    }

    /// The CSV comment that documents the Eb/N0 column.
    pub fn ebn0_note(&self) -> String {
        format!(
            "ebn0_db = snr_db + {:.4} dB = 10*log10(fs / bit_rate), fs = {} Hz, bit_rate = {} b/s",
            self.modem.ebn0_offset_db(),
            self.modem.sample_rate(),
            self.modem.bit_rate()
        )
    }

    fn draw_channel(&self, snr_db: f64, rng: &mut ChaCha8Rng) -> ChannelConfig {
        let phase_rad = if self.random_phase {
            rng.random_range(-std::f64::consts::PI..std::f64::consts::PI)
        } else {
            0.0
        };
        let cfo_hz = if self.max_cfo_hz > 0.0 {
            rng.random_range(-self.max_cfo_hz..=self.max_cfo_hz)
        } else {
            0.0
        };
        let delay_samples = if self.random_delay {
            rng.random_range(0.0..self.modem.sps as f64)
        } else {
            0.0
        };
        ChannelConfig {
            snr_db,
            cfo_hz,
            phase_rad,
            delay_samples,
            seed: rng.random(),
            // Shaped random chips have unit power; idle gaps must not
            // lower the noise floor.
            signal_power: Some(1.0),
            ..Default::default()
        }
    }

    fn genie_params(&self, ch: &ChannelConfig) -> GenieParams {
        GenieParams {
            phase_rad: ch.phase_rad,
            cfo_normalized: ch.cfo_hz / self.modem.sample_rate(),
            delay_samples: ch.delay_samples,
        }
    }

    fn check(&self) -> Result<(), HarnessError> {
        let bad = |m: &str| Err(HarnessError::Experiment(m.to_string()));
        if self.snr_points_db.is_empty() {
            return bad("no SNR points given");
        }
        if self.snr_points_db.iter().any(|s| s.is_nan()) {
            return bad("SNR points must not be NaN");
        }
        if self.frames_per_point == 0 {
            return bad("frames_per_point must be at least 1");
        }
        if self.block_bits < 2 * ALIGN_SEGMENT_BITS {
            return bad("block_bits too small to align");
        }
        if self.payload_size < 2 || self.payload_size > crate::framing::MAX_PAYLOAD_LEN {
            return bad("payload size must fit the sequence number and the PSDU limit");
        }
        Ok(())
    }
}

fn random_bits(n: usize, rng: &mut impl Rng) -> Vec<u8> {
    (0..n).map(|_| rng.random_range(0..2u8)).collect()
}

/// Bits per re-alignment segment when comparing a synchronized stream.
const ALIGN_SEGMENT_BITS: usize = 64;
/// Chip lags tried around the previous alignment.
const ALIGN_TRACK: isize = 3;

/// Chip lag in `lags` that maximizes `|sum soft[lag + k].re * tx[k]|` over
/// chips `range` of the transmitted sequence.
fn best_lag(
    soft: &[Complex64],
    tx: &[f64],
    range: std::ops::Range<usize>,
    lags: impl Iterator<Item = isize>,
) -> Option<isize> {
    lags.filter_map(|lag| {
        let first = range.start as isize + lag;
        let last = range.end as isize + lag;
        if first < 0 || last as usize > soft.len() {
            return None;
        }
        let c: f64 = range
            .clone()
            .map(|k| soft[(k as isize + lag) as usize].re * tx[k])
            .sum();
        Some((lag, c.abs()))
    })
    .max_by(|a, b| a.1.total_cmp(&b.1))
    .map(|(lag, _)| lag)
}

/// Compares the data bits recovered from `soft` with `bits`, skipping the
/// first `warmup` bits. The chip lag is found once by a wide search and then
/// tracked segment by segment, so slips in the timing loop cost only the
/// bits they actually corrupt. Returns `(bit_errors, bits_compared)`.
fn compare_stream(
    soft: &[Complex64],
    bits: &[u8],
    encoded: &[u8],
    warmup: usize,
    max_lag: usize,
) -> (u64, u64) {
    let chips = crate::spreading::spread(encoded);
    let tx: Vec<f64> = chips
        .iter()
        .map(|&c| if c == 1 { 1.0 } else { -1.0 })
        .collect();
    let hard = slice(soft);
    let n = bits.len();
    let first_seg = warmup * CHIPS_PER_BIT..((warmup + ALIGN_SEGMENT_BITS).min(n)) * CHIPS_PER_BIT;
    let Some(mut lag) = best_lag(soft, &tx, first_seg, 0..=max_lag as isize) else {
        return (0, 0);
    };
    // Recovered differentially-encoded bits; the leading bit of each
    // comparison needs its predecessor, so start one bit early.
    let mut est: Vec<Option<u8>> = vec![None; n];
    let mut seg = warmup.saturating_sub(1);
    while seg < n {
        let end = (seg + ALIGN_SEGMENT_BITS).min(n);
        let range = seg * CHIPS_PER_BIT..end * CHIPS_PER_BIT;
        if let Some(l) = best_lag(soft, &tx, range, lag - ALIGN_TRACK..=lag + ALIGN_TRACK) {
            lag = l;
        }
        for (b, slot) in est.iter_mut().enumerate().take(end).skip(seg) {
            let start = (b * CHIPS_PER_BIT) as isize + lag;
            if start < 0 || start as usize + CHIPS_PER_BIT > hard.len() {
                continue;
            }
            let s = start as usize;
            *slot = Some(despread(ChipWord::from_chips(&hard[s..s + CHIPS_PER_BIT])).0);
        }
        seg = end;
    }
    let (mut errors, mut compared) = (0, 0);
    for b in warmup.max(1)..n {
        // A bit that never reached the receiver counts as wrong.
        let decoded = match (est[b - 1], est[b]) {
            (Some(p), Some(c)) => p ^ c,
            _ => bits[b] ^ 1,
        };
        errors += u64::from(decoded != bits[b]);
        compared += 1;
    }
    (errors, compared)
}

struct BlockResult {
    errors: u64,
    compared: u64,
    ok: bool,
}

impl BlockResult {
    fn bits(errors: u64, compared: u64) -> Self {
        Self {
            errors,
            compared,
            ok: errors == 0,
        }
    }
}

fn ber_block(cfg: &ExperimentConfig, snr_db: f64, seed: u64) -> Result<BlockResult, Error> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = cfg.warmup_bits + cfg.block_bits;
    let bits = random_bits(n, &mut rng);
    let encoded = crate::spreading::diff_encode(&bits, &mut Default::default());
    let tx = modulate_bits(&bits, &cfg.modem)?;
    let ch = cfg.draw_channel(snr_db, &mut rng);
    let rx = apply_channel(&tx, &ch)?;
    let soft = if cfg.genie {
        genie_demod(&rx.samples, &cfg.genie_params(&ch), &cfg.modem.rrc)?
    } else {
        // Pull in with the acquisition gains, then hold with the tracking
        // gains as the receiver does once it has locked.
        let mut sync = Synchronizer::new(&cfg.modem.sync, &cfg.modem.rrc)?;
        let split = (cfg.acquisition_bits * CHIPS_PER_BIT * cfg.modem.sps).min(rx.len());
        let mut soft = sync.process(&rx.samples[..split]);
        sync.set_mode(LoopMode::Track);
        soft.extend(sync.process(&rx.samples[split..]));
        soft
    };
    let max_lag = 2 * cfg.modem.rrc.span + 16;
    let (errors, compared) = compare_stream(&soft, &bits, &encoded, cfg.warmup_bits, max_lag);
    Ok(BlockResult::bits(errors, compared))
}

fn blocks_for(cfg: &ExperimentConfig, bits_per_block: usize) -> usize {
    (cfg.min_bits_per_point as usize)
        .div_ceil(bits_per_block)
        .max(1)
}

/// Runs `job(point, block)` for every block of every point in parallel and
/// folds the results into one row per point.
fn sweep<F>(
    cfg: &ExperimentConfig,
    blocks: usize,
    ebn0_offset: f64,
    job: F,
) -> Result<Vec<MetricRow>, Error>
where
    F: Fn(usize, usize) -> Result<BlockResult, Error> + Sync + Send,
{
    let points = cfg.snr_points_db.len();
    let results = map_indexed(points * blocks, cfg.exec, |i| job(i / blocks, i % blocks));
    let mut rows = Vec::with_capacity(points);
    let mut it = results.into_iter();
    for &snr_db in &cfg.snr_points_db {
        let mut row = MetricRow {
            snr_db,
            ebn0_db: snr_db + ebn0_offset,
            ber: 0.0,
            per: 0.0,
            frames_sent: 0,
            frames_ok: 0,
            bit_errors: 0,
            bits_compared: 0,
        };
        for r in it.by_ref().take(blocks) {
            let r = r?;
            row.frames_sent += 1;
            row.frames_ok += u64::from(r.ok);
            row.bit_errors += r.errors;
            row.bits_compared += r.compared;
        }
        finish_row(&mut row);
        rows.push(row);
    }
    Ok(rows)
}

fn finish_row(row: &mut MetricRow) {
    if row.bits_compared > 0 {
        row.ber = row.bit_errors as f64 / row.bits_compared as f64;
    }
    if row.frames_sent > 0 {
        row.per = 1.0 - row.frames_ok as f64 / row.frames_sent as f64;
    }
}

/// Data-bit error rate over continuous random bit streams. Each stream of
/// `block_bits` counts as one "frame" in the row, `frames_ok` being the
/// error-free streams.
pub fn run_ber_experiment(cfg: &ExperimentConfig) -> Result<Vec<MetricRow>, Error> {
    cfg.check()?;
    let blocks = blocks_for(cfg, cfg.block_bits);
    sweep(cfg, blocks, cfg.modem.ebn0_offset_db(), |p, b| {
        ber_block(
            cfg,
            cfg.snr_points_db[p],
            derive_seed(cfg.seed, &[0, p as u64, b as u64]),
        )
    })
}

const CHIP_BLOCK: usize = 100_000;

/// Raw chip error rate without spreading, differential coding or loops:
/// random chips through the channel and the genie demodulator with zero
/// delay. The `ebn0_db` column holds the per-chip Es/N0.
pub fn run_chip_ber(cfg: &ExperimentConfig) -> Result<Vec<MetricRow>, Error> {
    cfg.check()?;
    let blocks = blocks_for(cfg, CHIP_BLOCK);
    sweep(cfg, blocks, cfg.modem.chip_snr_offset_db(), |p, b| {
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, &[1, p as u64, b as u64]));
        let chips = random_bits(CHIP_BLOCK, &mut rng);
        let tx = modulate_chips(&chips, &cfg.modem)?;
        let ch = ChannelConfig {
            delay_samples: 0.0,
            ..cfg.draw_channel(cfg.snr_points_db[p], &mut rng)
        };
        let rx = apply_channel(&tx, &ch)?;
        let soft = genie_demod(&rx.samples, &cfg.genie_params(&ch), &cfg.modem.rrc)?;
        let hard = slice(&soft[..CHIP_BLOCK]);
        Ok(BlockResult::bits(
            count_bit_errors(&chips, &hard),
            CHIP_BLOCK as u64,
        ))
    })
}

/// Outcome of one transmitted burst.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameOutcome {
    pub payload: Vec<u8>,
    pub events: Vec<FrameEvent>,
    pub ok: bool,
    /// PSDU bit errors against the first event of the right length.
    pub bit_errors: Option<u64>,
}

/// Sends payload `seq` (sequence number then random octets) as one burst
/// through the channel and the receiver.
pub fn run_frame(
    cfg: &ExperimentConfig,
    snr_db: f64,
    seq: u16,
    seed: u64,
) -> Result<FrameOutcome, Error> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut payload = seq.to_le_bytes().to_vec();
    payload.extend((2..cfg.payload_size).map(|_| rng.random::<u8>()));
    let frame = build_frame(&payload, cfg.modem.byte_modulus)?;
    let shaped = modulate_bits(&frame.to_bits(), &cfg.modem)?;
    let zero = Complex64::new(0.0, 0.0);
    let mut burst = vec![zero; cfg.idle_samples];
    burst.extend(shaped.samples);
    burst.extend(std::iter::repeat_n(zero, cfg.idle_samples));
    let tx = crate::waveform::IqBuffer::new(burst, shaped.sample_rate);
    let ch = cfg.draw_channel(snr_db, &mut rng);
    let rx = apply_channel(&tx, &ch)?;
    let events = if cfg.genie {
        receive_genie(&rx.samples, &cfg.genie_params(&ch), &cfg.modem)?
    } else {
        Receiver::new(&cfg.modem)?.process(&rx.samples)
    };
    let ok = events
        .iter()
        .any(|e| e.crc_ok && e.payload() == payload.as_slice());
    let bit_errors = events
        .iter()
        .find(|e| e.psdu.len() == frame.psdu.len())
        .map(|e| count_octet_bit_errors(&e.psdu, &frame.psdu));
    Ok(FrameOutcome {
        payload,
        events,
        ok,
        bit_errors,
    })
}

/// Packet error rate over independent bursts. `ber` is measured on the
/// PSDUs of frames whose length field survived.
pub fn run_per_experiment(cfg: &ExperimentConfig) -> Result<Vec<MetricRow>, Error> {
    cfg.check()?;
    let frames = cfg.frames_per_point;
    let psdu_bits = ((cfg.payload_size + FCS_LEN) * 8) as u64;
    sweep(cfg, frames, cfg.modem.ebn0_offset_db(), |p, f| {
        let seed = derive_seed(cfg.seed, &[2, p as u64, f as u64]);
        let out = run_frame(cfg, cfg.snr_points_db[p], f as u16, seed)?;
        let (errors, compared) = match out.bit_errors {
            Some(e) => (e, psdu_bits),
            None => (0, 0),
        };
        Ok(BlockResult {
            errors,
            compared,
            ok: out.ok,
        })
    })
}
