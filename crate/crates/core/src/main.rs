use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;
use subghz_phy::channel::{apply_channel, ChannelConfig};
use subghz_phy::exec::Execution;
use subghz_phy::framing::MAX_PAYLOAD_LEN;
use subghz_phy::harness::{
    bandwidth_at, iq_read, iq_write, peak_index, psd, run_ber_experiment, run_per_experiment,
    write_csv, ExperimentConfig, MetricRow,
};
use subghz_phy::modem::{receive_genie, to_if, transmit_bursts, ModemConfig, Receiver};
use subghz_phy::rateplan::{plan, Band, DEFAULT_SPS_CHIP};
use subghz_phy::sync::GenieParams;
use subghz_phy::waveform::{mix, IqBuffer};

#[derive(Parser)]
#[command(
    version,
    about = "IEEE 802.15.4 868/915 MHz DSSS modem, channel simulator and BER/PER harness"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Modulate a file into frames and write baseband (or IF) I/Q samples.
    Tx(TxArgs),
    /// Receive frames from an I/Q file and write the recovered payloads.
    Rx(RxArgs),
    /// Continuous-stream BER sweep through the simulated channel.
    LoopbackBer(BerArgs),
    /// Burst PER sweep through the simulated channel.
    LoopbackPer(PerArgs),
    /// Print the converter rate plan for a band.
    Rateplan(RateplanArgs),
    /// Welch power spectral density of an I/Q file.
    Psd(PsdArgs),
}

#[derive(Args)]
struct RadioArgs {
    /// 868 or 915.
    #[arg(long)]
    band: Band,
    /// Samples per chip.
    #[arg(long, default_value_t = DEFAULT_SPS_CHIP)]
    sps: usize,
    /// Intermediate frequency in Hz; 0 means baseband.
    #[arg(long, default_value_t = 0.0)]
    if_hz: f64,
}

impl RadioArgs {
    fn modem(&self) -> Result<ModemConfig> {
        if self.sps < 2 {
            bail!("--sps must be at least 2");
        }
        Ok(ModemConfig::new(self.band, self.sps))
    }
}

#[derive(Args)]
struct TxArgs {
    #[command(flatten)]
    radio: RadioArgs,
    /// Payload file; split into frames of at most --frame-size octets.
    #[arg(long)]
    payload: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = MAX_PAYLOAD_LEN)]
    frame_size: usize,
    /// Zero samples before, between and after bursts.
    #[arg(long, default_value_t = 2000)]
    idle: usize,
    /// Add white Gaussian noise at this full-band SNR in dB.
    #[arg(long)]
    snr: Option<f64>,
    #[arg(long, default_value_t = 1)]
    seed: u64,
}

#[derive(Args)]
struct RxArgs {
    #[command(flatten)]
    radio: RadioArgs,
    #[arg(long = "in")]
    input: PathBuf,
    /// Concatenated payloads of all frames that passed the FCS check.
    #[arg(long)]
    out: PathBuf,
    /// Bypass the loops and assume zero phase, offset and delay.
    #[arg(long)]
    genie: bool,
}

#[derive(Args)]
struct SweepArgs {
    #[arg(long)]
    band: Band,
    #[arg(long, default_value_t = DEFAULT_SPS_CHIP)]
    sps: usize,
    /// Comma-separated full-band SNR points in dB.
    #[arg(
        long,
        value_delimiter = ',',
        allow_hyphen_values = true,
        required_unless_present = "ebn0",
        conflicts_with = "ebn0"
    )]
    snr: Vec<f64>,
    /// Comma-separated Eb/N0 points in dB, converted to SNR.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    ebn0: Vec<f64>,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long)]
    csv: PathBuf,
    #[arg(long)]
    genie: bool,
    /// Largest carrier offset in Hz, drawn uniformly per stream or frame.
    #[arg(long, default_value_t = 0.0)]
    cfo_hz: f64,
    /// Run on the calling thread only.
    #[arg(long)]
    sequential: bool,
}

impl SweepArgs {
    fn config(&self) -> Result<ExperimentConfig> {
        if self.sps < 2 {
            bail!("--sps must be at least 2");
        }
        let mut cfg = ExperimentConfig::new(self.band);
        cfg.modem = ModemConfig::new(self.band, self.sps);
        cfg.idle_samples = cfg.modem.rrc.chain_delay() + 64 * self.sps;
        cfg.seed = self.seed;
        cfg.genie = self.genie;
        cfg.max_cfo_hz = self.cfo_hz;
        if self.sequential {
            cfg.exec = Execution::Sequential;
        }
        cfg.snr_points_db = if self.ebn0.is_empty() {
            self.snr.clone()
        } else {
            self.ebn0.iter().map(|&e| cfg.snr_for_ebn0(e)).collect()
        };
        Ok(cfg)
    }
}

#[derive(Args)]
struct BerArgs {
    #[command(flatten)]
    sweep: SweepArgs,
    /// Minimum data bits compared per point.
    #[arg(long, default_value_t = 100_000)]
    bits: u64,
}

#[derive(Args)]
struct PerArgs {
    #[command(flatten)]
    sweep: SweepArgs,
    #[arg(long, default_value_t = 100)]
    frames: usize,
    #[arg(long, default_value_t = 122)]
    payload_size: usize,
}

#[derive(Args)]
struct RateplanArgs {
    #[arg(long)]
    band: Band,
    /// Samples per bit, as used by the converter formulas.
    #[arg(long)]
    sps: u64,
}

#[derive(Args)]
struct PsdArgs {
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long)]
    fft: usize,
    #[arg(long)]
    csv: PathBuf,
    /// Sample rate of the file in Hz.
    #[arg(long)]
    sample_rate: f64,
}

fn tx(a: &TxArgs) -> Result<()> {
    let cfg = a.radio.modem().context("tx: configuration")?;
    if a.frame_size < 1 || a.frame_size > MAX_PAYLOAD_LEN {
        bail!("tx: --frame-size must be in 1..={MAX_PAYLOAD_LEN}");
    }
    let data = std::fs::read(&a.payload)
        .with_context(|| format!("tx: reading {}", a.payload.display()))?;
    let mut frames: Vec<&[u8]> = data.chunks(a.frame_size).collect();
    if frames.is_empty() {
        frames.push(&[]);
    }
    let mut iq = transmit_bursts(&frames, a.idle, &cfg).context("tx: modulation")?;
    if a.radio.if_hz != 0.0 {
        iq = to_if(&iq, a.radio.if_hz).context("tx: IF mixing")?;
    }
    if let Some(snr_db) = a.snr {
        let ch = ChannelConfig {
            snr_db,
            seed: a.seed,
            signal_power: Some(1.0),
            ..Default::default()
        };
        iq = apply_channel(&iq, &ch).context("tx: channel")?;
    }
    iq_write(&iq.samples, &a.out).with_context(|| format!("tx: writing {}", a.out.display()))?;
    println!(
        "{} frame(s), {} samples at {} Hz",
        frames.len(),
        iq.len(),
        iq.sample_rate
    );
    Ok(())
}

fn rx(a: &RxArgs) -> Result<()> {
    let cfg = a.radio.modem().context("rx: configuration")?;
    let iq = iq_read(&a.input, cfg.sample_rate())
        .with_context(|| format!("rx: reading {}", a.input.display()))?;
    let events = if a.genie {
        let base = if a.radio.if_hz != 0.0 {
            mix(&iq, -a.radio.if_hz).context("rx: IF mixing")?
        } else {
            iq
        };
        receive_genie(&base.samples, &GenieParams::default(), &cfg).context("rx: demodulation")?
    } else {
        Receiver::new(&cfg)
            .context("rx: receiver setup")?
            .with_if(a.radio.if_hz)
            .process(&iq.samples)
    };
    let good: Vec<&[u8]> = events
        .iter()
        .filter(|e| e.crc_ok)
        .map(|e| e.payload())
        .collect();
    println!(
        "{} frame(s) decoded, {} with a bad FCS",
        good.len(),
        events.len() - good.len()
    );
    if good.is_empty() {
        bail!("rx: no frame passed the FCS check");
    }
    std::fs::write(&a.out, good.concat())
        .with_context(|| format!("rx: writing {}", a.out.display()))?;
    Ok(())
}

fn save_rows(stage: &str, path: &PathBuf, rows: &[MetricRow], note: &str) -> Result<()> {
    let mut out = BufWriter::new(
        File::create(path).with_context(|| format!("{stage}: creating {}", path.display()))?,
    );
    write_csv(&mut out, rows, note)
        .and_then(|_| out.flush())
        .with_context(|| format!("{stage}: writing CSV"))?;
    for r in rows {
        println!(
            "snr {:7.2} dB  Eb/N0 {:6.2} dB  BER {:.3e}  PER {:.3}  ({} bits, {}/{} ok)",
            r.snr_db, r.ebn0_db, r.ber, r.per, r.bits_compared, r.frames_ok, r.frames_sent
        );
    }
    Ok(())
}

fn loopback_ber(a: &BerArgs) -> Result<()> {
    let mut cfg = a.sweep.config().context("loopback-ber: configuration")?;
    cfg.min_bits_per_point = a.bits;
    let rows = run_ber_experiment(&cfg).context("loopback-ber: experiment")?;
    save_rows("loopback-ber", &a.sweep.csv, &rows, &cfg.ebn0_note())
}

fn loopback_per(a: &PerArgs) -> Result<()> {
    let mut cfg = a.sweep.config().context("loopback-per: configuration")?;
    cfg.frames_per_point = a.frames;
    cfg.payload_size = a.payload_size;
    let rows = run_per_experiment(&cfg).context("loopback-per: experiment")?;
    save_rows("loopback-per", &a.sweep.csv, &rows, &cfg.ebn0_note())
}

fn rateplan(a: &RateplanArgs) -> Result<()> {
    let rc = plan(a.band, a.sps).context("rateplan")?;
    for (field, value) in rc.table() {
        println!("{field:<16} {value}");
    }
    Ok(())
}

fn psd_cmd(a: &PsdArgs) -> Result<()> {
    if !(a.sample_rate > 0.0 && a.sample_rate.is_finite()) {
        bail!("psd: --sample-rate must be positive");
    }
    let iq: IqBuffer = iq_read(&a.input, a.sample_rate)
        .with_context(|| format!("psd: reading {}", a.input.display()))?;
    let points = psd(&iq.samples, a.sample_rate, a.fft).context("psd: estimation")?;
    let mut out = BufWriter::new(
        File::create(&a.csv).with_context(|| format!("psd: creating {}", a.csv.display()))?,
    );
    writeln!(out, "frequency_hz,power_db")
        .and_then(|_| {
            points
                .iter()
                .try_for_each(|p| writeln!(out, "{},{}", p.frequency_hz, p.power_db))
        })
        .and_then(|_| out.flush())
        .context("psd: writing CSV")?;
    let peak = points[peak_index(&points)];
    println!(
        "peak {:.1} Hz at {:.2} dB/Hz, -20 dB width {:.1} Hz",
        peak.frequency_hz,
        peak.power_db,
        bandwidth_at(&points, 20.0)
    );
    Ok(())
}

fn main() -> ExitCode {
    let result = match Cli::parse().command {
        Command::Tx(a) => tx(&a),
        Command::Rx(a) => rx(&a),
        Command::LoopbackBer(a) => loopback_ber(&a),
        Command::LoopbackPer(a) => loopback_per(&a),
        Command::Rateplan(a) => rateplan(&a),
        Command::Psd(a) => psd_cmd(&a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
