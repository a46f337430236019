//! Rate planning: packet size modulus and converter interpolation /
//! decimation factors for the USRP1-style front end.
//!
//! The converter formulas use samples per *bit* (`sps_bit`), which is how
//! the published factors were derived. The simulator itself runs at
//! `sps_chip` samples per chip.

use std::fmt;
use std::str::FromStr;
use thiserror::Error;

pub const DAC_RATE: u64 = 128_000_000;
pub const ADC_RATE: u64 = 64_000_000;
/// DAC rate over the USB sample rate (128 MSPS / 8 MSPS).
pub const USB_PACKING: u64 = 16;
/// Samples per USB packet.
pub const USB_PACKET_SAMPLES: u64 = 128;
pub const CHIPS_PER_BIT: u64 = 15;
pub const DEFAULT_SPS_CHIP: usize = 4;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RateError {
    #[error("interpolation factor {0} is not an integer in 16..=512 step 4")]
    IllegalInterpolation(Ratio),
    #[error("decimation factor {0} is not an integer in 8..=256 step 2")]
    IllegalDecimation(Ratio),
    #[error("samples per symbol must be positive")]
    ZeroSps,
    #[error("unknown band {0:?} (expected 868 or 915)")]
    UnknownBand(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Band {
    Band868,
    Band915,
}

impl Band {
    pub fn bit_rate(self) -> u64 {
        match self {
            Band::Band868 => 20_000,
            Band::Band915 => 40_000,
        }
    }

    pub fn chip_rate(self) -> u64 {
        self.bit_rate() * CHIPS_PER_BIT
    }

    pub fn center_mhz(self) -> f64 {
        match self {
            Band::Band868 => 868.3,
            Band::Band915 => 916.0,
        }
    }
}

impl FromStr for Band {
    type Err = RateError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "868" => Ok(Band::Band868),
            "915" => Ok(Band::Band915),
            other => Err(RateError::UnknownBand(other.to_string())),
        }
    }
}

impl fmt::Display for Band {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Band::Band868 => f.write_str("868"),
            Band::Band915 => f.write_str("915"),
        }
    }
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

fn lcm(a: u64, b: u64) -> u64 {
    a / gcd(a, b) * b
}

/// Exact non-negative rational in lowest terms.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Ratio {
    pub num: u64,
    pub den: u64,
}

impl Ratio {
    pub fn new(num: u64, den: u64) -> Self {
        assert!(den != 0, "zero denominator");
        let g = gcd(num, den).max(1);
        Self {
            num: num / g,
            den: den / g,
        }
    }

    pub fn is_integer(&self) -> bool {
        self.den == 1
    }

    pub fn as_integer(&self) -> Option<u64> {
        self.is_integer().then_some(self.num)
    }

    pub fn to_f64(&self) -> f64 {
        self.num as f64 / self.den as f64
    }
}

impl fmt::Display for Ratio {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.den == 1 {
            write!(f, "{}", self.num)
        } else {
            write!(f, "{}/{}", self.num, self.den)
        }
    }
}

/// `LCM(16, sps) * bps / sps`, reported exactly.
pub fn byte_modulus(sps: u64, bps: u64) -> Result<Ratio, RateError> {
    if sps == 0 || bps == 0 {
        return Err(RateError::ZeroSps);
    }
    Ok(Ratio::new(lcm(USB_PACKING, sps) * bps, sps))
}

fn check_interpolation(i: Ratio) -> Result<u64, RateError> {
    match i.as_integer() {
        Some(v) if (16..=512).contains(&v) && v % 4 == 0 => Ok(v),
        _ => Err(RateError::IllegalInterpolation(i)),
    }
}

fn check_decimation(d: Ratio) -> Result<u64, RateError> {
    match d.as_integer() {
        Some(v) if (8..=256).contains(&v) && v % 2 == 0 => Ok(v),
        _ => Err(RateError::IllegalDecimation(d)),
    }
}

/// Checks both factors against the converter's legal sets. All offending
/// factors are reported.
pub fn validate_factors(interpolation: u64, decimation: u64) -> Result<(), Vec<RateError>> {
    let errs: Vec<RateError> = [
        check_interpolation(Ratio::new(interpolation, 1)).err(),
        check_decimation(Ratio::new(decimation, 1)).err(),
    ]
    .into_iter()
    .flatten()
    .collect();
    if errs.is_empty() {
        Ok(())
    } else {
        Err(errs)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateConfig {
    pub band: Band,
    pub bit_rate: u64,
    pub chip_rate: u64,
    /// Samples per bit, as used by the converter formulas.
    pub sps_bit: u64,
    /// Samples per chip used by the simulated waveform.
    pub sps_chip: usize,
    pub interpolation: u64,
    pub decimation: u64,
    pub dac_rate: u64,
    pub adc_rate: u64,
}

impl RateConfig {
    /// Simulator sample rate in Hz.
    pub fn sample_rate(&self) -> f64 {
        (self.chip_rate * self.sps_chip as u64) as f64
    }

    /// Host-side sample rate implied by the interpolation factor.
    pub fn host_tx_rate(&self) -> f64 {
        self.dac_rate as f64 / self.interpolation as f64
    }

    pub fn host_rx_rate(&self) -> f64 {
        self.adc_rate as f64 / self.decimation as f64
    }

    pub fn with_sps_chip(mut self, sps_chip: usize) -> Self {
        self.sps_chip = sps_chip;
        self
    }

    /// `(field, value)` rows for display.
    pub fn table(&self) -> Vec<(&'static str, String)> {
        let bm = byte_modulus(self.sps_bit, 1).expect("sps_bit is positive");
        vec![
            ("band_mhz", format!("{}", self.band.center_mhz())),
            ("bit_rate", self.bit_rate.to_string()),
            ("chip_rate", self.chip_rate.to_string()),
            ("sps_bit", self.sps_bit.to_string()),
            ("sps_chip", self.sps_chip.to_string()),
            ("interpolation", self.interpolation.to_string()),
            ("decimation", self.decimation.to_string()),
            ("dac_rate", self.dac_rate.to_string()),
            ("adc_rate", self.adc_rate.to_string()),
            ("host_tx_rate", format!("{}", self.host_tx_rate())),
            ("host_rx_rate", format!("{}", self.host_rx_rate())),
            ("sim_sample_rate", format!("{}", self.sample_rate())),
            (
                "byte_modulus",
                format!(
                    "{bm}{}",
                    if bm.is_integer() {
                        ""
                    } else {
                        " (non-integer)"
                    }
                ),
            ),
        ]
    }
}

/// `I = DAC / (r * sps)`, `D = ADC / (r * sps)` with `r` the bit rate.
pub fn plan(band: Band, sps: u64) -> Result<RateConfig, RateError> {
    if sps == 0 {
        return Err(RateError::ZeroSps);
    }
    let r = band.bit_rate();
    let interpolation = check_interpolation(Ratio::new(DAC_RATE, r * sps))?;
    let decimation = check_decimation(Ratio::new(ADC_RATE, r * sps))?;
    Ok(RateConfig {
        band,
        bit_rate: r,
        chip_rate: band.chip_rate(),
        sps_bit: sps,
        sps_chip: DEFAULT_SPS_CHIP,
        interpolation,
        decimation,
        dac_rate: DAC_RATE,
        adc_rate: ADC_RATE,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Smallest packet size in octets, with one bit per symbol, whose sample
    /// count fills whole 128-sample USB packets.
    pub(crate) fn brute_force_modulus(sps: u64) -> Ratio {
        let octets = (1..)
            .find(|b| (8 * b * sps).is_multiple_of(USB_PACKET_SAMPLES))
            .unwrap();
        Ratio::new(octets, 1)
    }

    #[test]
    fn modulus_examples() {
        assert_eq!(byte_modulus(16, 1).unwrap(), Ratio::new(1, 1));
        assert_eq!(byte_modulus(8, 1).unwrap(), Ratio::new(2, 1));
        assert_eq!(byte_modulus(35, 1).unwrap(), Ratio::new(16, 1));
        assert!(byte_modulus(0, 1).is_err());
    }

    #[test]
    fn modulus_matches_search() {
        for sps in 1..=64 {
            assert_eq!(
                byte_modulus(sps, 1).unwrap(),
                brute_force_modulus(sps),
                "sps {sps}"
            );
        }
    }

    #[test]
    fn published_factors() {
        let a = plan(Band::Band868, 16).unwrap();
        assert_eq!((a.interpolation, a.decimation), (400, 200));
        assert_eq!(a.chip_rate, 300_000);
        let b = plan(Band::Band915, 8).unwrap();
        assert_eq!((b.interpolation, b.decimation), (400, 200));
        assert_eq!(b.chip_rate, 600_000);
    }

    #[test]
    fn non_integer_factor_rejected() {
        match plan(Band::Band868, 13) {
            Err(RateError::IllegalInterpolation(r)) => assert!(!r.is_integer()),
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(
            plan(Band::Band868, 1),
            Err(RateError::IllegalInterpolation(_))
        ));
    }

    #[test]
    fn factor_validation() {
        assert!(validate_factors(400, 200).is_ok());
        assert!(validate_factors(16, 8).is_ok());
        assert!(validate_factors(512, 256).is_ok());
        let errs = validate_factors(18, 9).unwrap_err();
        assert_eq!(errs.len(), 2);
        assert!(matches!(errs[0], RateError::IllegalInterpolation(_)));
        assert!(matches!(errs[1], RateError::IllegalDecimation(_)));
        assert_eq!(validate_factors(400, 9).unwrap_err().len(), 1);
    }

    #[test]
    fn interpolation_is_twice_decimation() {
        for band in [Band::Band868, Band::Band915] {
            for sps in 1..=400 {
                if let Ok(cfg) = plan(band, sps) {
                    assert_eq!(cfg.interpolation, 2 * cfg.decimation);
                    assert_eq!(cfg.chip_rate, 15 * cfg.bit_rate);
                }
            }
        }
    }

    #[test]
    fn band_parsing() {
        assert_eq!("868".parse::<Band>().unwrap(), Band::Band868);
        assert_eq!("915".parse::<Band>().unwrap(), Band::Band915);
        assert!("2450".parse::<Band>().is_err());
    }
}
