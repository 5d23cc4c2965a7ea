//! Data-converter power arithmetic: the exponential-in-bits dissipation law
//! and the DAC/ADC comparison it supports.

use crate::error::{Error, Result};

/// Converter dissipation parameters: P = c * tau * 2^bits.
#[derive(Debug, Clone, Copy)]
pub struct ConverterParams {
    /// Technology constant in mW per GHz per level.
    pub c: f64,
    /// Sampling rate in GHz.
    pub tau: f64,
    /// Resolution in bits.
    pub bits: u32,
}

/// Reference fabrication rows for converters on the same GaAs process at
/// 1 GHz sampling: (bits, sampling rate GHz, dissipation mW). These are
/// published calibration data for the 2^b law, not measurements made here.
pub const REFERENCE_ADC: (u32, f64, f64) = (4, 1.0, 140.0);
pub const REFERENCE_DAC: (u32, f64, f64) = (5, 1.0, 85.0);

/// ADC dissipation in mW under the exponential law.
pub fn adc_power_mw(p: &ConverterParams) -> f64 {
    p.c * p.tau * (1u64 << p.bits) as f64
}

/// The c * tau product that reproduces the reference ADC row exactly:
/// 140 mW / 2^4 = 8.75 mW.
pub fn calibrated_c_tau() -> f64 {
    let (bits, tau, mw) = REFERENCE_ADC;
    mw / (1u64 << bits) as f64 / tau
}

/// DAC-to-ADC dissipation ratio.
pub fn dac_to_adc_ratio(dac_power_mw: f64, adc_power_mw: f64) -> Result<f64> {
    if dac_power_mw <= 0.0 || adc_power_mw <= 0.0 {
        return Err(Error::config("converter powers must be positive"));
    }
    Ok(dac_power_mw / adc_power_mw)
}

/// Fractional dissipation saving when dropping from `from_bits` to
/// `to_bits`, assuming the DAC follows the same doubling-per-bit law:
/// 1 - 2^(to - from).
pub fn bit_reduction_saving(from_bits: u32, to_bits: u32) -> Result<f64> {
    if to_bits >= from_bits {
        return Err(Error::config(format!(
            "saving requires a bit reduction; got {from_bits} -> {to_bits}"
        )));
    }
    Ok(1.0 - 2f64.powi(to_bits as i32 - from_bits as i32))
}
