//! Python bindings: exposes the quantizer closed forms, the water-filling
//! allocator, the converter power arithmetic, and the Monte Carlo sweep
//! pipeline as a plain extension module.

use pyo3::exceptions::{PyOSError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

use cqabd::channel::ScenarioDims;
use cqabd::precoding::PrecoderKind;
use cqabd::quantization::{self, QuantizerSpec};
use cqabd::sweep::{run_sweep, RateMode, SweepConfig};

/// One sweep row: (snr_db, precoder, mode, bits, mean_rate, std_rate,
/// trials, seed).
type SweepTuple = (f64, String, String, u32, f64, f64, usize, u64);

fn to_py(e: cqabd::Error) -> PyErr {
    match &e {
        cqabd::Error::Config(_) => PyValueError::new_err(e.to_string()),
        cqabd::Error::Numerical(_) => PyRuntimeError::new_err(e.to_string()),
        cqabd::Error::Io { .. } => PyOSError::new_err(e.to_string()),
    }
}

fn spec_for(bits: u32, gamma: Option<f64>) -> PyResult<QuantizerSpec> {
    match gamma {
        Some(g) => QuantizerSpec::new(bits, g, 1, 1.0),
        None => QuantizerSpec::with_default_step(bits, 1, 1.0),
    }
    .map_err(to_py)
}

/// Distortion-minimizing uniform step for a unit-variance Gaussian.
#[pyfunction]
fn default_step(bits: u32) -> PyResult<f64> {
    quantization::default_step(bits).map_err(to_py)
}

/// (alpha, delta) of the power-normalized quantizer; `gamma` overrides the
/// per-bit default step.
#[pyfunction]
#[pyo3(signature = (bits, gamma=None))]
fn bussgang_factors(bits: u32, gamma: Option<f64>) -> PyResult<(f64, f64)> {
    let f = quantization::bussgang_delta(&spec_for(bits, gamma)?).map_err(to_py)?;
    Ok((f.alpha, f.delta))
}

/// Monte Carlo (gain, standard_error) of the normalized quantizer on a
/// unit-variance real Gaussian.
#[pyfunction]
#[pyo3(signature = (bits, samples=1_000_000, seed=1, gamma=None))]
fn empirical_gain(bits: u32, samples: usize, seed: u64, gamma: Option<f64>) -> PyResult<(f64, f64)> {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let est = quantization::empirical_bussgang_gain(&spec_for(bits, gamma)?, samples, &mut rng)
        .map_err(to_py)?;
    Ok((est.gain, est.std_error))
}

/// Component-wise midrise quantization of complex samples at the given
/// absolute step.
#[pyfunction]
fn quantize(x: Vec<Complex64>, bits: u32, step: f64) -> PyResult<Vec<Complex64>> {
    let spec = QuantizerSpec::new(bits, step, 1, 1.0).map_err(to_py)?;
    Ok(quantization::uniform_quantize(&x, &spec))
}

/// Water-filling power allocation over mode gains.
#[pyfunction]
fn water_filling(gains: Vec<f64>, total_power: f64, noise: f64) -> PyResult<Vec<f64>> {
    cqabd::precoding::water_filling(&gains, total_power, noise).map_err(to_py)
}

/// Converter dissipation in mW: c * tau * 2^bits.
#[pyfunction]
fn adc_power_mw(c: f64, tau: f64, bits: u32) -> f64 {
    cqabd::power::adc_power_mw(&cqabd::power::ConverterParams { c, tau, bits })
}

/// The c * tau product calibrated from the reference ADC row.
#[pyfunction]
fn calibrated_c_tau() -> f64 {
    cqabd::power::calibrated_c_tau()
}

#[pyfunction]
fn dac_to_adc_ratio(dac_power_mw: f64, adc_power_mw: f64) -> PyResult<f64> {
    cqabd::power::dac_to_adc_ratio(dac_power_mw, adc_power_mw).map_err(to_py)
}

#[pyfunction]
fn bit_reduction_saving(from_bits: u32, to_bits: u32) -> PyResult<f64> {
    cqabd::power::bit_reduction_saving(from_bits, to_bits).map_err(to_py)
}

/// Seeded Monte Carlo sweep. Returns one row per SNR point:
/// (snr_db, precoder, mode, bits, mean_rate, std_rate, trials, seed).
#[pyfunction]
#[pyo3(signature = (nb, users, antennas_each, precoder, mode, bits, snr_db, trials, seed, packet_len=100, gamma=None))]
#[allow(clippy::too_many_arguments)]
fn sweep(
    nb: usize,
    users: usize,
    antennas_each: usize,
    precoder: &str,
    mode: &str,
    bits: u32,
    snr_db: Vec<f64>,
    trials: usize,
    seed: u64,
    packet_len: usize,
    gamma: Option<f64>,
) -> PyResult<Vec<SweepTuple>> {
    let cfg = SweepConfig {
        dims: ScenarioDims::uniform(nb, users, antennas_each).map_err(to_py)?,
        precoder: precoder.parse::<PrecoderKind>().map_err(to_py)?,
        mode: mode.parse::<RateMode>().map_err(to_py)?,
        bits,
        gamma,
        snr_db,
        trials,
        packet_len,
        seed,
    };
    let result = run_sweep(&cfg).map_err(to_py)?;
    Ok(result
        .rows
        .into_iter()
        .map(|r| {
            (
                r.snr_db,
                r.precoder.as_str().to_string(),
                r.mode.as_str().to_string(),
                r.bits,
                r.mean_rate,
                r.std_rate,
                r.trials,
                r.seed,
            )
        })
        .collect())
}

#[pymodule]
fn cqabd_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(default_step, m)?)?;
    m.add_function(wrap_pyfunction!(bussgang_factors, m)?)?;
    m.add_function(wrap_pyfunction!(empirical_gain, m)?)?;
    m.add_function(wrap_pyfunction!(quantize, m)?)?;
    m.add_function(wrap_pyfunction!(water_filling, m)?)?;
    m.add_function(wrap_pyfunction!(adc_power_mw, m)?)?;
    m.add_function(wrap_pyfunction!(calibrated_c_tau, m)?)?;
    m.add_function(wrap_pyfunction!(dac_to_adc_ratio, m)?)?;
    m.add_function(wrap_pyfunction!(bit_reduction_saving, m)?)?;
    m.add_function(wrap_pyfunction!(sweep, m)?)?;
    Ok(())
}
