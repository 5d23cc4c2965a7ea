//! J-level uniform DAC model and its Bussgang linearization.
//!
//! The quantizer acts per real component with a symmetric midrise grid:
//! output levels at step*(l - (J-1)/2) for l = 0..J-1, decision thresholds
//! at step*(l - J/2), and clipping beyond the outer thresholds. Passing a
//! Gaussian signal through it decomposes as a linear gain plus uncorrelated
//! distortion; the closed forms below give the power-normalization factor
//! `alpha` (so the scaled quantizer output meets the average transmit-power
//! constraint) and the scalar Bussgang gain `delta` of the normalized
//! quantizer. A Monte Carlo estimator is kept alongside as an independent
//! check of both.
//!
//! Step-size convention: `step` is dimensionless, expressed in units of the
//! per-antenna complex signal standard deviation sqrt(P/nb). The per-real-
//! component signal variance is half the complex one, so the closed forms
//! see the threshold spacing sqrt(2)*step.

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use std::f64::consts::{PI, SQRT_2};

use crate::error::{Error, Result};
use crate::numerics::{identity, standard_normal_cdf, CMat};

/// Which summand the closed-form level sums use. `PerLevel` is the working
/// convention (the summand follows the summation index); `FirstLevel`
/// repeats the l = 1 term in every summand and is kept only for side-by-side
/// comparison. The two coincide at one bit.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Summand {
    PerLevel,
    FirstLevel,
}

/// Uniform quantizer description: bit depth, level count J = 2^bits, the
/// normalized step, and the transmit dimensions that fix the absolute step.
#[derive(Debug, Clone, Copy)]
pub struct QuantizerSpec {
    pub bits: u32,
    pub levels: u32,
    pub step: f64,
    pub nb: usize,
    pub power: f64,
}

impl QuantizerSpec {
    pub fn new(bits: u32, step: f64, nb: usize, power: f64) -> Result<Self> {
        if bits < 1 {
            return Err(Error::config("quantizer needs at least one bit"));
        }
        if bits > 24 {
            return Err(Error::config("quantizer bit depth above 24 is unsupported"));
        }
        if step <= 0.0 || !step.is_finite() {
            return Err(Error::config("quantizer step must be positive"));
        }
        if nb < 1 || power <= 0.0 {
            return Err(Error::config("quantizer needs nb >= 1 and power > 0"));
        }
        Ok(QuantizerSpec {
            bits,
            levels: 1u32 << bits,
            step,
            nb,
            power,
        })
    }

    /// Spec with the per-bit-depth default step (the distortion-minimizing
    /// uniform step for a unit-variance Gaussian).
    pub fn with_default_step(bits: u32, nb: usize, power: f64) -> Result<Self> {
        Self::new(bits, default_step(bits)?, nb, power)
    }

    /// Absolute per-real-component step: the normalized step times the
    /// per-antenna complex standard deviation.
    pub fn absolute_step(&self) -> f64 {
        self.step * (self.power / self.nb as f64).sqrt()
    }
}

/// Closed-form linearization factors of the power-normalized quantizer.
#[derive(Debug, Clone, Copy)]
pub struct BussgangFactors {
    pub alpha: f64,
    pub delta: f64,
}

impl BussgangFactors {
    /// The scalar gain as an nb x nb diagonal matrix, delta * I.
    pub fn t_scalar_matrix(&self, nb: usize) -> CMat {
        identity(nb).mapv(|z| z * self.delta)
    }
}

fn summand_shift(summand: Summand, l: u32, j: f64) -> f64 {
    match summand {
        Summand::PerLevel => l as f64 - j / 2.0,
        Summand::FirstLevel => 1.0 - j / 2.0,
    }
}

/// Power-normalization factor alpha, chosen so that alpha * Q(x) has the
/// same average power as x when each antenna runs at the design point
/// P/nb. Scales like 1/step where the CDF sum vanishes (exactly at 1 bit).
pub fn bussgang_alpha(spec: &QuantizerSpec) -> Result<f64> {
    bussgang_alpha_with(spec, Summand::PerLevel)
}

pub fn bussgang_alpha_with(spec: &QuantizerSpec, summand: Summand) -> Result<f64> {
    let j = spec.levels as f64;
    let g = spec.step;
    let mut cdf_sum = 0.0;
    for l in 1..spec.levels {
        let m = summand_shift(summand, l, j);
        cdf_sum += m * standard_normal_cdf(SQRT_2 * g * m);
    }
    let bracket = ((j - 1.0) / 2.0).powi(2) - 2.0 * cdf_sum;
    let sq = 2.0 * g * g * bracket;
    if sq <= 0.0 || !sq.is_finite() {
        return Err(Error::numerical(format!(
            "quantizer output power {sq:.3e} is not positive for J={} step={g}",
            spec.levels
        )));
    }
    Ok(1.0 / sq.sqrt())
}

/// Scalar Bussgang gain delta of the normalized quantizer alpha * Q(.),
/// packaged with alpha. Lies in (0, 1] for every bit depth and step.
pub fn bussgang_delta(spec: &QuantizerSpec) -> Result<BussgangFactors> {
    bussgang_delta_with(spec, Summand::PerLevel)
}

pub fn bussgang_delta_with(spec: &QuantizerSpec, summand: Summand) -> Result<BussgangFactors> {
    let alpha = bussgang_alpha_with(spec, summand)?;
    let j = spec.levels as f64;
    let g = spec.step;
    let mut exp_sum = 0.0;
    for l in 1..spec.levels {
        let m = summand_shift(summand, l, j);
        exp_sum += (-(g * m).powi(2)).exp();
    }
    let delta = alpha * g / PI.sqrt() * exp_sum;
    Ok(BussgangFactors { alpha, delta })
}

/// One real midrise quantization at the given absolute step.
#[inline]
pub fn quantize_real(x: f64, step: f64, levels: u32) -> f64 {
    let j = levels as f64;
    let idx = (x / step + j / 2.0).floor().clamp(0.0, j - 1.0);
    step * (idx - (j - 1.0) / 2.0)
}

/// Quantizes a complex slice component-wise with the spec's absolute step.
pub fn uniform_quantize(x: &[Complex64], spec: &QuantizerSpec) -> Vec<Complex64> {
    let step = spec.absolute_step();
    x.iter()
        .map(|z| {
            Complex64::new(
                quantize_real(z.re, step, spec.levels),
                quantize_real(z.im, step, spec.levels),
            )
        })
        .collect()
}

/// Exact per-antenna linearization gains: evaluates the level sum with each
/// antenna's own power diag(M M^H)_n instead of the design point P/nb. Used
/// to check how far the scalar approximation drifts on a concrete precoder.
pub fn bussgang_t_diagonal(m: &CMat, spec: &QuantizerSpec) -> Result<Vec<f64>> {
    let alpha = bussgang_alpha(spec)?;
    let step = spec.absolute_step();
    let j = spec.levels as f64;
    let mut diag = Vec::with_capacity(m.nrows());
    for (n, row) in m.rows().into_iter().enumerate() {
        let p: f64 = row.iter().map(|z| z.norm_sqr()).sum();
        if p < 1e-300 {
            return Err(Error::numerical(format!(
                "degenerate antenna {n}: zero per-antenna transmit power"
            )));
        }
        let mut exp_sum = 0.0;
        for l in 1..spec.levels {
            let sm = l as f64 - j / 2.0;
            exp_sum += (-(step * sm).powi(2) / p).exp();
        }
        diag.push(alpha * step / (PI * p).sqrt() * exp_sum);
    }
    Ok(diag)
}

/// Distortion autocorrelation of the normalized quantizer output,
/// (1 - delta^2) * M M^H for unit-variance symbols.
#[derive(Debug, Clone)]
pub struct DistortionCovariance {
    pub r_ff: CMat,
}

pub fn distortion_covariance(m: &CMat, delta: f64) -> Result<DistortionCovariance> {
    if !(0.0..=1.0).contains(&delta) {
        return Err(Error::config("delta must lie in [0, 1]"));
    }
    let herm = crate::numerics::hermitian(m);
    let factor = 1.0 - delta * delta;
    Ok(DistortionCovariance {
        r_ff: m.dot(&herm).mapv(|z| z * factor),
    })
}

/// Monte Carlo estimate of the normalized quantizer's linear gain on a
/// unit-variance real Gaussian, with its standard error. Independent of the
/// closed forms above except for sharing alpha.
#[derive(Debug, Clone, Copy)]
pub struct GainEstimate {
    pub gain: f64,
    pub std_error: f64,
    pub samples: usize,
}

pub fn empirical_bussgang_gain<R: Rng>(
    spec: &QuantizerSpec,
    samples: usize,
    rng: &mut R,
) -> Result<GainEstimate> {
    if samples < 100_000 {
        return Err(Error::config(
            "the gain estimator needs at least 1e5 samples for a usable standard error",
        ));
    }
    let alpha = bussgang_alpha(spec)?;
    // Per-real-component threshold spacing for a unit-variance input.
    let step = SQRT_2 * spec.step;
    let (mut s_qx, mut s_xx) = (0.0, 0.0);
    let (mut s_qx2, mut s_cross, mut s_x4) = (0.0, 0.0, 0.0);
    for _ in 0..samples {
        let x: f64 = rng.sample(StandardNormal);
        let q = alpha * quantize_real(x, step, spec.levels);
        let qx = q * x;
        let xx = x * x;
        s_qx += qx;
        s_xx += xx;
        s_qx2 += qx * qx;
        s_cross += qx * xx;
        s_x4 += xx * xx;
    }
    let n = samples as f64;
    let gain = s_qx / s_xx;
    // Delta-method standard error of the ratio estimator: residuals
    // r_i = q_i x_i - gain x_i^2 have zero mean by construction.
    let var_r = (s_qx2 - 2.0 * gain * s_cross + gain * gain * s_x4) / n;
    let std_error = (var_r / n).sqrt() / (s_xx / n);
    Ok(GainEstimate {
        gain,
        std_error,
        samples,
    })
}

/// Distortion-minimizing uniform midrise step for a unit-variance Gaussian,
/// found by golden-section search on the closed-form distortion.
pub fn default_step(bits: u32) -> Result<f64> {
    if !(1..=24).contains(&bits) {
        return Err(Error::config("default step defined for 1..=24 bits"));
    }
    let levels = 1u32 << bits;
    // Distortion is unimodal in the step; bracket generously.
    let (mut a, mut b) = (1e-6, 4.0);
    let phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - phi * (b - a);
    let mut d = a + phi * (b - a);
    let mut fc = quantizer_mse_unit_gaussian(c, levels);
    let mut fd = quantizer_mse_unit_gaussian(d, levels);
    for _ in 0..120 {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - phi * (b - a);
            fc = quantizer_mse_unit_gaussian(c, levels);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + phi * (b - a);
            fd = quantizer_mse_unit_gaussian(d, levels);
        }
    }
    Ok(0.5 * (a + b))
}

/// Closed-form E[(Q(x) - x)^2] for x ~ N(0, 1) and a midrise quantizer with
/// threshold spacing `u`: 1 - 2 E[x Q(x)] + E[Q(x)^2], each term summed over
/// the level grid analytically.
pub fn quantizer_mse_unit_gaussian(u: f64, levels: u32) -> f64 {
    let j = levels as f64;
    let mut exp_sum = 0.0;
    let mut cdf_sum = 0.0;
    for l in 1..levels {
        let m = l as f64 - j / 2.0;
        exp_sum += (-u * u * m * m / 2.0).exp();
        cdf_sum += m * standard_normal_cdf(u * m);
    }
    let e_xq = u / (2.0 * PI).sqrt() * exp_sum;
    let e_q2 = u * u * (((j - 1.0) / 2.0).powi(2) - 2.0 * cdf_sum);
    1.0 - 2.0 * e_xq + e_q2
}
