//! Achievable sum-rates under the scalar quantizer linearization.
//!
//! All rates are computed in noise-normalized units where the receive noise
//! covariance is (nu/SNR) I, so the operating point enters the closed form
//! only through SNR/nu. The determinant of the closed form is never taken
//! through an explicit inverse: the inner inverse is applied as a Hermitian
//! solve and the outer determinant through an LU factorization, while the
//! covariance pair below provides the algebraically equivalent second route
//! used by the consistency tests.

use ndarray::Array1;
use num_complex::Complex64;
use rand::Rng;

use crate::channel::ChannelSet;
use crate::error::{Error, Result};
use crate::numerics::{
    hermitian, identity, logdet_general, logdet_hermitian_psd, sample_gaussian_vector,
    solve_hermitian_pd, CMat,
};
use crate::precoding::PrecoderResult;
use crate::quantization::{uniform_quantize, QuantizerSpec};

/// Inputs of the closed-form rate: the nu x nu product H M, the linear SNR,
/// the stream count, and the Bussgang gain.
#[derive(Debug, Clone)]
pub struct RateInputs {
    pub hm: CMat,
    pub snr: f64,
    pub nu: usize,
    pub delta: f64,
}

impl RateInputs {
    fn validate(&self) -> Result<()> {
        if self.snr <= 0.0 || !self.snr.is_finite() {
            return Err(Error::config("SNR must be positive and finite"));
        }
        if !(0.0..=1.0).contains(&self.delta) {
            return Err(Error::config("delta must lie in [0, 1]"));
        }
        if self.hm.dim() != (self.nu, self.nu) {
            return Err(Error::config(format!(
                "H M must be {0} x {0}, got {1:?}",
                self.nu,
                self.hm.dim()
            )));
        }
        if self.hm.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::config("H M contains non-finite entries"));
        }
        Ok(())
    }
}

/// Receive-noise description at the normalized operating point.
#[derive(Debug, Clone, Copy)]
pub struct NoiseModel {
    pub nu: usize,
    pub snr: f64,
}

impl NoiseModel {
    /// Per-antenna complex noise variance nu/SNR.
    pub fn variance(&self) -> f64 {
        self.nu as f64 / self.snr
    }

    /// Diagonal noise covariance (nu/SNR) I.
    pub fn r_nn(&self) -> CMat {
        identity(self.nu).mapv(|z| z * self.variance())
    }
}

fn gram(hm: &CMat) -> CMat {
    let g = hm.dot(&hermitian(hm));
    // Symmetrize to scrub round-off before the Hermitian factorizations.
    let gh = hermitian(&g);
    (&g + &gh).mapv(|z| z * 0.5)
}

/// Closed-form sum rate of the linearized quantized downlink:
/// log2 det[I + delta^2 (SNR/nu) G ((1 - delta^2) (SNR/nu) G + I)^{-1}]
/// with G = (HM)(HM)^H, in bits per channel use.
pub fn sum_rate_cqa(inp: &RateInputs) -> Result<f64> {
    inp.validate()?;
    let rho = inp.snr / inp.nu as f64;
    let d2 = inp.delta * inp.delta;
    let g = gram(&inp.hm);
    let signal = g.mapv(|z| z * (d2 * rho));
    let residual = g.mapv(|z| z * ((1.0 - d2) * rho)) + identity(inp.nu);
    let x = solve_hermitian_pd(&residual, &signal)?;
    let inner = identity(inp.nu) + x;
    let (bits, phase) = logdet_general(&inner)?;
    if phase.abs() > 1e-6 {
        return Err(Error::numerical(format!(
            "rate determinant has imaginary residue {phase:.2e}"
        )));
    }
    Ok(bits.max(0.0))
}

/// Full-resolution rate: the distortion-free limit delta = 1.
pub fn sum_rate_full_resolution(hm: &CMat, snr: f64, nu: usize) -> Result<f64> {
    sum_rate_cqa(&RateInputs {
        hm: hm.clone(),
        snr,
        nu,
        delta: 1.0,
    })
}

/// Receive autocorrelation R_yy = delta^2 rho G + (1 - delta^2) rho G + I in
/// noise-normalized units.
pub fn receive_covariance(hm: &CMat, delta: f64, snr: f64, nu: usize) -> CMat {
    let rho = snr / nu as f64;
    let d2 = delta * delta;
    let g = gram(hm);
    let signal = g.mapv(|z| z * (d2 * rho));
    let distortion = g.mapv(|z| z * ((1.0 - d2) * rho));
    signal + distortion + identity(nu)
}

/// Distortion-plus-noise autocorrelation (1 - delta^2) rho G + I.
pub fn distortion_plus_noise_covariance(hm: &CMat, delta: f64, snr: f64, nu: usize) -> CMat {
    let rho = snr / nu as f64;
    let d2 = delta * delta;
    gram(hm).mapv(|z| z * ((1.0 - d2) * rho)) + identity(nu)
}

/// Rate through the covariance route, log2 det R_yy - log2 det R_nn~. Equals
/// the closed form up to round-off; kept as the second algebraic path.
pub fn sum_rate_via_covariances(hm: &CMat, delta: f64, snr: f64, nu: usize) -> Result<f64> {
    let ryy = receive_covariance(hm, delta, snr, nu);
    let rnn = distortion_plus_noise_covariance(hm, delta, snr, nu);
    Ok(logdet_hermitian_psd(&ryy)? - logdet_hermitian_psd(&rnn)?)
}

/// Monte Carlo rate of the roughly quantized baseline: the precoded signal
/// goes through the DAC grid as-is and the link y = H Q(M s) + n is read
/// out per receive antenna, with a scalar gain and an error variance fit by
/// least squares over one packet. No linearization model, output rescaling,
/// or receive-side equalization is applied anywhere; whatever does not pass
/// through each stream's own scalar gain counts as error. Streams of
/// multi-antenna users therefore also pay for their own user's stream
/// mixing, which is what makes this baseline rough.
pub fn empirical_rate_roughly_quantized<R: Rng>(
    ch: &ChannelSet,
    pre: &PrecoderResult,
    spec: &QuantizerSpec,
    snr: f64,
    packet_len: usize,
    rng: &mut R,
) -> Result<f64> {
    if packet_len < 100 {
        return Err(Error::config(
            "packet length below 100 symbols cannot support the least-squares fit",
        ));
    }
    let nu = ch.dims.nu();
    let noise = NoiseModel { nu, snr };
    let noise_var = noise.variance();

    // Per-stream accumulators: sum |y|^2, sum y conj(s), sum |s|^2.
    let mut acc_yy = vec![0.0f64; nu];
    let mut acc_ys = vec![Complex64::new(0.0, 0.0); nu];
    let mut acc_ss = vec![0.0f64; nu];

    for _ in 0..packet_len {
        let s = sample_gaussian_vector(nu, 1.0, rng);
        let x = pre.combined.dot(&s);
        let xq = Array1::from(uniform_quantize(x.as_slice().expect("contiguous"), spec));
        let mut y = ch.combined.dot(&xq);
        let n = sample_gaussian_vector(nu, noise_var, rng);
        y += &n;
        for k in 0..nu {
            acc_yy[k] += y[k].norm_sqr();
            acc_ys[k] += y[k] * s[k].conj();
            acc_ss[k] += s[k].norm_sqr();
        }
    }

    let t = packet_len as f64;
    let mut rate = 0.0;
    for k in 0..nu {
        if acc_ss[k] <= 0.0 {
            continue;
        }
        let gain = acc_ys[k] / acc_ss[k];
        let residual = (acc_yy[k] - acc_ys[k].norm_sqr() / acc_ss[k]).max(0.0);
        let err_var = (residual / t).max(1e-300);
        rate += (1.0 + gain.norm_sqr() / err_var).log2();
    }
    Ok(rate)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{generate_channel, ChannelSet, ScenarioDims};
    use crate::numerics::{sample_gaussian_matrix, svd};
    use crate::precoding::{build_precoder, PrecoderKind};
    use crate::quantization::bussgang_delta;
    use ndarray::array;
    use rand::SeedableRng;
    use rand_chacha::ChaCha12Rng;
    use std::f64::consts::PI;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn inputs(hm: CMat, snr: f64, delta: f64) -> RateInputs {
        let nu = hm.nrows();
        RateInputs { hm, snr, nu, delta }
    }

    #[test]
    fn scalar_one_bit_operating_point() {
        // nu = 1, HM = [1], SNR = 1, delta = sqrt(2/pi):
        // C = log2(1 + (2/pi) / ((1 - 2/pi) + 1)).
        let hm = array![[c(1.0, 0.0)]];
        let d2 = 2.0 / PI;
        let rate = sum_rate_cqa(&inputs(hm, 1.0, d2.sqrt())).unwrap();
        let expected = (1.0 + d2 / ((1.0 - d2) + 1.0)).log2();
        assert!((rate - expected).abs() < 1e-12);
        assert!((rate - 0.5528).abs() < 1e-4, "rate {rate:.6}");
    }

    #[test]
    fn delta_one_reduces_to_full_resolution() {
        let mut rng = ChaCha12Rng::seed_from_u64(1);
        let hm = sample_gaussian_matrix(4, 4, 1.0, &mut rng);
        let a = sum_rate_cqa(&inputs(hm.clone(), 7.0, 1.0)).unwrap();
        let b = sum_rate_full_resolution(&hm, 7.0, 4).unwrap();
        assert_eq!(a, b);
        // Against the eigenvalue-sum oracle.
        let dec = svd(&hm).unwrap();
        let rho = 7.0 / 4.0;
        let oracle: f64 = dec.sigma.iter().map(|s| (1.0 + rho * s * s).log2()).sum();
        assert!((a - oracle).abs() < 1e-9, "{a} vs {oracle}");
    }

    #[test]
    fn delta_zero_gives_zero_rate() {
        let mut rng = ChaCha12Rng::seed_from_u64(2);
        let hm = sample_gaussian_matrix(3, 3, 1.0, &mut rng);
        let rate = sum_rate_cqa(&inputs(hm, 10.0, 0.0)).unwrap();
        assert_eq!(rate, 0.0);
    }

    #[test]
    fn identity_product_two_streams() {
        let rate = sum_rate_full_resolution(&identity(2), 2.0, 2).unwrap();
        assert!((rate - 2.0).abs() < 1e-12);
    }

    #[test]
    fn zero_product_gives_zero() {
        let hm = CMat::zeros((3, 3));
        for delta in [0.0, 0.5, 1.0] {
            let rate = sum_rate_cqa(&inputs(hm.clone(), 10.0, delta)).unwrap();
            assert_eq!(rate, 0.0);
        }
    }

    #[test]
    fn path_equivalence_on_random_instances() {
        let mut rng = ChaCha12Rng::seed_from_u64(3);
        for &(nb, nu) in &[(4usize, 2usize), (8, 4), (32, 16), (128, 16)] {
            let dims = ScenarioDims::uniform(nb, nu / 2, 2).unwrap();
            let ch = generate_channel(&dims, &mut rng);
            let pre = build_precoder(&ch, PrecoderKind::Rbd, 10.0).unwrap();
            let hm = ch.combined.dot(&pre.combined);
            for delta in [0.3, 0.9220] {
                let direct = sum_rate_cqa(&inputs(hm.clone(), 10.0, delta)).unwrap();
                let via_cov = sum_rate_via_covariances(&hm, delta, 10.0, nu).unwrap();
                assert!(
                    (direct - via_cov).abs() <= 1e-9,
                    "({nb},{nu}) delta={delta}: {direct:.12} vs {via_cov:.12}"
                );
            }
        }
    }

    #[test]
    fn monotone_in_delta() {
        let mut rng = ChaCha12Rng::seed_from_u64(4);
        let hm = sample_gaussian_matrix(4, 4, 1.0, &mut rng);
        let mut prev = -1.0;
        for i in 0..=10 {
            let delta = i as f64 / 10.0;
            let rate = sum_rate_cqa(&inputs(hm.clone(), 10.0, delta)).unwrap();
            assert!(rate >= prev, "rate dropped at delta={delta}");
            prev = rate;
        }
    }

    #[test]
    fn monotone_in_snr() {
        let mut rng = ChaCha12Rng::seed_from_u64(5);
        let hm = sample_gaussian_matrix(4, 4, 1.0, &mut rng);
        let mut prev = -1.0;
        for snr_db in 0..=20 {
            let snr = 10f64.powf(snr_db as f64 / 10.0);
            let rate = sum_rate_cqa(&inputs(hm.clone(), snr, 0.9)).unwrap();
            assert!(rate >= prev, "rate dropped at {snr_db} dB");
            prev = rate;
        }
    }

    #[test]
    fn receive_covariance_identity_case() {
        let r = receive_covariance(&identity(2), 1.0, 2.0, 2);
        let expected = identity(2).mapv(|z| z * 2.0);
        assert!(crate::numerics::frobenius_norm(&(&r - &expected)) < 1e-12);
    }

    #[test]
    fn receive_covariance_trace_identity() {
        let mut rng = ChaCha12Rng::seed_from_u64(6);
        let hm = sample_gaussian_matrix(4, 4, 1.0, &mut rng);
        let snr = 5.0;
        for delta in [0.0, 0.4, 1.0] {
            let r = receive_covariance(&hm, delta, snr, 4);
            let tr: f64 = r.diag().iter().map(|z| z.re).sum();
            let fro2 = crate::numerics::frobenius_norm(&hm).powi(2);
            let expected = snr / 4.0 * fro2 + 4.0;
            assert!((tr - expected).abs() < 1e-10, "delta={delta}");
        }
    }

    #[test]
    fn distortion_noise_covariance_limits() {
        let mut rng = ChaCha12Rng::seed_from_u64(7);
        let hm = sample_gaussian_matrix(3, 3, 1.0, &mut rng);
        let at_one = distortion_plus_noise_covariance(&hm, 1.0, 8.0, 3);
        assert!(crate::numerics::frobenius_norm(&(&at_one - &identity(3))) < 1e-12);
        let at_zero = distortion_plus_noise_covariance(&hm, 0.0, 8.0, 3);
        let expected = gram(&hm).mapv(|z| z * (8.0 / 3.0)) + identity(3);
        assert!(crate::numerics::frobenius_norm(&(&at_zero - &expected)) < 1e-12);
    }

    #[test]
    fn distortion_noise_covariance_spectrum_floor() {
        use ndarray_linalg::{Eigh, UPLO};
        let mut rng = ChaCha12Rng::seed_from_u64(8);
        let hm = sample_gaussian_matrix(6, 6, 1.0, &mut rng);
        let r = distortion_plus_noise_covariance(&hm, 0.7, 12.0, 6);
        let (vals, _) = r.eigh(UPLO::Lower).unwrap();
        for v in vals {
            assert!(v >= 1.0 - 1e-10, "eigenvalue {v} below the identity floor");
        }
    }

    #[test]
    fn bit_depth_ordering_per_channel() {
        let dims = ScenarioDims::uniform(32, 8, 2).unwrap();
        let ch = generate_channel(&dims, &mut ChaCha12Rng::seed_from_u64(9));
        let snr = 10f64.powf(1.2);
        let pre = build_precoder(&ch, PrecoderKind::Rbd, snr).unwrap();
        let hm = ch.combined.dot(&pre.combined);
        let mut prev = 0.0;
        for bits in [2u32, 3, 4] {
            let spec = QuantizerSpec::with_default_step(bits, 32, 16.0).unwrap();
            let delta = bussgang_delta(&spec).unwrap().delta;
            let rate = sum_rate_cqa(&inputs(hm.clone(), snr, delta)).unwrap();
            assert!(rate > prev, "b={bits}");
            prev = rate;
        }
        let fr = sum_rate_full_resolution(&hm, snr, 16).unwrap();
        assert!(fr > prev);
    }

    #[test]
    fn roughly_quantized_approaches_full_resolution_at_high_bits() {
        // Single-antenna users: BD diagonalizes the product fully, so the
        // per-stream fit has nothing but noise and residual quantization
        // error to absorb and the packet estimate converges to the closed
        // form as the grid refines.
        let dims = ScenarioDims::uniform(16, 8, 1).unwrap();
        let mut rng = ChaCha12Rng::seed_from_u64(10);
        let snr = 10.0;
        let mut ratio_sum = 0.0;
        let trials = 20;
        for _ in 0..trials {
            let ch = generate_channel(&dims, &mut rng);
            let pre = build_precoder(&ch, PrecoderKind::Bd, snr).unwrap();
            let spec = QuantizerSpec::with_default_step(12, 16, 8.0).unwrap();
            let rq = empirical_rate_roughly_quantized(&ch, &pre, &spec, snr, 400, &mut rng)
                .unwrap();
            let hm = ch.combined.dot(&pre.combined);
            let fr = sum_rate_full_resolution(&hm, snr, 8).unwrap();
            ratio_sum += rq / fr;
        }
        let mean_ratio = ratio_sum / trials as f64;
        assert!(
            (mean_ratio - 1.0).abs() <= 0.02,
            "high-resolution ratio {mean_ratio:.4}"
        );
    }

    #[test]
    fn roughly_quantized_sits_below_closed_form_at_two_bits() {
        use crate::quantization::bussgang_delta;
        let dims = ScenarioDims::uniform(32, 8, 2).unwrap();
        let mut rng = ChaCha12Rng::seed_from_u64(14);
        let snr = 10f64.powf(0.7);
        let trials = 20;
        let (mut rq_sum, mut cqa_sum) = (0.0, 0.0);
        for _ in 0..trials {
            let ch = generate_channel(&dims, &mut rng);
            let pre = build_precoder(&ch, PrecoderKind::Rbd, snr).unwrap();
            let spec = QuantizerSpec::with_default_step(2, 32, 16.0).unwrap();
            rq_sum +=
                empirical_rate_roughly_quantized(&ch, &pre, &spec, snr, 100, &mut rng).unwrap();
            let hm = ch.combined.dot(&pre.combined);
            let delta = bussgang_delta(&spec).unwrap().delta;
            cqa_sum += sum_rate_cqa(&RateInputs {
                hm,
                snr,
                nu: 16,
                delta,
            })
            .unwrap();
        }
        assert!(
            rq_sum < cqa_sum,
            "rough baseline {:.2} should fall below the closed form {:.2}",
            rq_sum / trials as f64,
            cqa_sum / trials as f64
        );
    }

    #[test]
    fn roughly_quantized_zero_noise_sanity() {
        // Identity channel, near-zero noise, fine quantizer: the packet-
        // limited estimate stays finite and positive.
        let dims = ScenarioDims::new(2, vec![1, 1]).unwrap();
        let h1 = array![[c(1.0, 0.0), c(0.0, 0.0)]];
        let h2 = array![[c(0.0, 0.0), c(1.0, 0.0)]];
        let ch = ChannelSet::from_user_matrices(dims, vec![h1, h2]).unwrap();
        let pre = build_precoder(&ch, PrecoderKind::Zf, 1.0).unwrap();
        let spec = QuantizerSpec::with_default_step(12, 2, 2.0).unwrap();
        let mut rng = ChaCha12Rng::seed_from_u64(11);
        let rate =
            empirical_rate_roughly_quantized(&ch, &pre, &spec, 1e12, 200, &mut rng).unwrap();
        assert!(rate.is_finite() && rate > 0.0, "rate {rate}");
    }

    #[test]
    fn roughly_quantized_rejects_short_packet() {
        let dims = ScenarioDims::uniform(8, 2, 2).unwrap();
        let ch = generate_channel(&dims, &mut ChaCha12Rng::seed_from_u64(12));
        let pre = build_precoder(&ch, PrecoderKind::Rbd, 10.0).unwrap();
        let spec = QuantizerSpec::with_default_step(2, 8, 4.0).unwrap();
        let mut rng = ChaCha12Rng::seed_from_u64(13);
        assert!(
            empirical_rate_roughly_quantized(&ch, &pre, &spec, 10.0, 50, &mut rng).is_err()
        );
    }

    #[test]
    fn rejects_invalid_inputs() {
        let hm = identity(2);
        assert!(sum_rate_cqa(&inputs(hm.clone(), -1.0, 0.5)).is_err());
        assert!(sum_rate_cqa(&inputs(hm.clone(), 1.0, 1.5)).is_err());
        let bad = RateInputs {
            hm: identity(3),
            snr: 1.0,
            nu: 2,
            delta: 0.5,
        };
        assert!(sum_rate_cqa(&bad).is_err());
    }
}
