//! Complex dense-matrix foundation used by every other module.
//!
//! Wraps the LAPACK-backed decompositions behind a small surface: full SVD
//! (the trailing right singular vectors are needed for null-space precoding,
//! so the thin form is never used), a stable `log2 det` for Hermitian
//! positive-definite matrices, seeded circularly-symmetric Gaussian sampling,
//! and the standard normal CDF.

use ndarray::{Array1, Array2};
use ndarray_linalg::{Cholesky, SVD, UPLO};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

/// Complex matrix in row-major storage. All shapes in this crate are
/// (rows, cols) with rows ≥ 1 and cols ≥ 1.
pub type CMat = Array2<Complex64>;

/// Relative singular-value threshold below which a direction is treated as
/// part of the null space for all rank decisions.
pub const SV_RANK_TOL: f64 = 1e-10;

/// Hermitian transpose.
pub fn hermitian(a: &CMat) -> CMat {
    a.t().mapv(|z| z.conj())
}

/// n x n complex identity.
pub fn identity(n: usize) -> CMat {
    Array2::eye(n)
}

/// Frobenius norm.
pub fn frobenius_norm(a: &CMat) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Real part of the trace.
pub fn trace_re(a: &CMat) -> f64 {
    a.diag().iter().map(|z| z.re).sum()
}

/// Row-major copy with canonical strides. Views produced by slicing can
/// carry zero strides on unit axes, which the LAPACK wrappers reject.
fn standardized(a: &CMat) -> CMat {
    Array2::from_shape_vec(a.dim(), a.iter().cloned().collect()).expect("consistent shape")
}

/// Full singular value decomposition `a = u * diag(sigma) * w^H`.
///
/// `u` is rows x rows, `w` is cols x cols; `sigma` holds the min(rows, cols)
/// singular values in descending order. The phase of each singular vector is
/// fixed so that its largest-magnitude entry is real positive, which keeps
/// regression fixtures stable across runs.
#[derive(Debug, Clone)]
pub struct SvdResult {
    pub u: CMat,
    pub sigma: Vec<f64>,
    pub w: CMat,
}

impl SvdResult {
    /// Numerical rank: singular values above `SV_RANK_TOL` times the largest.
    pub fn rank(&self) -> usize {
        let smax = self.sigma.first().copied().unwrap_or(0.0);
        if smax <= 0.0 {
            return 0;
        }
        self.sigma.iter().filter(|&&s| s > SV_RANK_TOL * smax).count()
    }
}

/// Full SVD of a complex matrix.
pub fn svd(a: &CMat) -> Result<SvdResult> {
    let (rows, cols) = a.dim();
    if rows == 0 || cols == 0 {
        return Err(Error::numerical(format!(
            "SVD of an empty {rows}x{cols} matrix"
        )));
    }
    let (u, sigma, wt) = standardized(a).svd(true, true).map_err(|e| {
        Error::numerical(format!("SVD did not converge on a {rows}x{cols} matrix: {e}"))
    })?;
    let u = u.expect("requested U");
    let wt = wt.expect("requested W^H");
    let mut u = u;
    let mut w = hermitian(&wt);
    let sigma: Vec<f64> = sigma.to_vec();

    // Phase canonicalization: rotate paired (u_k, w_k) columns together so
    // the reconstruction u * diag(sigma) * w^H is untouched; unpaired
    // trailing columns rotate independently.
    let min_dim = rows.min(cols);
    for k in 0..min_dim {
        let phase = dominant_phase(&u.column(k).to_owned());
        scale_column(&mut u, k, phase.conj());
        scale_column(&mut w, k, phase.conj());
    }
    for k in min_dim..rows {
        let phase = dominant_phase(&u.column(k).to_owned());
        scale_column(&mut u, k, phase.conj());
    }
    for k in min_dim..cols {
        let phase = dominant_phase(&w.column(k).to_owned());
        scale_column(&mut w, k, phase.conj());
    }

    Ok(SvdResult { u, sigma, w })
}

fn dominant_phase(col: &Array1<Complex64>) -> Complex64 {
    let mut best = 0usize;
    let mut best_mag = -1.0;
    for (i, z) in col.iter().enumerate() {
        let m = z.norm_sqr();
        if m > best_mag {
            best_mag = m;
            best = i;
        }
    }
    let z = col[best];
    let m = z.norm();
    if m < 1e-300 {
        Complex64::new(1.0, 0.0)
    } else {
        z / m
    }
}

fn scale_column(a: &mut CMat, k: usize, c: Complex64) {
    for v in a.column_mut(k).iter_mut() {
        *v *= c;
    }
}

/// i.i.d. circularly-symmetric complex Gaussian matrix: real and imaginary
/// parts are independent N(0, variance/2), so each entry has the requested
/// complex variance. Reproducible for a fixed generator state.
pub fn sample_gaussian_matrix<R: Rng>(
    rows: usize,
    cols: usize,
    variance: f64,
    rng: &mut R,
) -> CMat {
    assert!(variance > 0.0, "variance must be positive");
    let scale = (variance / 2.0).sqrt();
    Array2::from_shape_fn((rows, cols), |_| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        Complex64::new(re * scale, im * scale)
    })
}

/// i.i.d. CN(0, variance) vector.
pub fn sample_gaussian_vector<R: Rng>(n: usize, variance: f64, rng: &mut R) -> Array1<Complex64> {
    let scale = (variance / 2.0).sqrt();
    Array1::from_shape_fn(n, |_| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        Complex64::new(re * scale, im * scale)
    })
}

/// Standard normal cumulative distribution function.
pub fn standard_normal_cdf(w: f64) -> f64 {
    0.5 * libm::erfc(-w / std::f64::consts::SQRT_2)
}

/// log2 det of a Hermitian positive-definite matrix via Cholesky.
///
/// The Cholesky diagonal is real positive by construction, so no imaginary
/// residue can leak into the result. Factorization failure (the matrix is
/// not positive definite) is reported as a numerical error.
pub fn logdet_hermitian_psd(a: &CMat) -> Result<f64> {
    let n = a.nrows();
    let l = standardized(a).cholesky(UPLO::Lower).map_err(|e| {
        Error::numerical(format!(
            "Cholesky factorization failed on a {n}x{n} matrix (not positive definite): {e}"
        ))
    })?;
    Ok(2.0 * l.diag().iter().map(|z| z.re.log2()).sum::<f64>())
}

/// Solve `a x = b` for Hermitian positive-definite `a` and matrix right-hand
/// side, through the Cholesky factor and two triangular solves.
pub fn solve_hermitian_pd(a: &CMat, b: &CMat) -> Result<CMat> {
    let n = a.nrows();
    let l = standardized(a).cholesky(UPLO::Lower).map_err(|e| {
        Error::numerical(format!(
            "Cholesky solve failed on a {n}x{n} matrix (not positive definite): {e}"
        ))
    })?;
    // Forward substitution L y = b, then back substitution L^H x = y.
    let mut y = b.clone();
    let (rows, cols) = y.dim();
    for j in 0..cols {
        for i in 0..rows {
            let mut s = y[(i, j)];
            for k in 0..i {
                s -= l[(i, k)] * y[(k, j)];
            }
            y[(i, j)] = s / l[(i, i)];
        }
    }
    let lh = hermitian(&l);
    for j in 0..cols {
        for i in (0..rows).rev() {
            let mut s = y[(i, j)];
            for k in (i + 1)..rows {
                s -= lh[(i, k)] * y[(k, j)];
            }
            y[(i, j)] = s / lh[(i, i)];
        }
    }
    Ok(y)
}

/// log2 |det| of a general complex matrix via LU, together with the phase of
/// the determinant so callers can assert the imaginary residue is negligible.
pub fn logdet_general(a: &CMat) -> Result<(f64, f64)> {
    use ndarray_linalg::Determinant;
    let n = a.nrows();
    let (sign, ln_det) = standardized(a).sln_det().map_err(|e| {
        Error::numerical(format!("LU determinant failed on a {n}x{n} matrix: {e}"))
    })?;
    Ok((ln_det / std::f64::consts::LN_2, sign.arg()))
}
