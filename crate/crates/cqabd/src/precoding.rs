//! BD, RBD, and ZF transmit precoders.
//!
//! BD and RBD are built in two stages. Stage one suppresses (BD) or shrinks
//! (RBD) the interference every user causes to the others, using the full
//! SVD of the channel stack with that user removed. Stage two parallelizes
//! each user's streams over the effective channel seen through stage one and
//! loads power across the resulting modes by water filling. The assembled
//! precoder is rescaled so the total average transmit power equals the
//! stream count, which is the normalization the sum-rate formulas assume.

use ndarray::{s, Array2};

use crate::channel::{exclude_user, ChannelSet};
use crate::error::{Error, Result};
use crate::numerics::{frobenius_norm, hermitian, solve_hermitian_pd, svd, CMat};

/// Linear precoder family.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PrecoderKind {
    Bd,
    Rbd,
    Zf,
}

impl PrecoderKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            PrecoderKind::Bd => "bd",
            PrecoderKind::Rbd => "rbd",
            PrecoderKind::Zf => "zf",
        }
    }
}

impl std::str::FromStr for PrecoderKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "bd" => Ok(PrecoderKind::Bd),
            "rbd" => Ok(PrecoderKind::Rbd),
            "zf" => Ok(PrecoderKind::Zf),
            other => Err(Error::config(format!("unknown precoder kind '{other}'"))),
        }
    }
}

/// RBD shrinkage strength: alpha = nu * sigma_n^2 / mu.
#[derive(Debug, Clone, Copy)]
pub struct RbdRegularization {
    pub alpha_rbd: f64,
    pub sigma_n_sq: f64,
    pub mu: f64,
}

impl RbdRegularization {
    pub fn new(nu: usize, sigma_n_sq: f64, mu: f64) -> Result<Self> {
        if sigma_n_sq < 0.0 || mu <= 0.0 {
            return Err(Error::config(
                "RBD regularization needs sigma_n^2 >= 0 and mu > 0",
            ));
        }
        Ok(RbdRegularization {
            alpha_rbd: nu as f64 * sigma_n_sq / mu,
            sigma_n_sq,
            mu,
        })
    }

    /// Default for a given operating point: noise variance nu/SNR and total
    /// average transmit power nu, so alpha = nu/SNR.
    pub fn for_snr(nu: usize, snr: f64) -> Result<Self> {
        if snr <= 0.0 {
            return Err(Error::config("SNR must be positive"));
        }
        Self::new(nu, nu as f64 / snr, nu as f64)
    }
}

/// Per-user factor pair produced by the two precoding stages, before
/// assembly and power normalization.
#[derive(Debug, Clone)]
pub struct UserFactors {
    /// Stage-one factor, nb x L_j.
    pub mc: CMat,
    /// Stage-two factor, L_j x N_j.
    pub md: CMat,
    /// Water-filling amplitudes on the active modes (length N_j).
    pub loading: Vec<f64>,
}

/// Assembled precoder: per-user factors, per-user products, the combined
/// matrix (horizontal concatenation in user order), and the power loading.
/// After assembly, trace(M M^H) equals the total stream count.
#[derive(Debug, Clone)]
pub struct PrecoderResult {
    pub kind: PrecoderKind,
    pub per_user_c: Vec<CMat>,
    pub per_user_d: Vec<CMat>,
    pub per_user: Vec<CMat>,
    pub combined: CMat,
    pub loading: Vec<Vec<f64>>,
}

/// Orthonormal basis of the null space of `a`, taken from the trailing
/// right singular vectors of its full SVD. Errors when the numerical rank
/// already fills the column dimension.
pub fn null_space_basis(a: &CMat) -> Result<CMat> {
    let dec = svd(a)?;
    let rank = dec.rank();
    let cols = a.ncols();
    if rank >= cols {
        return Err(Error::numerical(format!(
            "matrix of rank {rank} leaves no null space in {cols} dimensions"
        )));
    }
    Ok(dec.w.slice(s![.., rank..]).to_owned())
}

/// BD stage one for user `j` (0-based): a basis of the null space of the
/// channel stack with user `j` removed. With a single user there is nothing
/// to exclude and every transmit direction is available.
pub fn bd_stage_one(ch: &ChannelSet, j: usize) -> Result<CMat> {
    let hbar = exclude_user(ch, j)?;
    if hbar.nrows() == 0 {
        return Ok(crate::numerics::identity(ch.dims.nb));
    }
    null_space_basis(&hbar).map_err(|e| {
        Error::numerical(format!("BD stage one infeasible for user {}: {e}", j + 1))
    })
}

/// RBD stage one for user `j`: W * (Phi^T Phi + alpha I)^(-1/2), where the
/// squared singular values of the excluded stack are zero-padded out to the
/// transmit antenna count. Unlike BD this keeps all nb directions, shrinking
/// the ones the other users occupy.
pub fn rbd_stage_one(ch: &ChannelSet, j: usize, reg: &RbdRegularization) -> Result<CMat> {
    let hbar = exclude_user(ch, j)?;
    let nb = ch.dims.nb;
    if hbar.nrows() == 0 {
        // Single user: all singular values are zero, the basis is free.
        if reg.alpha_rbd < 1e-14 {
            return Err(Error::numerical(format!(
                "degenerate RBD regularization for user {}: alpha = {:.3e}",
                j + 1,
                reg.alpha_rbd
            )));
        }
        let inv_sqrt = 1.0 / reg.alpha_rbd.sqrt();
        return Ok(crate::numerics::identity(nb).mapv(|z| z * inv_sqrt));
    }
    let dec = svd(&hbar)?;
    let mut factor = dec.w.clone();
    for i in 0..nb {
        let sq = dec.sigma.get(i).map(|s| s * s).unwrap_or(0.0);
        let d = sq + reg.alpha_rbd;
        if d < 1e-14 {
            return Err(Error::numerical(format!(
                "degenerate RBD regularization for user {}: direction {} has \
                 vanishing gain {d:.3e}",
                j + 1,
                i
            )));
        }
        let inv_sqrt = 1.0 / d.sqrt();
        for v in factor.column_mut(i).iter_mut() {
            *v *= inv_sqrt;
        }
    }
    Ok(factor)
}

/// Stage two for user `j`: SVD of the effective channel H_j * mc, then the
/// leading right singular vectors scaled by the water-filling amplitudes.
/// For BD the loading runs over the effective rank; for RBD it formally runs
/// over the full singular spectrum, whose zero modes receive no power, so
/// both reduce to at most N_j active columns.
pub fn stage_two(
    ch: &ChannelSet,
    j: usize,
    mc: &CMat,
    kind: PrecoderKind,
    snr: f64,
) -> Result<(CMat, Vec<f64>)> {
    let h_e = ch.per_user[j].dot(mc);
    let dec = svd(&h_e)?;
    let rank = dec.rank();
    if rank == 0 {
        return Err(Error::numerical(format!(
            "zero-rank effective channel for user {}",
            j + 1
        )));
    }
    let nu = ch.dims.nu();
    let nj = ch.dims.per_user[j];
    // Equal split of the total power across streams, noise at the operating
    // point nu/SNR.
    let budget = nj as f64;
    let noise = nu as f64 / snr;
    let gains: Vec<f64> = match kind {
        PrecoderKind::Bd => dec.sigma[..rank].iter().map(|s| s * s).collect(),
        PrecoderKind::Rbd => dec.sigma.iter().map(|s| s * s).collect(),
        PrecoderKind::Zf => {
            return Err(Error::config("ZF has no second precoding stage"));
        }
    };
    let power = water_filling(&gains, budget, noise)?;

    let lj = mc.ncols();
    let active = rank.min(nj);
    let mut md = Array2::zeros((lj, nj));
    let mut loading = vec![0.0; nj];
    for i in 0..active {
        let amp = power[i].sqrt();
        loading[i] = amp;
        for r in 0..lj {
            md[(r, i)] = dec.w[(r, i)] * amp;
        }
    }
    Ok((md, loading))
}

/// Water filling: p_i = max(0, mu - noise/gains_i) with the level mu chosen
/// so the powers add up to `total_power`. Zero gains receive zero power.
pub fn water_filling(gains: &[f64], total_power: f64, noise: f64) -> Result<Vec<f64>> {
    if total_power <= 0.0 {
        return Err(Error::config("water-filling power budget must be positive"));
    }
    if noise <= 0.0 {
        return Err(Error::config("water-filling noise level must be positive"));
    }
    let mut order: Vec<usize> = (0..gains.len()).filter(|&i| gains[i] > 0.0).collect();
    if order.is_empty() {
        return Err(Error::numerical(
            "water-filling infeasible: all mode gains are zero",
        ));
    }
    // Sort by inverse gain so the active set is always a prefix.
    order.sort_by(|&a, &b| {
        (noise / gains[a])
            .partial_cmp(&(noise / gains[b]))
            .expect("finite floors")
    });
    let floors: Vec<f64> = order.iter().map(|&i| noise / gains[i]).collect();

    let mut active = order.len();
    let level = loop {
        let sum: f64 = floors[..active].iter().sum();
        let mu = (total_power + sum) / active as f64;
        if active == 1 || mu >= floors[active - 1] {
            break mu;
        }
        active -= 1;
    };

    let mut power = vec![0.0; gains.len()];
    for (k, &i) in order[..active].iter().enumerate() {
        power[i] = (level - floors[k]).max(0.0);
    }
    Ok(power)
}

/// Zero-forcing precoder M = H^H (H H^H)^{-1}, then power normalization.
/// No power loading is applied. Rank-deficient channels are rejected rather
/// than falling back to a pseudo-inverse.
pub fn zf_precoder(ch: &ChannelSet) -> Result<PrecoderResult> {
    let h = &ch.combined;
    let nu = ch.dims.nu();
    let dec = svd(h)?;
    if dec.rank() < nu {
        return Err(Error::numerical(format!(
            "zero-forcing needs a full row-rank channel; rank {} < {nu}",
            dec.rank()
        )));
    }
    let gram = h.dot(&hermitian(h));
    let y = solve_hermitian_pd(&gram, h)?;
    let m = hermitian(&y); // H^H (H H^H)^{-1}, nb x nu

    let mut parts = Vec::with_capacity(ch.dims.users());
    for j in 0..ch.dims.users() {
        let (start, end) = ch.dims.row_span(j);
        let nj = ch.dims.per_user[j];
        parts.push(UserFactors {
            mc: m.slice(s![.., start..end]).to_owned(),
            md: Array2::eye(nj),
            loading: vec![1.0; nj],
        });
    }
    assemble_and_normalize(parts, PrecoderKind::Zf)
}

/// Concatenates the per-user blocks in user order and rescales the result so
/// trace(M M^H) equals the stream count, realizing the average transmit
/// power constraint for unit-variance symbols. The scale is folded into the
/// stage-two factors so M_j = M_j^c M_j^d stays exact.
pub fn assemble_and_normalize(
    parts: Vec<UserFactors>,
    kind: PrecoderKind,
) -> Result<PrecoderResult> {
    if parts.is_empty() {
        return Err(Error::config("cannot assemble an empty precoder"));
    }
    let nb = parts[0].mc.nrows();
    let nu: usize = parts.iter().map(|p| p.md.ncols()).sum();

    let mut combined = Array2::zeros((nb, nu));
    let mut per_user = Vec::with_capacity(parts.len());
    let mut col = 0;
    for p in &parts {
        if p.mc.nrows() != nb || p.mc.ncols() != p.md.nrows() {
            return Err(Error::config("inconsistent per-user factor shapes"));
        }
        let mj = p.mc.dot(&p.md);
        combined
            .slice_mut(s![.., col..col + mj.ncols()])
            .assign(&mj);
        col += mj.ncols();
        per_user.push(mj);
    }

    let tr = frobenius_norm(&combined).powi(2);
    if tr < 1e-300 {
        return Err(Error::numerical(
            "degenerate precoder: zero total transmit power",
        ));
    }
    let scale = (nu as f64 / tr).sqrt();

    let combined = combined.mapv(|z| z * scale);
    let per_user: Vec<CMat> = per_user.into_iter().map(|m| m.mapv(|z| z * scale)).collect();
    let mut per_user_c = Vec::with_capacity(parts.len());
    let mut per_user_d = Vec::with_capacity(parts.len());
    let mut loading = Vec::with_capacity(parts.len());
    for p in parts {
        per_user_c.push(p.mc);
        per_user_d.push(p.md.mapv(|z| z * scale));
        loading.push(p.loading.iter().map(|a| a * scale).collect());
    }

    Ok(PrecoderResult {
        kind,
        per_user_c,
        per_user_d,
        per_user,
        combined,
        loading,
    })
}

/// Largest normalized leakage of the stage-one factors into the other
/// users' channels: max_j |Hbar_j M_j^c|_F / (|Hbar_j|_F |M_j^c|_F).
/// Zero up to round-off when the factors are true null-space bases.
pub fn stage_one_leakage(ch: &ChannelSet, pre: &PrecoderResult) -> Result<f64> {
    let mut worst = 0.0f64;
    for (j, mc) in pre.per_user_c.iter().enumerate() {
        let hbar = exclude_user(ch, j)?;
        if hbar.nrows() == 0 {
            continue;
        }
        let denom = frobenius_norm(&hbar) * frobenius_norm(mc);
        if denom > 0.0 {
            worst = worst.max(frobenius_norm(&hbar.dot(mc)) / denom);
        }
    }
    Ok(worst)
}

/// Runs both stages for every user and assembles the normalized precoder.
/// This is the per-channel portion of the sweep pipeline.
pub fn build_precoder(ch: &ChannelSet, kind: PrecoderKind, snr: f64) -> Result<PrecoderResult> {
    match kind {
        PrecoderKind::Zf => zf_precoder(ch),
        PrecoderKind::Bd | PrecoderKind::Rbd => {
            let nu = ch.dims.nu();
            let mut parts = Vec::with_capacity(ch.dims.users());
            for j in 0..ch.dims.users() {
                let mc = match kind {
                    PrecoderKind::Bd => bd_stage_one(ch, j)?,
                    PrecoderKind::Rbd => {
                        rbd_stage_one(ch, j, &RbdRegularization::for_snr(nu, snr)?)?
                    }
                    PrecoderKind::Zf => unreachable!(),
                };
                let (md, loading) = stage_two(ch, j, &mc, kind, snr)?;
                parts.push(UserFactors { mc, md, loading });
            }
            assemble_and_normalize(parts, kind)
        }
    }
}
