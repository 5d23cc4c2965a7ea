//! Seeded Monte Carlo sweeps over SNR points and channel realizations.
//!
//! Every random quantity is derived from (seed, trial index) or
//! (seed, trial index, SNR index) through independent generator streams, so
//! a sweep is a pure function of its configuration: results are identical
//! whatever the worker count, and dropping an SNR point from the grid does
//! not disturb the remaining points.

use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rayon::prelude::*;

use crate::channel::{generate_channel, ChannelSet, ScenarioDims};
use crate::error::{Error, Result};
use crate::precoding::{build_precoder, PrecoderKind};
use crate::quantization::{bussgang_delta, QuantizerSpec};
use crate::rate::{
    empirical_rate_roughly_quantized, sum_rate_cqa, sum_rate_full_resolution, RateInputs,
};

/// How the per-channel rate is evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RateMode {
    /// Closed-form rate of the linearized quantized link.
    Cqa,
    /// Full resolution (no quantization).
    Fr,
    /// Monte Carlo roughly-quantized baseline.
    Rq,
}

impl RateMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            RateMode::Cqa => "cqa",
            RateMode::Fr => "fr",
            RateMode::Rq => "rq",
        }
    }
}

impl std::str::FromStr for RateMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "cqa" => Ok(RateMode::Cqa),
            "fr" => Ok(RateMode::Fr),
            "rq" => Ok(RateMode::Rq),
            other => Err(Error::config(format!("unknown rate mode '{other}'"))),
        }
    }
}

/// One sweep configuration: a scenario, a precoder, a rate mode, the SNR
/// grid in dB, and the Monte Carlo bookkeeping.
#[derive(Debug, Clone)]
pub struct SweepConfig {
    pub dims: ScenarioDims,
    pub precoder: PrecoderKind,
    pub mode: RateMode,
    /// DAC resolution; ignored in full-resolution mode.
    pub bits: u32,
    /// Explicit normalized step; `None` selects the per-bit default.
    pub gamma: Option<f64>,
    pub snr_db: Vec<f64>,
    pub trials: usize,
    pub packet_len: usize,
    pub seed: u64,
}

impl SweepConfig {
    pub fn validate(&self) -> Result<()> {
        if self.trials < 1 {
            return Err(Error::config("at least one trial is required"));
        }
        if self.snr_db.is_empty() {
            return Err(Error::config("the SNR grid is empty"));
        }
        if self.snr_db.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::config("the SNR grid must be strictly increasing"));
        }
        if self.snr_db.iter().any(|db| !db.is_finite()) {
            return Err(Error::config("the SNR grid contains non-finite values"));
        }
        if self.mode == RateMode::Rq && self.packet_len < 100 {
            return Err(Error::config(
                "the roughly-quantized mode needs a packet length of at least 100",
            ));
        }
        if self.mode != RateMode::Fr {
            // Surface step problems before any trial runs.
            self.quantizer_spec()?;
        }
        Ok(())
    }

    /// The quantizer this sweep runs with, at the scenario's design point
    /// (total power equal to the stream count).
    pub fn quantizer_spec(&self) -> Result<QuantizerSpec> {
        let nu = self.dims.nu();
        match self.gamma {
            Some(g) => QuantizerSpec::new(self.bits, g, self.dims.nb, nu as f64),
            None => QuantizerSpec::with_default_step(self.bits, self.dims.nb, nu as f64),
        }
    }

    /// Bits value recorded in result rows: zero marks full resolution.
    fn recorded_bits(&self) -> u32 {
        match self.mode {
            RateMode::Fr => 0,
            _ => self.bits,
        }
    }
}

/// One aggregated sweep point.
#[derive(Debug, Clone)]
pub struct SweepRow {
    pub snr_db: f64,
    pub precoder: PrecoderKind,
    pub mode: RateMode,
    pub bits: u32,
    pub mean_rate: f64,
    pub std_rate: f64,
    pub trials: usize,
    pub seed: u64,
}

/// Aggregated sweep output; results from several configurations can be
/// merged for joint reporting.
#[derive(Debug, Clone, Default)]
pub struct SweepResult {
    pub rows: Vec<SweepRow>,
}

impl SweepResult {
    pub fn merge(mut self, other: SweepResult) -> SweepResult {
        self.rows.extend(other.rows);
        self
    }
}

/// Generator for trial `t`'s channel draw.
fn channel_rng(seed: u64, trial: usize) -> ChaCha12Rng {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    rng.set_stream((trial as u64) << 20);
    rng
}

/// Generator for the symbol/noise draws of (trial, SNR point); only the
/// roughly-quantized mode consumes it.
fn eval_rng(seed: u64, trial: usize, snr_index: usize) -> ChaCha12Rng {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    rng.set_stream(((trial as u64) << 20) | (snr_index as u64 + 1));
    rng
}

/// Rate of one channel realization at one SNR: builds the configured
/// precoder, then evaluates the configured rate mode on H M.
pub fn run_algorithm_one<R: rand::Rng>(
    ch: &ChannelSet,
    cfg: &SweepConfig,
    snr: f64,
    rng: &mut R,
) -> Result<f64> {
    let pre = build_precoder(ch, cfg.precoder, snr)?;
    let nu = ch.dims.nu();
    match cfg.mode {
        RateMode::Fr => {
            let hm = ch.combined.dot(&pre.combined);
            sum_rate_full_resolution(&hm, snr, nu)
        }
        RateMode::Cqa => {
            let spec = cfg.quantizer_spec()?;
            let factors = bussgang_delta(&spec)?;
            let hm = ch.combined.dot(&pre.combined);
            sum_rate_cqa(&RateInputs {
                hm,
                snr,
                nu,
                delta: factors.delta,
            })
        }
        RateMode::Rq => {
            let spec = cfg.quantizer_spec()?;
            empirical_rate_roughly_quantized(ch, &pre, &spec, snr, cfg.packet_len, rng)
        }
    }
}

/// Runs the whole sweep: `trials` independent channels per SNR point,
/// evaluated in parallel and aggregated in trial order. Any trial failure
/// aborts the sweep with its context; skipping trials would bias the means.
pub fn run_sweep(cfg: &SweepConfig) -> Result<SweepResult> {
    cfg.validate()?;
    let snr_linear: Vec<f64> = cfg
        .snr_db
        .iter()
        .map(|db| 10f64.powf(db / 10.0))
        .collect();

    let per_trial: Vec<Result<Vec<f64>>> = (0..cfg.trials)
        .into_par_iter()
        .map(|t| {
            let ch = generate_channel(&cfg.dims, &mut channel_rng(cfg.seed, t));
            snr_linear
                .iter()
                .enumerate()
                .map(|(si, &snr)| {
                    run_algorithm_one(&ch, cfg, snr, &mut eval_rng(cfg.seed, t, si)).map_err(
                        |e| {
                            e.with_context(&format!(
                                "trial {t} at {} dB",
                                cfg.snr_db[si]
                            ))
                        },
                    )
                })
                .collect()
        })
        .collect();

    let mut rates = Vec::with_capacity(cfg.trials);
    for trial in per_trial {
        rates.push(trial?);
    }

    let mut rows = Vec::with_capacity(cfg.snr_db.len());
    for (si, &db) in cfg.snr_db.iter().enumerate() {
        let samples: Vec<f64> = rates.iter().map(|r| r[si]).collect();
        let n = samples.len() as f64;
        let mean = samples.iter().sum::<f64>() / n;
        let std = if samples.len() < 2 {
            0.0
        } else {
            (samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
        };
        rows.push(SweepRow {
            snr_db: db,
            precoder: cfg.precoder,
            mode: cfg.mode,
            bits: cfg.recorded_bits(),
            mean_rate: mean,
            std_rate: std,
            trials: cfg.trials,
            seed: cfg.seed,
        });
    }
    Ok(SweepResult { rows })
}
