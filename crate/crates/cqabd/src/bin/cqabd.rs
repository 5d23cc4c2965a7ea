//! Command-line front end: Monte Carlo sum-rate sweeps, converter power
//! arithmetic, and the analytic-vs-Monte-Carlo linearization gain check.
//!
//! Exit codes: 0 success, 2 configuration error, 3 numerical failure,
//! 4 I/O failure.

use std::collections::HashMap;
use std::path::PathBuf;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};

use cqabd::channel::ScenarioDims;
use cqabd::error::{Error, Result};
use cqabd::power::{
    adc_power_mw, bit_reduction_saving, calibrated_c_tau, dac_to_adc_ratio, ConverterParams,
    REFERENCE_ADC, REFERENCE_DAC,
};
use cqabd::precoding::PrecoderKind;
use cqabd::quantization::{bussgang_delta, empirical_bussgang_gain, QuantizerSpec};
use cqabd::report::{emit_csv, emit_plot_data};
use cqabd::sweep::{run_sweep, RateMode, SweepConfig};

#[derive(Parser)]
#[command(
    name = "cqabd",
    about = "Quantization-aware BD/RBD/ZF precoding and sum-rate simulation"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run a seeded Monte Carlo sweep and write the results as CSV.
    Sweep(Box<SweepArgs>),
    /// Converter power arithmetic.
    Power(PowerArgs),
    /// Compare the analytic linearization gain with its Monte Carlo estimate.
    Oracle(OracleArgs),
}

#[derive(Args)]
struct SweepArgs {
    /// Optional key=value config file mirroring the flags; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Transmit antenna count.
    #[arg(long)]
    nb: Option<usize>,
    /// Receive antennas per user: one value for all users or a comma list.
    #[arg(long = "nu-per-user")]
    nu_per_user: Option<String>,
    /// User count.
    #[arg(long)]
    users: Option<usize>,
    /// Precoder: bd, rbd, or zf.
    #[arg(long)]
    precoder: Option<String>,
    /// Rate mode: cqa, fr, or rq.
    #[arg(long)]
    mode: Option<String>,
    /// DAC resolution in bits (ignored for fr).
    #[arg(long)]
    bits: Option<u32>,
    /// SNR grid in dB: start:step:stop, or a single value.
    #[arg(long, allow_hyphen_values = true)]
    snr: Option<String>,
    /// Channel realizations per SNR point.
    #[arg(long)]
    trials: Option<usize>,
    /// Symbols per packet (rq mode).
    #[arg(long = "packet-len")]
    packet_len: Option<usize>,
    /// Master seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Normalized quantizer step, or "auto" for the per-bit default.
    #[arg(long)]
    gamma: Option<String>,
    /// Output CSV path.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Optional SVG plot path.
    #[arg(long)]
    plot: Option<PathBuf>,
}

#[derive(Args)]
struct PowerArgs {
    /// Print the reference-row calibration and the derived figures.
    #[arg(long)]
    table1: bool,
    /// Dissipation saving for a bit reduction: from-bits to-bits.
    #[arg(long, num_args = 2, value_names = ["FROM_BITS", "TO_BITS"])]
    saving: Option<Vec<u32>>,
}

#[derive(Args)]
struct OracleArgs {
    /// Run the linearization-gain comparison.
    #[arg(long)]
    bussgang: bool,
    #[arg(long)]
    bits: Option<u32>,
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Normalized quantizer step, or "auto" for the per-bit default.
    #[arg(long)]
    gamma: Option<String>,
}

fn main() {
    let cli = Cli::parse();
    let outcome = match cli.cmd {
        Cmd::Sweep(a) => cmd_sweep(*a),
        Cmd::Power(a) => cmd_power(a),
        Cmd::Oracle(a) => cmd_oracle(a),
    };
    if let Err(e) = outcome {
        eprintln!("error: {e}");
        std::process::exit(e.exit_code());
    }
}

/// key=value file; blank lines and #-comments are skipped.
fn read_config(path: &PathBuf) -> Result<HashMap<String, String>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut map = HashMap::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            Error::config(format!(
                "{}:{}: expected key=value, got '{line}'",
                path.display(),
                i + 1
            ))
        })?;
        map.insert(key.trim().to_string(), value.trim().to_string());
    }
    Ok(map)
}

/// Precedence: command line, then config file, then the built-in default.
fn pick<T: Clone + FromStr>(
    cli: Option<T>,
    file: &HashMap<String, String>,
    key: &str,
    default: T,
) -> Result<T> {
    if let Some(v) = cli {
        return Ok(v);
    }
    match file.get(key) {
        Some(raw) => raw
            .parse::<T>()
            .map_err(|_| Error::config(format!("config key '{key}': cannot parse '{raw}'"))),
        None => Ok(default),
    }
}

fn parse_snr_grid(text: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = text.split(':').collect();
    let bad = |_| Error::config(format!("cannot parse SNR grid '{text}'"));
    match parts.as_slice() {
        [single] => Ok(vec![single.trim().parse::<f64>().map_err(bad)?]),
        [start, step, stop] => {
            let start: f64 = start.trim().parse().map_err(bad)?;
            let step: f64 = step.trim().parse().map_err(bad)?;
            let stop: f64 = stop.trim().parse().map_err(bad)?;
            if step <= 0.0 || stop < start {
                return Err(Error::config(format!(
                    "SNR grid '{text}' needs step > 0 and stop >= start"
                )));
            }
            let mut grid = Vec::new();
            let mut k = 0usize;
            loop {
                let v = start + step * k as f64;
                if v > stop + 1e-9 {
                    break;
                }
                grid.push(v);
                k += 1;
            }
            Ok(grid)
        }
        _ => Err(Error::config(format!(
            "SNR grid '{text}' must be start:step:stop or a single value"
        ))),
    }
}

fn parse_per_user(list: &str, users: Option<usize>) -> Result<Vec<usize>> {
    let values: Vec<usize> = list
        .split(',')
        .map(|s| {
            s.trim()
                .parse::<usize>()
                .map_err(|_| Error::config(format!("cannot parse antenna count '{s}'")))
        })
        .collect::<Result<_>>()?;
    match (values.len(), users) {
        (1, Some(k)) => Ok(vec![values[0]; k]),
        (n, Some(k)) if n == k => Ok(values),
        (_, Some(k)) => Err(Error::config(format!(
            "--nu-per-user lists {} users but --users says {k}",
            values.len()
        ))),
        (_, None) => Ok(values),
    }
}

fn parse_gamma(text: &str) -> Result<Option<f64>> {
    if text.eq_ignore_ascii_case("auto") {
        return Ok(None);
    }
    text.parse::<f64>()
        .map(Some)
        .map_err(|_| Error::config(format!("gamma must be a number or 'auto', got '{text}'")))
}

fn cmd_sweep(args: SweepArgs) -> Result<()> {
    let file = match &args.config {
        Some(path) => read_config(path)?,
        None => HashMap::new(),
    };
    let nb = pick(args.nb, &file, "nb", 32)?;
    let users = pick(args.users, &file, "users", 8)?;
    let per_user_text = pick(args.nu_per_user, &file, "nu-per-user", "2".to_string())?;
    let per_user = parse_per_user(&per_user_text, Some(users))?;
    let precoder: PrecoderKind = pick(args.precoder, &file, "precoder", "rbd".into())?.parse()?;
    let mode: RateMode = pick(args.mode, &file, "mode", "cqa".into())?.parse()?;
    let bits = pick(args.bits, &file, "bits", 3)?;
    let snr_text = pick(args.snr, &file, "snr", "0:1:20".to_string())?;
    let trials = pick(args.trials, &file, "trials", 200)?;
    let packet_len = pick(args.packet_len, &file, "packet-len", 100)?;
    let seed = pick(args.seed, &file, "seed", 1)?;
    let gamma = parse_gamma(&pick(args.gamma, &file, "gamma", "auto".to_string())?)?;
    let out = match (args.out, file.get("out")) {
        (Some(p), _) => p,
        (None, Some(p)) => PathBuf::from(p),
        (None, None) => return Err(Error::config("--out <path.csv> is required")),
    };
    let plot = args.plot.or_else(|| file.get("plot").map(PathBuf::from));

    let cfg = SweepConfig {
        dims: ScenarioDims::new(nb, per_user)?,
        precoder,
        mode,
        bits,
        gamma,
        snr_db: parse_snr_grid(&snr_text)?,
        trials,
        packet_len,
        seed,
    };
    let result = run_sweep(&cfg)?;
    emit_csv(&result, &out)?;
    eprintln!(
        "wrote {} rows to {} ({} {} b={} trials={} seed={})",
        result.rows.len(),
        out.display(),
        cfg.precoder.as_str(),
        cfg.mode.as_str(),
        cfg.bits,
        cfg.trials,
        cfg.seed
    );
    if let Some(plot_path) = plot {
        emit_plot_data(&result, &plot_path)?;
        eprintln!("wrote plot to {}", plot_path.display());
    }
    Ok(())
}

fn cmd_power(args: PowerArgs) -> Result<()> {
    if !args.table1 && args.saving.is_none() {
        return Err(Error::config("power needs --table1 and/or --saving"));
    }
    if args.table1 {
        let ct = calibrated_c_tau();
        let (ab, at, am) = REFERENCE_ADC;
        let (db, dt, dm) = REFERENCE_DAC;
        println!("reference ADC: {ab} bits, {at} GHz, {am} mW");
        println!("reference DAC: {db} bits, {dt} GHz, {dm} mW");
        println!("calibrated c*tau = {ct} mW per level");
        let p5 = adc_power_mw(&ConverterParams {
            c: ct,
            tau: 1.0,
            bits: 5,
        });
        println!("P_ADC(5 bits, 1 GHz) = {p5} mW");
        let ratio = dac_to_adc_ratio(dm, p5)?;
        println!("DAC/ADC ratio at 5 bits = {dm}/{p5} = {ratio:.4}");
        let saving = bit_reduction_saving(4, 2)?;
        println!("4 -> 2 bit saving under the doubling law = {:.0}%", saving * 100.0);
    }
    if let Some(pair) = args.saving {
        let saving = bit_reduction_saving(pair[0], pair[1])?;
        println!(
            "{} -> {} bit saving under the doubling law = {:.4} ({:.1}%)",
            pair[0],
            pair[1],
            saving,
            saving * 100.0
        );
    }
    Ok(())
}

fn cmd_oracle(args: OracleArgs) -> Result<()> {
    if !args.bussgang {
        return Err(Error::config("oracle supports --bussgang"));
    }
    let bits = args.bits.unwrap_or(2);
    let samples = args.samples.unwrap_or(1_000_000);
    let seed = args.seed.unwrap_or(1);
    let gamma = parse_gamma(args.gamma.as_deref().unwrap_or("auto"))?;
    let spec = match gamma {
        Some(g) => QuantizerSpec::new(bits, g, 1, 1.0)?,
        None => QuantizerSpec::with_default_step(bits, 1, 1.0)?,
    };
    let factors = bussgang_delta(&spec)?;
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(seed);
    let est = empirical_bussgang_gain(&spec, samples, &mut rng)?;
    println!(
        "bits = {bits} (J = {}), normalized step = {:.6}{}",
        spec.levels,
        spec.step,
        if gamma.is_none() { " (default)" } else { "" }
    );
    println!("alpha = {:.9}", factors.alpha);
    println!("analytic delta = {:.9}", factors.delta);
    println!(
        "monte carlo gain = {:.9} +- {:.2e} ({} samples, seed {seed})",
        est.gain, est.std_error, est.samples
    );
    let sigmas = (factors.delta - est.gain).abs() / est.std_error;
    println!("|analytic - empirical| = {sigmas:.2} standard errors");
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn snr_grid_parsing() {
        assert_eq!(parse_snr_grid("0:1:3").unwrap(), vec![0.0, 1.0, 2.0, 3.0]);
        assert_eq!(parse_snr_grid("7:0.5:8").unwrap(), vec![7.0, 7.5, 8.0]);
        assert_eq!(parse_snr_grid("12").unwrap(), vec![12.0]);
        assert!(parse_snr_grid("3:0:5").is_err());
        assert!(parse_snr_grid("5:1:3").is_err());
        assert!(parse_snr_grid("a:b:c").is_err());
        // Inclusive endpoint despite accumulated float error.
        assert_eq!(parse_snr_grid("0:0.1:1").unwrap().len(), 11);
    }

    #[test]
    fn per_user_parsing() {
        assert_eq!(parse_per_user("2", Some(4)).unwrap(), vec![2, 2, 2, 2]);
        assert_eq!(parse_per_user("1,2,3", Some(3)).unwrap(), vec![1, 2, 3]);
        assert!(parse_per_user("1,2", Some(3)).is_err());
        assert!(parse_per_user("x", Some(2)).is_err());
    }

    #[test]
    fn gamma_parsing() {
        assert_eq!(parse_gamma("auto").unwrap(), None);
        assert_eq!(parse_gamma("0.996").unwrap(), Some(0.996));
        assert!(parse_gamma("wide").is_err());
    }
}
