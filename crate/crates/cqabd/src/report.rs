//! Result emission: the CSV container and a static SVG rendering of the
//! rate curves.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::sweep::{SweepResult, SweepRow};

pub const CSV_HEADER: &str = "snr_db,precoder,mode,bits,mean_rate,std_rate,trials,seed";

/// Plain decimal with nine significant digits; no exponent, no separators.
fn format_sig9(x: f64) -> String {
    if x == 0.0 {
        return "0.00000000".to_string();
    }
    let mag = x.abs().log10().floor() as i32;
    let decimals = (8 - mag).max(0) as usize;
    format!("{x:.decimals$}")
}

fn csv_line(row: &SweepRow) -> String {
    format!(
        "{},{},{},{},{},{},{},{}",
        format_sig9(row.snr_db),
        row.precoder.as_str(),
        row.mode.as_str(),
        row.bits,
        format_sig9(row.mean_rate),
        format_sig9(row.std_rate),
        row.trials,
        row.seed
    )
}

/// Serializes the result rows; the final line is newline-terminated and an
/// empty result produces a header-only file.
pub fn csv_string(res: &SweepResult) -> String {
    let mut out = String::with_capacity(64 * (res.rows.len() + 1));
    out.push_str(CSV_HEADER);
    out.push('\n');
    for row in &res.rows {
        out.push_str(&csv_line(row));
        out.push('\n');
    }
    out
}

pub fn emit_csv(res: &SweepResult, path: &Path) -> Result<()> {
    std::fs::write(path, csv_string(res)).map_err(|e| Error::io(path, e))
}

/// One plotted series: all rows sharing (precoder, mode, bits), in
/// first-appearance order.
fn group_series(res: &SweepResult) -> Vec<(String, Vec<&SweepRow>)> {
    let mut series: Vec<(String, Vec<&SweepRow>)> = Vec::new();
    for row in &res.rows {
        let label = match row.mode.as_str() {
            "fr" => format!("{} fr", row.precoder.as_str()),
            m => format!("{} {m} b={}", row.precoder.as_str(), row.bits),
        };
        match series.iter_mut().find(|(l, _)| *l == label) {
            Some((_, rows)) => rows.push(row),
            None => series.push((label, vec![row])),
        }
    }
    series
}

const PALETTE: [&str; 10] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#e377c2", "#7f7f7f",
    "#bcbd22", "#17becf",
];

/// Renders the curves as a self-contained SVG: one polyline per
/// (precoder, mode, bits) series over the SNR grid, with axes and a legend.
/// Deterministic for a fixed input.
pub fn plot_svg(res: &SweepResult) -> String {
    let series = group_series(res);
    let (w, h) = (720.0, 480.0);
    let (ml, mr, mt, mb) = (64.0, 24.0, 24.0, 48.0);
    let (pw, ph) = (w - ml - mr, h - mt - mb);

    let mut x_min = f64::INFINITY;
    let mut x_max = f64::NEG_INFINITY;
    let mut y_max = 0.0f64;
    for row in &res.rows {
        x_min = x_min.min(row.snr_db);
        x_max = x_max.max(row.snr_db);
        y_max = y_max.max(row.mean_rate);
    }
    if !x_min.is_finite() || x_max <= x_min {
        x_min = 0.0;
        x_max = 1.0;
    }
    if y_max <= 0.0 {
        y_max = 1.0;
    }
    y_max *= 1.05;

    let px = |x: f64| ml + (x - x_min) / (x_max - x_min) * pw;
    let py = |y: f64| mt + (1.0 - y / y_max) * ph;

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}">"#
    );
    let _ = writeln!(
        svg,
        r#"<rect width="{w}" height="{h}" fill="white"/>"#
    );
    // Axes.
    let _ = writeln!(
        svg,
        r#"<line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="black"/>"#,
        ml,
        mt + ph,
        ml + pw,
        mt + ph
    );
    let _ = writeln!(
        svg,
        r#"<line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="black"/>"#,
        ml,
        mt,
        ml,
        mt + ph
    );
    // Ticks: five per axis.
    for i in 0..=4 {
        let xv = x_min + (x_max - x_min) * i as f64 / 4.0;
        let yv = y_max * i as f64 / 4.0;
        let _ = writeln!(
            svg,
            r#"<text x="{:.2}" y="{:.2}" font-size="11" text-anchor="middle">{:.1}</text>"#,
            px(xv),
            mt + ph + 16.0,
            xv
        );
        let _ = writeln!(
            svg,
            r#"<text x="{:.2}" y="{:.2}" font-size="11" text-anchor="end">{:.1}</text>"#,
            ml - 6.0,
            py(yv) + 4.0,
            yv
        );
    }
    let _ = writeln!(
        svg,
        r#"<text x="{:.2}" y="{:.2}" font-size="12" text-anchor="middle">SNR (dB)</text>"#,
        ml + pw / 2.0,
        h - 10.0
    );
    let _ = writeln!(
        svg,
        r#"<text x="14" y="{:.2}" font-size="12" text-anchor="middle" transform="rotate(-90 14 {:.2})">sum rate (bits per channel use)</text>"#,
        mt + ph / 2.0,
        mt + ph / 2.0
    );

    for (i, (label, rows)) in series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let points: Vec<String> = rows
            .iter()
            .map(|r| format!("{:.2},{:.2}", px(r.snr_db), py(r.mean_rate)))
            .collect();
        let _ = writeln!(
            svg,
            r#"<polyline fill="none" stroke="{color}" stroke-width="1.6" points="{}"/>"#,
            points.join(" ")
        );
        // Legend entry.
        let ly = mt + 16.0 + 16.0 * i as f64;
        let _ = writeln!(
            svg,
            r#"<line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="{color}" stroke-width="1.6"/>"#,
            ml + 10.0,
            ly - 4.0,
            ml + 34.0,
            ly - 4.0
        );
        let _ = writeln!(
            svg,
            r#"<text x="{:.2}" y="{:.2}" font-size="11">{label}</text>"#,
            ml + 40.0,
            ly
        );
    }
    svg.push_str("</svg>\n");
    svg
}

pub fn emit_plot_data(res: &SweepResult, path: &Path) -> Result<()> {
    std::fs::write(path, plot_svg(res)).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::precoding::PrecoderKind;
    use crate::sweep::{RateMode, SweepRow};

    fn row(snr_db: f64, mode: RateMode, bits: u32, mean: f64) -> SweepRow {
        SweepRow {
            snr_db,
            precoder: PrecoderKind::Rbd,
            mode,
            bits,
            mean_rate: mean,
            std_rate: 0.25,
            trials: 200,
            seed: 7,
        }
    }

    #[test]
    fn empty_result_is_header_only() {
        let s = csv_string(&SweepResult::default());
        assert_eq!(s, format!("{CSV_HEADER}\n"));
    }

    #[test]
    fn one_row_round_trips() {
        let res = SweepResult {
            rows: vec![row(7.0, RateMode::Cqa, 3, 45.123456789)],
        };
        let s = csv_string(&res);
        let lines: Vec<&str> = s.lines().collect();
        assert_eq!(lines.len(), 2);
        assert!(s.ends_with('\n'));
        let fields: Vec<&str> = lines[1].split(',').collect();
        assert_eq!(fields.len(), 8);
        assert_eq!(fields[0].parse::<f64>().unwrap(), 7.0);
        assert_eq!(fields[1], "rbd");
        assert_eq!(fields[2], "cqa");
        assert_eq!(fields[3], "3");
        let mean: f64 = fields[4].parse().unwrap();
        assert!((mean - 45.123456789).abs() < 1e-7);
        assert_eq!(fields[6], "200");
        assert_eq!(fields[7], "7");
    }

    #[test]
    fn nine_significant_digits() {
        assert_eq!(format_sig9(7.0), "7.00000000");
        assert_eq!(format_sig9(45.123456789), "45.1234568");
        assert_eq!(format_sig9(0.000123456789), "0.000123456789");
        assert_eq!(format_sig9(-3.5), "-3.50000000");
        assert_eq!(format_sig9(0.0), "0.00000000");
        assert!(!format_sig9(123.456).contains('e'));
    }

    #[test]
    fn svg_has_one_polyline_per_series() {
        let res = SweepResult {
            rows: vec![
                row(0.0, RateMode::Fr, 0, 10.0),
                row(5.0, RateMode::Fr, 0, 20.0),
                row(0.0, RateMode::Cqa, 2, 6.0),
                row(5.0, RateMode::Cqa, 2, 12.0),
                row(0.0, RateMode::Cqa, 3, 8.0),
                row(5.0, RateMode::Cqa, 3, 16.0),
            ],
        };
        let svg = plot_svg(&res);
        assert_eq!(svg.matches("<polyline").count(), 3);
        assert!(svg.contains("rbd fr"));
        assert!(svg.contains("rbd cqa b=2"));
        assert!(svg.contains("rbd cqa b=3"));
        // Deterministic output.
        assert_eq!(svg, plot_svg(&res));
    }

    #[test]
    fn single_series_single_polyline() {
        let res = SweepResult {
            rows: vec![row(0.0, RateMode::Rq, 2, 3.0), row(5.0, RateMode::Rq, 2, 5.0)],
        };
        let svg = plot_svg(&res);
        assert_eq!(svg.matches("<polyline").count(), 1);
        assert!(svg.contains("rbd rq b=2"));
    }
}
