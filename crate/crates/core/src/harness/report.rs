//! CSV, JSON and SVG outputs.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::Serialize;

use crate::diagnostics::{DecayFit, DiagnosticsRecord};
use crate::error::Result;

/// Doubles are written with 17 significant digits so they round-trip exactly.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn csv_table(header: &[&str], rows: &[Vec<Option<f64>>]) -> String {
    let mut out = header.join(",");
    out.push('\n');
    for row in rows {
        let cells: Vec<String> = row.iter().map(|c| c.map(fmt_f64).unwrap_or_default()).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

pub fn diagnostics_csv(records: &[DiagnosticsRecord]) -> String {
    let rows: Vec<Vec<Option<f64>>> = records.iter().map(DiagnosticsRecord::row).collect();
    csv_table(&DiagnosticsRecord::COLUMNS, &rows)
}

pub fn column_series(records: &[DiagnosticsRecord], column: &str) -> Vec<(f64, f64)> {
    let Some(idx) = DiagnosticsRecord::COLUMNS.iter().position(|c| *c == column) else {
        return Vec::new();
    };
    records
        .iter()
        .filter_map(|r| r.row()[idx].map(|v| (r.t, v)))
        .collect()
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut s = serde_json::to_string_pretty(value).expect("serializable");
    s.push('\n');
    fs::write(path, s)?;
    Ok(())
}

fn minus(s: String) -> String {
    s.replace('-', "\u{2212}")
}

/// Log-log plot of `series` with the fitted power law over its window.
pub fn decay_svg(title: &str, series: &[(f64, f64)], fit: &DecayFit, intercept: f64) -> String {
    const W: f64 = 640.0;
    const H: f64 = 420.0;
    const M: f64 = 60.0;
    let pts: Vec<(f64, f64)> = series
        .iter()
        .filter(|(t, y)| *t > 0.0 && *y > 0.0)
        .map(|(t, y)| (t.log10(), y.log10()))
        .collect();
    let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for &(x, y) in &pts {
        x0 = x0.min(x);
        x1 = x1.max(x);
        y0 = y0.min(y);
        y1 = y1.max(y);
    }
    if !(x1 > x0) {
        x0 -= 0.5;
        x1 += 0.5;
    }
    if !(y1 > y0) {
        y0 -= 0.5;
        y1 += 0.5;
    }
    let sx = |x: f64| M + (x - x0) / (x1 - x0) * (W - 2.0 * M);
    let sy = |y: f64| H - M - (y - y0) / (y1 - y0) * (H - 2.0 * M);
    let mut svg = String::new();
    let _ = writeln!(svg, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}">"#);
    let _ = writeln!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        svg,
        r#"<rect x="{M}" y="{M}" width="{}" height="{}" fill="none" stroke="black"/>"#,
        W - 2.0 * M,
        H - 2.0 * M
    );
    let _ = writeln!(svg, r#"<text x="{}" y="30" text-anchor="middle" font-family="sans-serif" font-size="16">{title}</text>"#, W / 2.0);
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="{}" text-anchor="middle" font-family="sans-serif" font-size="12">log10 t  [{:.2}, {:.2}]</text>"#,
        W / 2.0,
        H - 20.0,
        x0,
        x1
    );
    let _ = writeln!(
        svg,
        r#"<text x="15" y="{}" font-family="sans-serif" font-size="12" transform="rotate(-90 15 {})" text-anchor="middle">log10 value  [{:.2}, {:.2}]</text>"#,
        H / 2.0,
        H / 2.0,
        y0,
        y1
    );
    if !pts.is_empty() {
        let path: Vec<String> = pts.iter().map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y))).collect();
        let _ = writeln!(svg, r#"<polyline points="{}" fill="none" stroke="steelblue" stroke-width="1.5"/>"#, path.join(" "));
    }
    let (a, b) = (fit.t1.log10(), fit.t2.log10());
    let line = |x: f64| (intercept + fit.exponent * x * std::f64::consts::LN_10) / std::f64::consts::LN_10;
    let _ = writeln!(
        svg,
        r#"<line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="crimson" stroke-width="2" stroke-dasharray="6 4"/>"#,
        sx(a),
        sy(line(a)),
        sx(b),
        sy(line(b))
    );
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="{}" font-family="sans-serif" font-size="14" fill="crimson">slope = {} ± {:.2}</text>"#,
        W - M - 190.0,
        M + 24.0,
        minus(format!("{:.2}", fit.exponent)),
        fit.half_width
    );
    svg.push_str("</svg>\n");
    svg
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diagnostics::{fit_decay, log_log_regression};

    #[test]
    fn single_record_csv() {
        let csv = diagnostics_csv(&[DiagnosticsRecord::default()]);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines.len(), 2);
        assert!(lines[0].starts_with("t,l2,z_norm"));
        assert_eq!(lines[1].split(',').count(), DiagnosticsRecord::COLUMNS.len());
    }

    #[test]
    fn svg_annotates_slope() {
        let series: Vec<(f64, f64)> = (0..12).map(|i| 2f64.powf(i as f64 / 2.0 + 1.0)).map(|t| (t, 7.0 * t.powi(-3))).collect();
        let fit = fit_decay(&series, (2.0, 64.0)).unwrap();
        let (_, c, _, _) = log_log_regression(&series).unwrap();
        let svg = decay_svg("test", &series, &fit, c);
        assert!(svg.contains("slope = \u{2212}3.00"), "{svg}");
    }
}
