//! Log-log SVG of the study metrics against the noise level.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::error::{io_err, CliError, Result};
use crate::study::{write_study_csv, StudyRow};

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 480.0;
const MARGIN_LEFT: f64 = 80.0;
const MARGIN_RIGHT: f64 = 220.0;
const MARGIN_TOP: f64 = 30.0;
const MARGIN_BOTTOM: f64 = 60.0;

struct Series {
    label: &'static str,
    color: &'static str,
    points: Vec<(f64, f64)>,
}

type Metric = fn(&StudyRow) -> f64;

fn series(rows: &[StudyRow]) -> Vec<Series> {
    let columns: [(&str, &str, Metric); 4] = [
        ("tr|rho - rho_true|", "#1f77b4", |r| r.metrics.trace_error),
        ("QKL(rho, rho_true)", "#d62728", |r| r.metrics.qkl_to_truth),
        ("|QKL(rho,rho0) - QKL(rho_true,rho0)|", "#2ca02c", |r| {
            r.metrics.qkl_penalty_gap
        }),
        ("S(T rho) against exact data", "#9467bd", |r| r.metrics.data_residual),
    ];
    columns
        .iter()
        .map(|&(label, color, get)| {
            let mut points: Vec<(f64, f64)> = rows
                .iter()
                .filter(|r| r.is_ok())
                .map(|r| (r.delta, get(r)))
                .filter(|&(x, y)| x > 0.0 && y > 0.0 && x.is_finite() && y.is_finite())
                .collect();
            points.sort_by(|a, b| a.0.total_cmp(&b.0));
            Series { label, color, points }
        })
        .collect()
}

/// Decade range covering `values`, at least one decade wide.
fn decades(values: impl Iterator<Item = f64>) -> (i32, i32) {
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for v in values {
        lo = lo.min(v.log10());
        hi = hi.max(v.log10());
    }
    if !lo.is_finite() {
        return (-1, 0);
    }
    let (lo, hi) = (lo.floor() as i32, hi.ceil() as i32);
    if hi > lo {
        (lo, hi)
    } else {
        (lo, lo + 1)
    }
}

/// Renders the study as a standalone SVG document.
pub fn render_svg(rows: &[StudyRow]) -> Result<String> {
    if rows.is_empty() {
        return Err(CliError::EmptyPlot);
    }
    let all = series(rows);
    let (x0, x1) = decades(all.iter().flat_map(|s| s.points.iter().map(|p| p.0)));
    let (y0, y1) = decades(all.iter().flat_map(|s| s.points.iter().map(|p| p.1)));
    let pw = WIDTH - MARGIN_LEFT - MARGIN_RIGHT;
    let ph = HEIGHT - MARGIN_TOP - MARGIN_BOTTOM;
    let sx = |x: f64| MARGIN_LEFT + (x.log10() - x0 as f64) / (x1 - x0) as f64 * pw;
    let sy = |y: f64| MARGIN_TOP + (y1 as f64 - y.log10()) / (y1 - y0) as f64 * ph;

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<rect x="{MARGIN_LEFT}" y="{MARGIN_TOP}" width="{pw}" height="{ph}" fill="none" stroke="black"/>"#
    );
    let y_bottom = MARGIN_TOP + ph;
    for e in x0..=x1 {
        let x = sx(10f64.powi(e));
        let _ = writeln!(
            s,
            r##"<line x1="{x:.2}" y1="{MARGIN_TOP}" x2="{x:.2}" y2="{y_bottom}" stroke="#ddd"/>"##
        );
        let _ = writeln!(
            s,
            r#"<text x="{x:.2}" y="{:.2}" text-anchor="middle">1e{e}</text>"#,
            y_bottom + 18.0
        );
    }
    for e in y0..=y1 {
        let y = sy(10f64.powi(e));
        let _ = writeln!(
            s,
            r##"<line x1="{MARGIN_LEFT}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="#ddd"/>"##,
            MARGIN_LEFT + pw
        );
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="end">1e{e}</text>"#,
            MARGIN_LEFT - 6.0,
            y + 4.0
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">noise level delta</text>"#,
        MARGIN_LEFT + pw / 2.0,
        HEIGHT - 15.0
    );

    for (k, ser) in all.iter().enumerate() {
        if ser.points.len() >= 2 {
            let pts: Vec<String> = ser
                .points
                .iter()
                .map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y)))
                .collect();
            let _ = writeln!(
                s,
                r#"<polyline points="{}" fill="none" stroke="{}" stroke-width="1.5"/>"#,
                pts.join(" "),
                ser.color
            );
        }
        for &(x, y) in &ser.points {
            let _ = writeln!(
                s,
                r#"<circle cx="{:.2}" cy="{:.2}" r="3" fill="{}"/>"#,
                sx(x),
                sy(y),
                ser.color
            );
        }
        let ly = MARGIN_TOP + 10.0 + 20.0 * k as f64;
        let lx = MARGIN_LEFT + pw + 12.0;
        let _ = writeln!(
            s,
            r#"<line x1="{lx:.2}" y1="{ly:.2}" x2="{:.2}" y2="{ly:.2}" stroke="{}" stroke-width="2"/>"#,
            lx + 20.0,
            ser.color
        );
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}">{}</text>"#,
            lx + 26.0,
            ly + 4.0,
            ser.label
        );
    }
    s.push_str("</svg>\n");
    Ok(s)
}

/// Writes the SVG to `path` and the study CSV next to it (same stem, `.csv`).
/// Returns the CSV path.
pub fn emit_plot(rows: &[StudyRow], path: &Path, comments: &[String]) -> Result<PathBuf> {
    let svg = render_svg(rows)?;
    std::fs::write(path, svg).map_err(io_err(path))?;
    let csv_path = path.with_extension("csv");
    write_study_csv(&csv_path, rows, comments)?;
    Ok(csv_path)
}
