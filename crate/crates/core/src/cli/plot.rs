use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::harness::{read_csv, CsvRow};
use crate::receivers::ReceiverKind;
use crate::{Error, Result};

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 480.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 180.0;
const TOP: f64 = 30.0;
const BOTTOM: f64 = 50.0;
const COLORS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"];
const DASHES: [&str; 3] = ["", "6,3", "2,3"];

/// One curve: aggregate SER of a receiver at a blocklength.
#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub receiver: ReceiverKind,
    pub n: usize,
    pub label: String,
    /// `(measured SNR dB, SER)` in file order.
    pub points: Vec<(f64, f64)>,
}

/// Groups the `user = all` rows by `(receiver, n, model)`.
pub fn collect_series(rows: &[CsvRow]) -> Vec<Series> {
    let mut out: Vec<Series> = Vec::new();
    let models: Vec<String> = rows.iter().map(|r| model_label(r)).collect();
    let several_models = models.iter().any(|m| *m != models[0]);
    for (row, model) in rows.iter().zip(&models).filter(|(r, _)| r.user == "all") {
        let mut label = format!("{}, n={}", row.receiver.name(), row.n);
        if several_models {
            label = format!("{label}, {model}");
        }
        match out.iter_mut().find(|s| s.label == label) {
            Some(s) => s.points.push((row.measured_snr_db, row.ser)),
            None => out.push(Series {
                receiver: row.receiver,
                n: row.n,
                label,
                points: vec![(row.measured_snr_db, row.ser)],
            }),
        }
    }
    out
}

fn model_label(r: &CsvRow) -> String {
    if r.channel_model == "trunc" {
        format!("[{}, {}]", r.lo, r.hi)
    } else {
        r.channel_model.clone()
    }
}

fn check_rows(rows: &[CsvRow]) -> Result<()> {
    if rows.is_empty() {
        return Err(Error::SchemaMismatch { row: 1, message: "no data rows".into() });
    }
    for (i, r) in rows.iter().enumerate() {
        if !(0.0..=1.0).contains(&r.ser) || !r.measured_snr_db.is_finite() {
            return Err(Error::SchemaMismatch { row: i + 1, message: "SER outside [0, 1] or non-finite SNR".into() });
        }
    }
    if !rows.iter().any(|r| r.user == "all") {
        return Err(Error::SchemaMismatch { row: 1, message: "no aggregate (user = all) rows".into() });
    }
    Ok(())
}

/// Log-scale SER against measured SNR. Zero-SER points are left out of the
/// polyline since they have no place on a log axis.
pub fn render_svg(rows: &[CsvRow]) -> Result<String> {
    check_rows(rows)?;
    let series = collect_series(rows);
    let xs = series.iter().flat_map(|s| s.points.iter().map(|p| p.0));
    let (x_min, x_max) = xs.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), x| (a.min(x), b.max(x)));
    let x_lo = (x_min / 5.0).floor() * 5.0;
    let x_hi = ((x_max / 5.0).ceil() * 5.0).max(x_lo + 5.0);
    let min_pos = series
        .iter()
        .flat_map(|s| s.points.iter().map(|p| p.1))
        .filter(|&y| y > 0.0)
        .fold(1.0f64, f64::min);
    let decades_lo = (min_pos.log10().floor() as i32).min(-1);

    let plot_w = WIDTH - LEFT - RIGHT;
    let plot_h = HEIGHT - TOP - BOTTOM;
    let px = |x: f64| LEFT + (x - x_lo) / (x_hi - x_lo) * plot_w;
    let py = |y: f64| TOP + (0.0 - y.log10()) / (0.0 - decades_lo as f64) * plot_h;

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);

    // decade grid lines and labels
    for d in decades_lo..=0 {
        let y = py(10f64.powi(d));
        let _ = writeln!(
            s,
            r##"<line x1="{LEFT:.2}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="#dddddd"/>"##,
            LEFT + plot_w
        );
        let _ = writeln!(s, r#"<text x="{:.2}" y="{:.2}" text-anchor="end">1e{d}</text>"#, LEFT - 6.0, y + 4.0);
    }
    let mut x = x_lo;
    while x <= x_hi + 1e-9 {
        let xp = px(x);
        let _ = writeln!(
            s,
            r##"<line x1="{xp:.2}" y1="{TOP:.2}" x2="{xp:.2}" y2="{:.2}" stroke="#dddddd"/>"##,
            TOP + plot_h
        );
        let _ = writeln!(s, r#"<text x="{xp:.2}" y="{:.2}" text-anchor="middle">{x}</text>"#, TOP + plot_h + 18.0);
        x += 5.0;
    }
    let _ = writeln!(
        s,
        r#"<rect x="{LEFT:.2}" y="{TOP:.2}" width="{plot_w:.2}" height="{plot_h:.2}" fill="none" stroke="black"/>"#
    );
    let _ = writeln!(
        s,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">measured SNR (dB)</text>"#,
        LEFT + plot_w / 2.0,
        HEIGHT - 10.0
    );
    let _ = writeln!(
        s,
        r#"<text x="16" y="{:.2}" text-anchor="middle" transform="rotate(-90 16 {:.2})">symbol error rate</text>"#,
        TOP + plot_h / 2.0,
        TOP + plot_h / 2.0
    );

    let mut ns: Vec<usize> = series.iter().map(|s| s.n).collect();
    ns.sort_unstable();
    ns.dedup();
    for (i, ser) in series.iter().enumerate() {
        let color = COLORS[i % COLORS.len()];
        let dash = DASHES[ns.iter().position(|&n| n == ser.n).unwrap_or(0) % DASHES.len()];
        let dash_attr = if dash.is_empty() { String::new() } else { format!(r#" stroke-dasharray="{dash}""#) };
        let pts: Vec<String> = ser
            .points
            .iter()
            .filter(|p| p.1 > 0.0)
            .map(|&(x, y)| format!("{:.2},{:.2}", px(x), py(y)))
            .collect();
        if !pts.is_empty() {
            let _ = writeln!(
                s,
                r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="1.5"{dash_attr}/>"#,
                pts.join(" ")
            );
            for p in &pts {
                let (cx, cy) = p.split_once(',').expect("formatted pair");
                let _ = writeln!(s, r#"<circle cx="{cx}" cy="{cy}" r="2.5" fill="{color}"/>"#);
            }
        }
        let ly = TOP + 14.0 + 18.0 * i as f64;
        let lx = LEFT + plot_w + 12.0;
        let _ = writeln!(
            s,
            r#"<line x1="{lx:.2}" y1="{ly:.2}" x2="{:.2}" y2="{ly:.2}" stroke="{color}" stroke-width="1.5"{dash_attr}/>"#,
            lx + 24.0
        );
        let _ = writeln!(s, r#"<text x="{:.2}" y="{:.2}">{}</text>"#, lx + 30.0, ly + 4.0, ser.label);
    }
    s.push_str("</svg>\n");
    Ok(s)
}

/// Reads one or more sweep CSVs and writes the SVG plot to `out`.
pub fn emit_plot(csv_paths: &[PathBuf], out: &Path) -> Result<()> {
    let mut rows = Vec::new();
    for p in csv_paths {
        let file_rows = read_csv(p)?;
        check_rows(&file_rows).map_err(|e| match e {
            Error::SchemaMismatch { row, message } => {
                Error::SchemaMismatch { row, message: format!("{}: {message}", p.display()) }
            }
            other => other,
        })?;
        rows.extend(file_rows);
    }
    let svg = render_svg(&rows)?;
    std::fs::write(out, svg).map_err(|e| Error::io(out, e))
}
