//! Small self-contained SVG charts.

use std::fmt::Write;

const W: f64 = 640.0;
const H: f64 = 400.0;
const M: f64 = 56.0;
const COLORS: [&str; 4] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd"];

pub struct Series<'a> {
    pub label: &'a str,
    pub points: Vec<[f64; 2]>,
    pub dashed: bool,
}

fn header(out: &mut String, title: &str, stamp: &str, width: f64, height: f64) {
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}">"#
    );
    let _ = writeln!(out, "<!-- {stamp} -->");
    let _ = writeln!(out, "<desc>{stamp}</desc>");
    let _ = writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        out,
        r#"<text x="{}" y="20" font-family="sans-serif" font-size="14" text-anchor="middle">{}</text>"#,
        width / 2.0,
        escape(title)
    );
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn range(vals: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = vals
        .filter(|v| v.is_finite())
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
    if !lo.is_finite() {
        return (0.0, 1.0);
    }
    if hi - lo < 1e-300 {
        return (lo - 0.5, hi + 0.5);
    }
    (lo, hi)
}

fn axes(out: &mut String, x: (f64, f64), y: (f64, f64), xlabel: &str, ylabel: &str) {
    let _ = writeln!(
        out,
        r#"<rect x="{M}" y="{M}" width="{}" height="{}" fill="none" stroke="black"/>"#,
        W - 2.0 * M,
        H - 2.0 * M
    );
    for (v, anchor, px, py) in [
        (x.0, "start", M, H - M + 16.0),
        (x.1, "end", W - M, H - M + 16.0),
        (y.0, "end", M - 4.0, H - M),
        (y.1, "end", M - 4.0, M + 10.0),
    ] {
        let _ = writeln!(
            out,
            r#"<text x="{px}" y="{py}" font-family="sans-serif" font-size="11" text-anchor="{anchor}">{v:.3e}</text>"#
        );
    }
    let _ = writeln!(
        out,
        r#"<text x="{}" y="{}" font-family="sans-serif" font-size="12" text-anchor="middle">{}</text>"#,
        W / 2.0,
        H - 12.0,
        escape(xlabel)
    );
    let _ = writeln!(
        out,
        r#"<text x="14" y="{}" font-family="sans-serif" font-size="12" text-anchor="middle" transform="rotate(-90 14 {})">{}</text>"#,
        H / 2.0,
        H / 2.0,
        escape(ylabel)
    );
}

/// Line chart of several series on shared axes.
pub fn line_chart(title: &str, stamp: &str, xlabel: &str, ylabel: &str, series: &[Series]) -> String {
    let mut out = String::new();
    header(&mut out, title, stamp, W, H);
    let xr = range(series.iter().flat_map(|s| s.points.iter().map(|p| p[0])));
    let yr = range(series.iter().flat_map(|s| s.points.iter().map(|p| p[1])));
    axes(&mut out, xr, yr, xlabel, ylabel);
    let sx = |x: f64| M + (x - xr.0) / (xr.1 - xr.0) * (W - 2.0 * M);
    let sy = |y: f64| H - M - (y - yr.0) / (yr.1 - yr.0) * (H - 2.0 * M);
    for (i, s) in series.iter().enumerate() {
        let color = COLORS[i % COLORS.len()];
        let pts: Vec<String> = s
            .points
            .iter()
            .filter(|p| p[0].is_finite() && p[1].is_finite())
            .map(|p| format!("{:.2},{:.2}", sx(p[0]), sy(p[1])))
            .collect();
        let dash = if s.dashed { r#" stroke-dasharray="6 4""# } else { "" };
        let _ = writeln!(
            out,
            r#"<polyline fill="none" stroke="{color}" stroke-width="1.5"{dash} points="{}"/>"#,
            pts.join(" ")
        );
        let _ = writeln!(
            out,
            r#"<text x="{}" y="{}" font-family="sans-serif" font-size="11" fill="{color}">{}</text>"#,
            W - M - 120.0,
            M + 16.0 + 14.0 * i as f64,
            escape(s.label)
        );
    }
    out.push_str("</svg>\n");
    out
}

/// Bar chart of `log10` values.
pub fn log_bars(title: &str, stamp: &str, ylabel: &str, bars: &[(String, f64)]) -> String {
    let mut out = String::new();
    header(&mut out, title, stamp, W, H);
    let logs: Vec<f64> = bars.iter().map(|b| b.1.abs().max(1e-300).log10().max(-18.0)).collect();
    let lo = logs.iter().cloned().fold(0.0, f64::min).floor();
    let hi = logs.iter().cloned().fold(lo + 1.0, f64::max).ceil();
    axes(&mut out, (0.0, bars.len() as f64), (lo, hi), "", ylabel);
    let n = bars.len().max(1) as f64;
    let bw = (W - 2.0 * M) / n;
    let sy = |y: f64| H - M - (y - lo) / (hi - lo) * (H - 2.0 * M);
    for (i, ((name, _), l)) in bars.iter().zip(&logs).enumerate() {
        let x = M + bw * i as f64 + 0.1 * bw;
        let top = sy(*l);
        let _ = writeln!(
            out,
            r#"<rect x="{x:.2}" y="{top:.2}" width="{:.2}" height="{:.2}" fill="{}"/>"#,
            0.8 * bw,
            (H - M - top).max(0.0),
            COLORS[0]
        );
        let cx = x + 0.4 * bw;
        let cy = H - M + 28.0;
        let _ = writeln!(
            out,
            r#"<text x="{cx:.2}" y="{cy:.2}" font-family="sans-serif" font-size="9" text-anchor="end" transform="rotate(-35 {cx:.2} {cy:.2})">{}</text>"#,
            escape(name)
        );
    }
    out.push_str("</svg>\n");
    out
}

/// Side-by-side heat maps of row-major grids sharing one color scale.
pub fn heatmaps(title: &str, stamp: &str, panels: &[(&str, &[f64])], nx: usize, ny: usize) -> String {
    let mut out = String::new();
    let pw = 300.0;
    let ph = pw * ny as f64 / nx as f64;
    let width = 20.0 + panels.len() as f64 * (pw + 20.0);
    let height = ph + 80.0;
    header(&mut out, title, stamp, width, height);
    let (lo, hi) = range(panels.iter().flat_map(|p| p.1.iter().cloned()));
    let (cw, ch) = (pw / nx as f64, ph / ny as f64);
    for (k, (label, vals)) in panels.iter().enumerate() {
        let x0 = 20.0 + k as f64 * (pw + 20.0);
        let y0 = 40.0;
        for j in 0..ny {
            for i in 0..nx {
                let v = vals[j * nx + i];
                let t = ((v - lo) / (hi - lo)).clamp(0.0, 1.0);
                let _ = writeln!(
                    out,
                    r#"<rect x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="{}"/>"#,
                    x0 + cw * i as f64,
                    y0 + ph - ch * (j + 1) as f64,
                    cw + 0.05,
                    ch + 0.05,
                    ramp(t)
                );
            }
        }
        let _ = writeln!(
            out,
            r#"<text x="{}" y="{}" font-family="sans-serif" font-size="12" text-anchor="middle">{}</text>"#,
            x0 + pw / 2.0,
            y0 + ph + 18.0,
            escape(label)
        );
    }
    let _ = writeln!(
        out,
        r#"<text x="20" y="{}" font-family="sans-serif" font-size="11">color range [{lo:.3e}, {hi:.3e}]</text>"#,
        height - 10.0
    );
    out.push_str("</svg>\n");
    out
}

/// Blue to yellow to red.
fn ramp(t: f64) -> String {
    let (r, g, b) = if t < 0.5 {
        let s = t / 0.5;
        (40.0 + s * 215.0, 70.0 + s * 160.0, 200.0 - s * 150.0)
    } else {
        let s = (t - 0.5) / 0.5;
        (255.0, 230.0 - s * 190.0, 50.0 - s * 20.0)
    };
    format!("#{:02x}{:02x}{:02x}", r as u8, g as u8, b as u8)
}
