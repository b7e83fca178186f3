//! Minimal deterministic SVG line plots.

use std::fmt::Write as _;
use std::path::Path;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum SvgError {
    #[error("no series to plot")]
    Empty,
    #[error("non-finite value in series '{series}' at index {index}")]
    NonFiniteValue { series: String, index: usize },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Axes {
    pub x_label: String,
    pub y_label: String,
    pub x_log: bool,
    pub y_log: bool,
    pub title: String,
}

const W: f64 = 640.0;
const H: f64 = 420.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 150.0;
const TOP: f64 = 30.0;
const BOTTOM: f64 = 50.0;
const COLORS: [&str; 8] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#e377c2", "#17becf"];

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

fn span(lo: f64, hi: f64) -> (f64, f64) {
    if hi > lo {
        (lo, hi)
    } else {
        (lo - 0.5, hi + 0.5)
    }
}

/// Renders the plot. Values on a log axis must be positive.
pub fn render_svg(series: &[Series], axes: &Axes, comment: &str) -> Result<String, SvgError> {
    if series.is_empty() {
        return Err(SvgError::Empty);
    }
    let tx = |v: f64| if axes.x_log { v.log10() } else { v };
    let ty = |v: f64| if axes.y_log { v.log10() } else { v };
    let mut mapped = Vec::with_capacity(series.len());
    let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for s in series {
        let mut pts = Vec::with_capacity(s.points.len());
        for (k, &(x, y)) in s.points.iter().enumerate() {
            let (a, b) = (tx(x), ty(y));
            if !a.is_finite() || !b.is_finite() {
                return Err(SvgError::NonFiniteValue { series: s.label.clone(), index: k });
            }
            x0 = x0.min(a);
            x1 = x1.max(a);
            y0 = y0.min(b);
            y1 = y1.max(b);
            pts.push((a, b));
        }
        mapped.push(pts);
    }
    if !x0.is_finite() {
        (x0, x1, y0, y1) = (0.0, 1.0, 0.0, 1.0);
    }
    let (x0, x1) = span(x0, x1);
    let (y0, y1) = span(y0, y1);
    let pw = W - LEFT - RIGHT;
    let ph = H - TOP - BOTTOM;
    let px = |a: f64| LEFT + (a - x0) / (x1 - x0) * pw;
    let py = |b: f64| TOP + (y1 - b) / (y1 - y0) * ph;

    let mut out = String::new();
    let _ = writeln!(out, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}">"#);
    if !comment.is_empty() {
        let _ = writeln!(out, "<!-- {} -->", comment.replace("--", "- -"));
    }
    let _ = writeln!(out, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    if !axes.title.is_empty() {
        let _ = writeln!(out, r#"<text x="{}" y="18" text-anchor="middle" font-size="14">{}</text>"#, LEFT + pw / 2.0, escape(&axes.title));
    }
    let _ = writeln!(
        out,
        r#"<rect x="{LEFT}" y="{TOP}" width="{pw}" height="{ph}" fill="none" stroke="black"/>"#
    );
    for k in 0..=4 {
        let f = k as f64 / 4.0;
        let (a, b) = (x0 + f * (x1 - x0), y0 + f * (y1 - y0));
        let xl = if axes.x_log { format!("1e{a:.2}") } else { format!("{a:.3}") };
        let yl = if axes.y_log { format!("1e{b:.2}") } else { format!("{b:.3}") };
        let _ = writeln!(out, r#"<line x1="{0:.2}" y1="{1}" x2="{0:.2}" y2="{2}" stroke="black"/>"#, px(a), TOP + ph, TOP + ph + 5.0);
        let _ = writeln!(out, r#"<text x="{:.2}" y="{}" text-anchor="middle" font-size="11">{xl}</text>"#, px(a), TOP + ph + 18.0);
        let _ = writeln!(out, r#"<line x1="{0}" y1="{1:.2}" x2="{2}" y2="{1:.2}" stroke="black"/>"#, LEFT - 5.0, py(b), LEFT);
        let _ = writeln!(out, r#"<text x="{}" y="{:.2}" text-anchor="end" font-size="11">{yl}</text>"#, LEFT - 8.0, py(b) + 4.0);
    }
    let _ = writeln!(out, r#"<text x="{}" y="{}" text-anchor="middle" font-size="12">{}</text>"#, LEFT + pw / 2.0, H - 10.0, escape(&axes.x_label));
    let _ = writeln!(
        out,
        r#"<text x="15" y="{0}" text-anchor="middle" font-size="12" transform="rotate(-90 15 {0})">{1}</text>"#,
        TOP + ph / 2.0,
        escape(&axes.y_label)
    );
    for (k, (s, pts)) in series.iter().zip(&mapped).enumerate() {
        let color = COLORS[k % COLORS.len()];
        let coords: Vec<String> = pts.iter().map(|&(a, b)| format!("{:.2},{:.2}", px(a), py(b))).collect();
        let _ = writeln!(out, r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#, coords.join(" "));
        let ly = TOP + 14.0 + 16.0 * k as f64;
        let _ = writeln!(out, r#"<line x1="{0}" y1="{1}" x2="{2}" y2="{1}" stroke="{color}" stroke-width="2"/>"#, W - RIGHT + 10.0, ly - 4.0, W - RIGHT + 30.0);
        let _ = writeln!(out, r#"<text x="{}" y="{ly}" font-size="11">{}</text>"#, W - RIGHT + 35.0, escape(&s.label));
    }
    out.push_str("</svg>\n");
    Ok(out)
}

pub fn emit_svg(series: &[Series], axes: &Axes, comment: &str, path: &Path) -> Result<(), SvgError> {
    let s = render_svg(series, axes, comment)?;
    std::fs::write(path, s)?;
    Ok(())
}
