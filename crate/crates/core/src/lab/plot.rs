//! Hand-written SVG: log-log scatter with optional fitted line, and a gap chart.
//! Coordinates are printed with fixed precision so output is byte-stable.

use std::fmt::Write as _;
use std::path::Path;

use super::fit::PowerLawFit;
use super::sweep::GapRow;
use super::table::Table;
use crate::error::{Error, Result};

const W: f64 = 640.0;
const H: f64 = 480.0;
const LEFT: f64 = 72.0;
const RIGHT: f64 = 24.0;
const TOP: f64 = 24.0;
const MAIN_BOTTOM: f64 = 340.0;
const RES_TOP: f64 = 380.0;
const RES_BOTTOM: f64 = 440.0;
/// The residual strip spans `±RES_SPAN` decades.
const RES_SPAN: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlotSummary {
    pub points: usize,
    /// `max |log₁₀(y / fit(x))|`, when a fit was drawn.
    pub max_abs_log_residual: Option<f64>,
}

pub fn emit_plot(csv_path: &Path, x_col: &str, y_col: &str, fit: Option<&PowerLawFit>, out: &Path) -> Result<PlotSummary> {
    let t = Table::read(csv_path)?;
    let xs = t.column(x_col)?;
    let ys = t.column(y_col)?;
    let (svg, summary) = render_loglog(&xs, &ys, x_col, y_col, fit)?;
    std::fs::write(out, svg)?;
    Ok(summary)
}

struct Axis {
    lo: f64,
    hi: f64,
    px_lo: f64,
    px_hi: f64,
}

impl Axis {
    fn decades(values: &[f64], px_lo: f64, px_hi: f64) -> Self {
        let (mut lo, mut hi) = values
            .iter()
            .map(|v| v.log10())
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
        lo = lo.floor();
        hi = hi.ceil();
        if hi <= lo {
            hi = lo + 1.0;
        }
        Self { lo, hi, px_lo, px_hi }
    }

    fn map(&self, v: f64) -> f64 {
        self.px_lo + (v - self.lo) / (self.hi - self.lo) * (self.px_hi - self.px_lo)
    }
}

fn header(s: &mut String) {
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="11">"#
    );
    let _ = writeln!(s, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
}

pub fn render_loglog(
    xs: &[f64],
    ys: &[f64],
    x_label: &str,
    y_label: &str,
    fit: Option<&PowerLawFit>,
) -> Result<(String, PlotSummary)> {
    if xs.iter().chain(ys).any(|v| !(*v > 0.0) || !v.is_finite()) {
        return Err(Error::NonPositiveData);
    }
    let mut s = String::new();
    header(&mut s);
    if xs.is_empty() {
        let _ = writeln!(s, r#"<text x="{:.2}" y="{:.2}">no data</text>"#, W / 2.0, H / 2.0);
        s.push_str("</svg>\n");
        return Ok((s, PlotSummary { points: 0, max_abs_log_residual: None }));
    }
    let ax = Axis::decades(xs, LEFT, W - RIGHT);
    let ay = Axis::decades(ys, MAIN_BOTTOM, TOP);
    let _ = writeln!(
        s,
        r#"<rect x="{LEFT:.2}" y="{TOP:.2}" width="{:.2}" height="{:.2}" fill="none" stroke="black"/>"#,
        W - RIGHT - LEFT,
        MAIN_BOTTOM - TOP
    );
    for d in (ax.lo as i64)..=(ax.hi as i64) {
        let px = ax.map(d as f64);
        let _ = writeln!(
            s,
            r##"<line x1="{px:.2}" y1="{TOP:.2}" x2="{px:.2}" y2="{MAIN_BOTTOM:.2}" stroke="#ddd"/><text x="{px:.2}" y="{:.2}" text-anchor="middle">1e{d}</text>"##,
            MAIN_BOTTOM + 14.0
        );
    }
    for d in (ay.lo as i64)..=(ay.hi as i64) {
        let py = ay.map(d as f64);
        let _ = writeln!(
            s,
            r##"<line x1="{LEFT:.2}" y1="{py:.2}" x2="{:.2}" y2="{py:.2}" stroke="#ddd"/><text x="{:.2}" y="{:.2}" text-anchor="end">1e{d}</text>"##,
            W - RIGHT,
            LEFT - 6.0,
            py + 4.0
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{x_label}</text>"#,
        (LEFT + W - RIGHT) / 2.0,
        H - 8.0
    );
    let _ = writeln!(
        s,
        r#"<text x="14" y="{:.2}" transform="rotate(-90 14 {:.2})" text-anchor="middle">{y_label}</text>"#,
        (TOP + MAIN_BOTTOM) / 2.0,
        (TOP + MAIN_BOTTOM) / 2.0
    );
    for (x, y) in xs.iter().zip(ys) {
        let _ = writeln!(
            s,
            r##"<circle cx="{:.2}" cy="{:.2}" r="3.5" fill="#1f4e99"/>"##,
            ax.map(x.log10()),
            ay.map(y.log10())
        );
    }
    let mut max_res = None;
    if let Some(f) = fit {
        let line_y = |lx: f64| (f.log_c + f.exponent * lx * std::f64::consts::LN_10) / std::f64::consts::LN_10;
        let _ = writeln!(
            s,
            r##"<clipPath id="main"><rect x="{LEFT:.2}" y="{TOP:.2}" width="{:.2}" height="{:.2}"/></clipPath>"##,
            W - RIGHT - LEFT,
            MAIN_BOTTOM - TOP
        );
        let _ = writeln!(
            s,
            r##"<line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="#c0392b" stroke-width="1.5" clip-path="url(#main)"/>"##,
            ax.map(ax.lo),
            ay.map(line_y(ax.lo)),
            ax.map(ax.hi),
            ay.map(line_y(ax.hi))
        );
        let _ = writeln!(
            s,
            r##"<text x="{:.2}" y="{:.2}" fill="#c0392b">slope {:.4}, C {:.4e}, r2 {:.4}</text>"##,
            LEFT + 8.0,
            TOP + 16.0,
            f.exponent,
            f.constant(),
            f.r_squared
        );
        let mid = (RES_TOP + RES_BOTTOM) / 2.0;
        let _ = writeln!(
            s,
            r#"<rect x="{LEFT:.2}" y="{RES_TOP:.2}" width="{:.2}" height="{:.2}" fill="none" stroke="black"/>"#,
            W - RIGHT - LEFT,
            RES_BOTTOM - RES_TOP
        );
        let _ = writeln!(
            s,
            r##"<line x1="{LEFT:.2}" y1="{mid:.2}" x2="{:.2}" y2="{mid:.2}" stroke="#c0392b"/><text x="{:.2}" y="{:.2}" text-anchor="end">resid</text>"##,
            W - RIGHT,
            LEFT - 6.0,
            mid + 4.0
        );
        let mut worst: f64 = 0.0;
        for (x, y) in xs.iter().zip(ys) {
            let r = y.log10() - line_y(x.log10());
            worst = worst.max(r.abs());
            let py = mid - r.clamp(-RES_SPAN, RES_SPAN) / RES_SPAN * (RES_BOTTOM - RES_TOP) / 2.0;
            let _ = writeln!(
                s,
                r##"<rect x="{:.2}" y="{:.2}" width="5" height="5" fill="#1f4e99"/>"##,
                ax.map(x.log10()) - 2.5,
                py - 2.5
            );
        }
        max_res = Some(worst);
    }
    s.push_str("</svg>\n");
    Ok((
        s,
        PlotSummary {
            points: xs.len(),
            max_abs_log_residual: max_res,
        },
    ))
}

/// One column per δ, one bar per detected gap of `K_δ`.
pub fn emit_gap_plot(rows: &[GapRow]) -> String {
    let mut s = String::new();
    header(&mut s);
    let (mut lo, mut hi) = rows
        .iter()
        .flat_map(|r| r.gap_edges.iter())
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &(l, h)| (a.min(l), b.max(h)));
    if !(lo < hi) {
        lo = -1.0;
        hi = 1.0;
    }
    let pad = 0.05 * (hi - lo);
    let (lo, hi) = (lo - pad, hi + pad);
    let bottom = RES_BOTTOM;
    let ey = |e: f64| bottom - (e - lo) / (hi - lo) * (bottom - TOP);
    let _ = writeln!(
        s,
        r#"<rect x="{LEFT:.2}" y="{TOP:.2}" width="{:.2}" height="{:.2}" fill="none" stroke="black"/>"#,
        W - RIGHT - LEFT,
        bottom - TOP
    );
    for k in 0..=4 {
        let e = lo + (hi - lo) * k as f64 / 4.0;
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{e:.3}</text>"#,
            LEFT - 6.0,
            ey(e) + 4.0
        );
    }
    let n = rows.len().max(1) as f64;
    let col = (W - RIGHT - LEFT) / n;
    for (i, r) in rows.iter().enumerate() {
        let cx = LEFT + col * (i as f64 + 0.5);
        let _ = writeln!(
            s,
            r#"<text x="{cx:.2}" y="{:.2}" text-anchor="middle">{:.4}</text>"#,
            bottom + 14.0,
            r.delta
        );
        for &(l, h) in &r.gap_edges {
            let _ = writeln!(
                s,
                r##"<rect x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="#1f4e99" fill-opacity="0.7"/>"##,
                cx - 0.3 * col,
                ey(h),
                0.6 * col,
                (ey(l) - ey(h)).max(0.5)
            );
        }
    }
    let _ = writeln!(
        s,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">delta (bars: spectral gaps)</text>"#,
        (LEFT + W - RIGHT) / 2.0,
        H - 8.0
    );
    s.push_str("</svg>\n");
    s
}
