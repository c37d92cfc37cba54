use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use super::metrics::read_metrics_csv;
use super::train::MetricRow;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum XAxis {
    Iterations,
    Executions,
}

impl FromStr for XAxis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "iterations" => Ok(XAxis::Iterations),
            "executions" => Ok(XAxis::Executions),
            _ => Err(Error::InvalidArgument(format!(
                "x axis must be iterations or executions, got {s:?}"
            ))),
        }
    }
}

impl XAxis {
    fn label(&self) -> &'static str {
        match self {
            XAxis::Iterations => "iteration",
            XAxis::Executions => "circuit executions",
        }
    }

    fn value(&self, r: &MetricRow) -> f64 {
        match self {
            XAxis::Iterations => r.iteration as f64,
            XAxis::Executions => r.executions as f64,
        }
    }
}

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 440.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 180.0;
const TOP: f64 = 30.0;
const BOTTOM: f64 = 60.0;
const PALETTE: [&str; 8] = [
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f",
];

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

fn span(lo: f64, hi: f64) -> (f64, f64) {
    if hi > lo {
        (lo, hi)
    } else {
        (lo - 0.5, lo + 0.5)
    }
}

/// Static SVG line chart of loss against the chosen axis, one polyline per series.
pub fn render_svg(series: &[(String, Vec<MetricRow>)], x: XAxis) -> Result<String> {
    if series.is_empty() {
        return Err(Error::InvalidArgument("nothing to plot".into()));
    }
    let points = || series.iter().flat_map(|(_, rows)| rows.iter());
    let (x_lo, x_hi) = span(
        points().map(|r| x.value(r)).fold(f64::INFINITY, f64::min),
        points().map(|r| x.value(r)).fold(f64::NEG_INFINITY, f64::max),
    );
    let (y_lo, y_hi) = span(
        points().map(|r| r.loss).fold(f64::INFINITY, f64::min),
        points().map(|r| r.loss).fold(f64::NEG_INFINITY, f64::max),
    );
    let (x_lo, x_hi, y_lo, y_hi) = if x_lo.is_finite() {
        (x_lo, x_hi, y_lo, y_hi)
    } else {
        (0.0, 1.0, 0.0, 1.0)
    };
    let pw = WIDTH - LEFT - RIGHT;
    let ph = HEIGHT - TOP - BOTTOM;
    let sx = |v: f64| LEFT + (v - x_lo) / (x_hi - x_lo) * pw;
    let sy = |v: f64| TOP + ph - (v - y_lo) / (y_hi - y_lo) * ph;

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<g id="axes" stroke="black" stroke-width="1"><line x1="{LEFT}" y1="{b:.2}" x2="{r:.2}" y2="{b:.2}"/><line x1="{LEFT}" y1="{TOP}" x2="{LEFT}" y2="{b:.2}"/></g>"#,
        b = TOP + ph,
        r = LEFT + pw
    );
    for i in 0..=4 {
        let f = i as f64 / 4.0;
        let xv = x_lo + f * (x_hi - x_lo);
        let yv = y_lo + f * (y_hi - y_lo);
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
            sx(xv),
            TOP + ph + 18.0,
            tick(xv)
        );
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"#,
            LEFT - 6.0,
            sy(yv) + 4.0,
            tick(yv)
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
        LEFT + pw / 2.0,
        HEIGHT - 15.0,
        x.label()
    );
    let _ = writeln!(
        s,
        r#"<text x="18" y="{:.2}" text-anchor="middle" transform="rotate(-90 18 {:.2})">training loss</text>"#,
        TOP + ph / 2.0,
        TOP + ph / 2.0
    );
    for (k, (name, rows)) in series.iter().enumerate() {
        let colour = PALETTE[k % PALETTE.len()];
        let pts: Vec<String> = rows
            .iter()
            .map(|r| format!("{:.2},{:.2}", sx(x.value(r)), sy(r.loss)))
            .collect();
        let _ = writeln!(
            s,
            r#"<polyline fill="none" stroke="{colour}" stroke-width="1.5" points="{}"/>"#,
            pts.join(" ")
        );
        let ly = TOP + 10.0 + 20.0 * k as f64;
        let lx = LEFT + pw + 15.0;
        let _ = writeln!(
            s,
            r#"<g class="legend"><line x1="{lx:.2}" y1="{ly:.2}" x2="{:.2}" y2="{ly:.2}" stroke="{colour}" stroke-width="2"/><text x="{:.2}" y="{:.2}">{}</text></g>"#,
            lx + 20.0,
            lx + 26.0,
            ly + 4.0,
            escape(name)
        );
    }
    s.push_str("</svg>\n");
    Ok(s)
}

fn tick(v: f64) -> String {
    if v.abs() >= 1000.0 || v.fract() == 0.0 {
        format!("{v:.0}")
    } else {
        format!("{v:.3}")
    }
}

/// Reads each metrics CSV (legend entry = file stem) and writes the chart.
pub fn render_loss_svg(csv_paths: &[&Path], x: XAxis, out: &Path) -> Result<()> {
    if csv_paths.is_empty() {
        return Err(Error::InvalidArgument("need at least one CSV file".into()));
    }
    let series = csv_paths
        .iter()
        .map(|p| {
            let name = p
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| p.display().to_string());
            Ok((name, read_metrics_csv(p)?))
        })
        .collect::<Result<Vec<_>>>()?;
    std::fs::write(out, render_svg(&series, x)?)?;
    Ok(())
}
