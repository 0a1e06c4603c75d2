//! Self-contained SVG line charts of sweep CSV files.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use thiserror::Error;

use crate::config::SweepVariable;
use crate::sweep::CSV_HEADER;

#[derive(Debug, Error)]
pub enum PlotError {
    #[error("{path}: {message}")]
    Io { path: String, message: String },
    #[error("schema mismatch: {0}")]
    Schema(String),
}

/// One `(value, mean)` series per scheme, in first-appearance order.
#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub scheme: String,
    pub points: Vec<(f64, f64)>,
}

const COLORS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"];
const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 480.0;
const MARGIN: (f64, f64, f64, f64) = (80.0, 30.0, 40.0, 60.0); // left, right, top, bottom

pub fn read_series(csv_text: &str) -> Result<(String, Vec<Series>), PlotError> {
    let mut reader = csv::ReaderBuilder::new().from_reader(csv_text.as_bytes());
    let header = reader.headers().map_err(|e| PlotError::Schema(e.to_string()))?.clone();
    if header.iter().collect::<Vec<_>>() != CSV_HEADER {
        return Err(PlotError::Schema(format!("unexpected header `{}`", header.iter().collect::<Vec<_>>().join(","))));
    }
    let mut variable = String::new();
    let mut order: Vec<String> = Vec::new();
    let mut by_scheme: BTreeMap<String, Vec<(f64, f64)>> = BTreeMap::new();
    for (i, rec) in reader.records().enumerate() {
        let rec = rec.map_err(|e| PlotError::Schema(format!("row {}: {e}", i + 1)))?;
        let num = |j: usize| -> Result<f64, PlotError> {
            rec[j].parse::<f64>().map_err(|_| PlotError::Schema(format!("row {}: `{}` is not a number", i + 1, &rec[j])))
        };
        if variable.is_empty() {
            variable = rec[0].to_string();
        } else if variable != rec[0] {
            return Err(PlotError::Schema(format!("row {}: mixed sweep variables", i + 1)));
        }
        let scheme = rec[2].to_string();
        if !by_scheme.contains_key(&scheme) {
            order.push(scheme.clone());
        }
        by_scheme.entry(scheme).or_default().push((num(1)?, num(4)?));
    }
    let series = order
        .into_iter()
        .map(|s| {
            let mut points = by_scheme.remove(&s).unwrap_or_default();
            points.sort_by(|a, b| a.0.total_cmp(&b.0));
            Series { scheme: s, points }
        })
        .collect();
    Ok((variable, series))
}

fn nice_ticks(lo: f64, hi: f64, target: usize) -> Vec<f64> {
    let span = (hi - lo).max(1e-12);
    let raw = span / target as f64;
    let mag = 10f64.powf(raw.log10().floor());
    let step = [1.0, 2.0, 2.5, 5.0, 10.0].iter().map(|m| m * mag).find(|s| span / s <= target as f64).unwrap_or(10.0 * mag);
    let first = (lo / step).ceil() * step;
    (0..).map(|i| first + i as f64 * step).take_while(|t| *t <= hi + 1e-9 * step).collect()
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

/// Renders the series as an SVG document.
pub fn render_svg(variable: &str, series: &[Series]) -> String {
    let finite = |p: &&(f64, f64)| p.0.is_finite() && p.1.is_finite();
    let pts: Vec<(f64, f64)> = series.iter().flat_map(|s| s.points.iter().filter(finite).copied()).collect();
    let (mut x0, mut x1) = pts.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), p| (a.min(p.0), b.max(p.0)));
    let (mut y0, mut y1) = pts.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), p| (a.min(p.1), b.max(p.1)));
    if pts.is_empty() {
        (x0, x1, y0, y1) = (0.0, 1.0, 0.0, 1.0);
    }
    if x1 <= x0 {
        x1 = x0 + 1.0;
    }
    y0 = y0.min(0.0);
    if y1 <= y0 {
        y1 = y0 + 1.0;
    }
    y1 += 0.05 * (y1 - y0);
    let (ml, mr, mt, mb) = MARGIN;
    let pw = WIDTH - ml - mr;
    let ph = HEIGHT - mt - mb;
    let sx = |x: f64| ml + (x - x0) / (x1 - x0) * pw;
    let sy = |y: f64| mt + ph - (y - y0) / (y1 - y0) * ph;
    let label = SweepVariable::parse(variable).map_or(variable.to_string(), |v| v.label().to_string());

    let mut svg = String::new();
    let _ = writeln!(svg, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(svg, r#"<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
    let _ = writeln!(
        svg,
        r#"<rect x="{ml}" y="{mt}" width="{pw}" height="{ph}" fill="none" stroke="black" stroke-width="1"/>"#
    );
    for t in nice_ticks(x0, x1, 8) {
        let x = sx(t);
        let _ = writeln!(svg, r##"<line x1="{x:.2}" y1="{:.2}" x2="{x:.2}" y2="{:.2}" stroke="#ccc"/>"##, mt, mt + ph);
        let _ = writeln!(svg, r#"<text x="{x:.2}" y="{:.2}" text-anchor="middle">{}</text>"#, mt + ph + 16.0, t);
    }
    for t in nice_ticks(y0, y1, 8) {
        let y = sy(t);
        let _ = writeln!(svg, r##"<line x1="{ml}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="#ccc"/>"##, ml + pw);
        let _ = writeln!(svg, r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"#, ml - 6.0, y + 4.0, t);
    }
    let _ = writeln!(
        svg,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
        ml + pw / 2.0,
        HEIGHT - 15.0,
        escape(&label)
    );
    let _ = writeln!(
        svg,
        r#"<text x="18" y="{:.2}" text-anchor="middle" transform="rotate(-90 18 {:.2})">Average sum-rate (bits/s/Hz)</text>"#,
        mt + ph / 2.0,
        mt + ph / 2.0
    );
    for (i, s) in series.iter().enumerate() {
        let color = COLORS[i % COLORS.len()];
        let points: Vec<String> =
            s.points.iter().filter(finite).map(|(x, y)| format!("{:.2},{:.2}", sx(*x), sy(*y))).collect();
        let _ = writeln!(
            svg,
            r#"<polyline fill="none" stroke="{color}" stroke-width="2" points="{}"><title>{}</title></polyline>"#,
            points.join(" "),
            escape(&s.scheme)
        );
        let ly = mt + 16.0 + 18.0 * i as f64;
        let lx = ml + pw - 190.0;
        let _ = writeln!(
            svg,
            r#"<line x1="{lx:.2}" y1="{ly:.2}" x2="{:.2}" y2="{ly:.2}" stroke="{color}" stroke-width="2"/>"#,
            lx + 24.0
        );
        let _ = writeln!(svg, r#"<text x="{:.2}" y="{:.2}">{}</text>"#, lx + 30.0, ly + 4.0, escape(&s.scheme));
    }
    svg.push_str("</svg>\n");
    svg
}

/// Reads a sweep CSV and writes its chart.
pub fn plot_svg(csv_path: &Path, out_path: &Path) -> Result<(), PlotError> {
    let io = |p: &Path, e: std::io::Error| PlotError::Io { path: p.display().to_string(), message: e.to_string() };
    let text = std::fs::read_to_string(csv_path).map_err(|e| io(csv_path, e))?;
    let (variable, series) = read_series(&text)?;
    std::fs::write(out_path, render_svg(&variable, &series)).map_err(|e| io(out_path, e))
}
