//! SVG scatter and line plots.

use std::collections::BTreeMap;
use std::fmt::Write;

use erakit_core::era::EraProjection;

use crate::error::{Error, Result};
use crate::extract::PeakRow;

pub const PALETTE: [&str; 8] = [
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f",
];

#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub name: String,
    pub color: String,
    pub points: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlotSpec {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    /// Drawn in order, so later series sit on top.
    pub series: Vec<Series>,
    pub width: u32,
    pub height: u32,
}

const MARGIN_LEFT: f64 = 70.0;
const MARGIN_RIGHT: f64 = 160.0;
const MARGIN_TOP: f64 = 40.0;
const MARGIN_BOTTOM: f64 = 60.0;

impl PlotSpec {
    /// Groups `(source, x, y)` points into series. Colors follow sorted
    /// source order; `reference` is moved to the end so it is drawn last.
    pub fn from_sources<'a>(
        title: impl Into<String>,
        x_label: impl Into<String>,
        y_label: impl Into<String>,
        points: impl IntoIterator<Item = (&'a str, f64, f64)>,
        reference: Option<&str>,
    ) -> Self {
        let mut groups: BTreeMap<&str, Vec<(f64, f64)>> = BTreeMap::new();
        for (source, x, y) in points {
            groups.entry(source).or_default().push((x, y));
        }
        let mut series: Vec<Series> = groups
            .into_iter()
            .enumerate()
            .map(|(i, (name, points))| Series {
                name: name.into(),
                color: PALETTE[i % PALETTE.len()].into(),
                points,
            })
            .collect();
        if let Some(pos) = series
            .iter()
            .position(|s| Some(s.name.as_str()) == reference)
        {
            let r = series.remove(pos);
            series.push(r);
        }
        PlotSpec {
            title: title.into(),
            x_label: x_label.into(),
            y_label: y_label.into(),
            series,
            width: 720,
            height: 480,
        }
    }

    fn n_points(&self) -> usize {
        self.series.iter().map(|s| s.points.len()).sum()
    }
}

pub fn projection_plot(p: &EraProjection, reference: Option<&str>) -> PlotSpec {
    PlotSpec::from_sources(
        format!("{} ({})", p.label, p.kind),
        format!("PC1 ({:.1}%)", 100.0 * p.explained.0),
        format!("PC2 ({:.1}%)", 100.0 * p.explained.1),
        p.points.iter().map(|q| (q.source.as_str(), q.pc1, q.pc2)),
        reference,
    )
}

pub fn peaks_plot(title: &str, rows: &[PeakRow], reference: Option<&str>) -> PlotSpec {
    PlotSpec::from_sources(
        title,
        "Peak time (s)",
        "Peak / mean loudness",
        rows.iter().map(|r| {
            (
                r.clip.source.as_str(),
                r.metrics.peak_time_s,
                r.metrics.relative_magnitude,
            )
        }),
        reference,
    )
}

fn escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            _ => out.push(c),
        }
    }
    out
}

/// Data range padded by 5%, or by ±1 when all values coincide.
fn axis_range(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = values.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
        (lo.min(v), hi.max(v))
    });
    if hi - lo > 0.0 {
        let pad = 0.05 * (hi - lo);
        (lo - pad, hi + pad)
    } else {
        (lo - 1.0, hi + 1.0)
    }
}

struct Frame {
    x: (f64, f64),
    y: (f64, f64),
    left: f64,
    right: f64,
    top: f64,
    bottom: f64,
}

impl Frame {
    fn new(spec: &PlotSpec, x: (f64, f64), y: (f64, f64)) -> Self {
        Frame {
            x,
            y,
            left: MARGIN_LEFT,
            right: spec.width as f64 - MARGIN_RIGHT,
            top: MARGIN_TOP,
            bottom: spec.height as f64 - MARGIN_BOTTOM,
        }
    }

    fn px(&self, x: f64) -> f64 {
        self.left + (x - self.x.0) / (self.x.1 - self.x.0) * (self.right - self.left)
    }

    fn py(&self, y: f64) -> f64 {
        self.bottom - (y - self.y.0) / (self.y.1 - self.y.0) * (self.bottom - self.top)
    }
}

fn open(svg: &mut String, spec: &PlotSpec, frame: &Frame) {
    let (w, h) = (spec.width, spec.height);
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(
        svg,
        r#"<rect x="0" y="0" width="{w}" height="{h}" fill="white"/>"#
    );
    let _ = writeln!(
        svg,
        r#"<text x="{:.2}" y="24" text-anchor="middle" font-size="15">{}</text>"#,
        (frame.left + frame.right) / 2.0,
        escape(&spec.title)
    );
    let _ = writeln!(
        svg,
        r#"<rect x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="none" stroke="black"/>"#,
        frame.left,
        frame.top,
        frame.right - frame.left,
        frame.bottom - frame.top
    );
    for (v, anchor) in [(frame.x.0, "start"), (frame.x.1, "end")] {
        let _ = writeln!(
            svg,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="{anchor}">{}</text>"#,
            frame.px(v),
            frame.bottom + 16.0,
            tick(v)
        );
    }
    for v in [frame.y.0, frame.y.1] {
        let _ = writeln!(
            svg,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"#,
            frame.left - 6.0,
            frame.py(v) + 4.0,
            tick(v)
        );
    }
    let _ = writeln!(
        svg,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
        (frame.left + frame.right) / 2.0,
        frame.bottom + 40.0,
        escape(&spec.x_label)
    );
    let cy = (frame.top + frame.bottom) / 2.0;
    let _ = writeln!(
        svg,
        r#"<text x="20" y="{cy:.2}" text-anchor="middle" transform="rotate(-90 20 {cy:.2})">{}</text>"#,
        escape(&spec.y_label)
    );
}

fn tick(v: f64) -> String {
    if v != 0.0 && (v.abs() >= 1e4 || v.abs() < 1e-2) {
        format!("{v:.2e}")
    } else {
        format!("{v:.2}")
    }
}

fn legend(svg: &mut String, spec: &PlotSpec, frame: &Frame) {
    for (i, s) in spec.series.iter().enumerate() {
        let y = frame.top + 10.0 + 20.0 * i as f64;
        let x = frame.right + 16.0;
        let _ = writeln!(
            svg,
            r#"<g class="legend"><rect x="{x:.2}" y="{:.2}" width="10" height="10" fill="{}"/><text x="{:.2}" y="{:.2}">{} (n={})</text></g>"#,
            y - 9.0,
            s.color,
            x + 16.0,
            y,
            escape(&s.name),
            s.points.len()
        );
    }
}

fn check(spec: &PlotSpec) -> Result<()> {
    if spec.n_points() == 0 {
        return Err(Error::Data(format!("plot {:?} has no points", spec.title)));
    }
    let mut names: Vec<&str> = spec.series.iter().map(|s| s.name.as_str()).collect();
    names.sort_unstable();
    if names.windows(2).any(|w| w[0] == w[1]) {
        return Err(Error::Data(format!(
            "plot {:?} repeats a series name",
            spec.title
        )));
    }
    if spec
        .series
        .iter()
        .flat_map(|s| &s.points)
        .any(|(x, y)| !x.is_finite() || !y.is_finite())
    {
        return Err(Error::Data(format!(
            "plot {:?} has non-finite points",
            spec.title
        )));
    }
    Ok(())
}

/// One `<circle>` per point and a legend entry per series.
pub fn emit_scatter_svg(spec: &PlotSpec) -> Result<String> {
    check(spec)?;
    let all = || spec.series.iter().flat_map(|s| s.points.iter());
    let frame = Frame::new(
        spec,
        axis_range(all().map(|p| p.0)),
        axis_range(all().map(|p| p.1)),
    );
    let mut svg = String::new();
    open(&mut svg, spec, &frame);
    for s in &spec.series {
        let _ = writeln!(svg, r#"<g fill="{}" fill-opacity="0.7">"#, s.color);
        for &(x, y) in &s.points {
            let _ = writeln!(
                svg,
                r#"<circle cx="{:.2}" cy="{:.2}" r="3"/>"#,
                frame.px(x),
                frame.py(y)
            );
        }
        svg.push_str("</g>\n");
    }
    legend(&mut svg, spec, &frame);
    svg.push_str("</svg>\n");
    Ok(svg)
}

/// Polylines, one per series, with points in the given order.
pub fn emit_line_svg(spec: &PlotSpec) -> Result<String> {
    check(spec)?;
    let all = || spec.series.iter().flat_map(|s| s.points.iter());
    let frame = Frame::new(
        spec,
        axis_range(all().map(|p| p.0)),
        axis_range(all().map(|p| p.1)),
    );
    let mut svg = String::new();
    open(&mut svg, spec, &frame);
    for s in &spec.series {
        let coords: Vec<String> = s
            .points
            .iter()
            .map(|&(x, y)| format!("{:.2},{:.2}", frame.px(x), frame.py(y)))
            .collect();
        let _ = writeln!(
            svg,
            r#"<polyline fill="none" stroke="{}" stroke-width="1.5" points="{}"/>"#,
            s.color,
            coords.join(" ")
        );
    }
    legend(&mut svg, spec, &frame);
    svg.push_str("</svg>\n");
    Ok(svg)
}
