//! Static SVG 1.1 renderers. Output depends only on the inputs, so equal
//! inputs give byte-identical documents.

use std::fmt::Write;

use serde::{Deserialize, Serialize};

use super::{CategoryCount, ExplorationGrid, SeriesSummary};
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SvgStyle {
    pub width: u32,
    pub height: u32,
    pub title: String,
}

impl Default for SvgStyle {
    fn default() -> Self {
        SvgStyle {
            width: 800,
            height: 480,
            title: String::new(),
        }
    }
}

impl SvgStyle {
    pub fn titled(title: impl Into<String>) -> Self {
        SvgStyle {
            title: title.into(),
            ..Default::default()
        }
    }
}

const MARGIN_LEFT: f64 = 90.0;
const MARGIN_RIGHT: f64 = 110.0;
const MARGIN_TOP: f64 = 40.0;
const MARGIN_BOTTOM: f64 = 70.0;
const PALETTE: &[&str] = &[
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f",
    "#bcbd22", "#17becf",
];

fn escape(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    for c in text.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&apos;"),
            c => out.push(c),
        }
    }
    out
}

/// Fixed-precision number formatting with `-0` folded into `0`.
fn num(x: f64) -> String {
    let s = format!("{x:.2}");
    if s == "-0.00" {
        "0.00".into()
    } else {
        s
    }
}

/// Short label for an axis tick value.
fn tick(x: f64) -> String {
    if x == x.trunc() && x.abs() < 1e15 {
        format!("{}", x as i64)
    } else {
        format!("{x:.3}")
    }
}

struct Frame {
    doc: String,
    x0: f64,
    y0: f64,
    w: f64,
    h: f64,
}

impl Frame {
    fn new(style: &SvgStyle, kind: &str) -> Frame {
        let (width, height) = (style.width.max(200) as f64, style.height.max(150) as f64);
        let mut doc = String::new();
        let _ = writeln!(doc, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
        let _ = writeln!(
            doc,
            r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" class="{kind}" width="{w}" height="{h}" viewBox="0 0 {w} {h}" font-family="sans-serif" font-size="11">"#,
            w = width,
            h = height
        );
        let _ = writeln!(
            doc,
            r#"<rect class="background" x="0" y="0" width="{width}" height="{height}" fill="white"/>"#
        );
        if !style.title.is_empty() {
            let _ = writeln!(
                doc,
                r#"<text class="title" x="{}" y="20" text-anchor="middle" font-size="14">{}</text>"#,
                num(width / 2.0),
                escape(&style.title)
            );
        }
        Frame {
            doc,
            x0: MARGIN_LEFT,
            y0: MARGIN_TOP,
            w: width - MARGIN_LEFT - MARGIN_RIGHT,
            h: height - MARGIN_TOP - MARGIN_BOTTOM,
        }
    }

    fn axes(&mut self, x_label: &str, y_label: &str) {
        let (x0, y0, w, h) = (self.x0, self.y0, self.w, self.h);
        let _ = writeln!(
            self.doc,
            r#"<line class="axis" x1="{a}" y1="{b}" x2="{c}" y2="{b}" stroke="black"/>"#,
            a = num(x0),
            b = num(y0 + h),
            c = num(x0 + w)
        );
        let _ = writeln!(
            self.doc,
            r#"<line class="axis" x1="{a}" y1="{b}" x2="{a}" y2="{c}" stroke="black"/>"#,
            a = num(x0),
            b = num(y0),
            c = num(y0 + h)
        );
        let _ = writeln!(
            self.doc,
            r#"<text class="axis-label" x="{}" y="{}" text-anchor="middle">{}</text>"#,
            num(x0 + w / 2.0),
            num(y0 + h + 50.0),
            escape(x_label)
        );
        let _ = writeln!(
            self.doc,
            r#"<text class="axis-label" x="20" y="{y}" text-anchor="middle" transform="rotate(-90 20 {y})">{}</text>"#,
            escape(y_label),
            y = num(y0 + h / 2.0)
        );
    }

    /// Five evenly spaced ticks on the y axis for `[lo, hi]`.
    fn y_ticks(&mut self, lo: f64, hi: f64) {
        for i in 0..=4 {
            let v = lo + (hi - lo) * i as f64 / 4.0;
            let y = self.y0 + self.h - self.h * i as f64 / 4.0;
            let _ = writeln!(
                self.doc,
                r#"<text class="tick" x="{}" y="{}" text-anchor="end">{}</text>"#,
                num(self.x0 - 6.0),
                num(y + 4.0),
                tick(v)
            );
        }
    }

    fn finish(mut self) -> String {
        self.doc.push_str("</svg>\n");
        self.doc
    }
}

/// Bar chart of value counts. Grouped counts are labelled `group: value`.
pub fn render_bar(counts: &[CategoryCount], style: &SvgStyle) -> Result<String> {
    if counts.is_empty() {
        return Err(Error::EmptyInput);
    }
    let mut f = Frame::new(style, "bar-chart");
    f.axes("value", "count");
    let max = counts.iter().map(|c| c.count).max().unwrap_or(0).max(1) as f64;
    f.y_ticks(0.0, max);
    let slot = f.w / counts.len() as f64;
    for (i, c) in counts.iter().enumerate() {
        let bh = f.h * c.count as f64 / max;
        let x = f.x0 + slot * i as f64 + slot * 0.1;
        let label = match &c.group {
            Some(g) => format!("{g}: {}", c.value),
            None => c.value.clone(),
        };
        let _ = writeln!(
            f.doc,
            r#"<rect class="bar" x="{}" y="{}" width="{}" height="{}" fill="{}"><title>{}: {}</title></rect>"#,
            num(x),
            num(f.y0 + f.h - bh),
            num(slot * 0.8),
            num(bh),
            PALETTE[0],
            escape(&label),
            c.count
        );
        let lx = x + slot * 0.4;
        let ly = f.y0 + f.h + 14.0;
        let _ = writeln!(
            f.doc,
            r#"<text class="tick" x="{lx}" y="{ly}" text-anchor="end" transform="rotate(-45 {lx} {ly})">{}</text>"#,
            escape(&label),
            lx = num(lx),
            ly = num(ly)
        );
    }
    Ok(f.finish())
}

/// Line chart, one polyline per user, x = window start.
pub fn render_line(series: &[SeriesSummary], style: &SvgStyle) -> Result<String> {
    let points: Vec<(f64, f64)> = series
        .iter()
        .flat_map(|s| s.points.iter().map(|(t, v)| (t.millis() as f64, *v)))
        .collect();
    if points.is_empty() {
        return Err(Error::EmptyInput);
    }
    let (mut xmin, mut xmax, mut ymin, mut ymax) = (f64::MAX, f64::MIN, f64::MAX, f64::MIN);
    for &(x, y) in &points {
        xmin = xmin.min(x);
        xmax = xmax.max(x);
        ymin = ymin.min(y);
        ymax = ymax.max(y);
    }
    ymin = ymin.min(0.0);
    if xmax == xmin {
        xmax = xmin + 1.0;
    }
    if ymax == ymin {
        ymax = ymin + 1.0;
    }
    let mut f = Frame::new(style, "line-chart");
    f.axes("window start", "value");
    f.y_ticks(ymin, ymax);
    let px = |f: &Frame, x: f64| f.x0 + f.w * (x - xmin) / (xmax - xmin);
    let py = |f: &Frame, y: f64| f.y0 + f.h - f.h * (y - ymin) / (ymax - ymin);
    for (t, anchor) in [(xmin, "start"), (xmax, "end")] {
        let label = crate::schema::Timestamp::from_millis(t as i64)
            .map(|ts| ts.local_date(0))
            .unwrap_or_default();
        let _ = writeln!(
            f.doc,
            r#"<text class="tick" x="{}" y="{}" text-anchor="{anchor}">{label}</text>"#,
            num(px(&f, t)),
            num(f.y0 + f.h + 16.0)
        );
    }
    for (i, s) in series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let coords: Vec<String> = s
            .points
            .iter()
            .map(|(t, v)| format!("{},{}", num(px(&f, t.millis() as f64)), num(py(&f, *v))))
            .collect();
        let _ = writeln!(
            f.doc,
            r#"<polyline class="series" fill="none" stroke="{color}" stroke-width="2" points="{}"><title>{}</title></polyline>"#,
            coords.join(" "),
            escape(&s.user)
        );
        for c in &coords {
            let (x, y) = c.split_once(',').expect("coordinate pair");
            let _ = writeln!(
                f.doc,
                r#"<circle class="point" cx="{x}" cy="{y}" r="3" fill="{color}"/>"#
            );
        }
        let ly = f.y0 + 14.0 * i as f64;
        let lx = f.x0 + f.w + 10.0;
        let _ = writeln!(
            f.doc,
            r#"<text class="legend" x="{}" y="{}" fill="{color}">{}</text>"#,
            num(lx),
            num(ly + 4.0),
            escape(&s.user)
        );
    }
    Ok(f.finish())
}

/// Heatmap with one `rect.cell` per grid cell. Absent cells are grey.
pub fn render_heatmap(grid: &ExplorationGrid, style: &SvgStyle) -> Result<String> {
    if grid.rows.is_empty() || grid.cols.is_empty() {
        return Err(Error::EmptyInput);
    }
    let values: Vec<f64> = grid.cells.iter().flatten().copied().collect();
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let (lo, hi) = if values.is_empty() {
        (0.0, 1.0)
    } else if hi == lo {
        (lo, lo + 1.0)
    } else {
        (lo, hi)
    };
    let mut f = Frame::new(style, "heatmap");
    f.axes(&grid.col_label, &grid.row_label);
    let cw = f.w / grid.cols.len() as f64;
    let ch = f.h / grid.rows.len() as f64;
    for (r, row) in grid.rows.iter().enumerate() {
        let _ = writeln!(
            f.doc,
            r#"<text class="tick" x="{}" y="{}" text-anchor="end">{}</text>"#,
            num(f.x0 - 6.0),
            num(f.y0 + ch * (r as f64 + 0.5) + 4.0),
            escape(row)
        );
    }
    let every = grid.cols.len().div_ceil(24);
    for (c, col) in grid.cols.iter().enumerate().step_by(every) {
        let _ = writeln!(
            f.doc,
            r#"<text class="tick" x="{}" y="{}" text-anchor="middle">{}</text>"#,
            num(f.x0 + cw * (c as f64 + 0.5)),
            num(f.y0 + f.h + 16.0),
            escape(col)
        );
    }
    for r in 0..grid.rows.len() {
        for c in 0..grid.cols.len() {
            let v = grid.get(r, c);
            let fill = v.map_or_else(|| "#dddddd".to_string(), |v| shade((v - lo) / (hi - lo)));
            let label = v.map_or_else(|| "NA".to_string(), |v| v.to_string());
            let _ = writeln!(
                f.doc,
                r#"<rect class="cell" x="{}" y="{}" width="{}" height="{}" fill="{fill}"><title>{}, {}: {label}</title></rect>"#,
                num(f.x0 + cw * c as f64),
                num(f.y0 + ch * r as f64),
                num(cw),
                num(ch),
                escape(&grid.rows[r]),
                escape(&grid.cols[c])
            );
        }
    }
    let lx = f.x0 + f.w + 20.0;
    for i in 0..5 {
        let frac = i as f64 / 4.0;
        let y = f.y0 + f.h - (i + 1) as f64 * 18.0;
        let _ = writeln!(
            f.doc,
            r#"<rect class="legend" x="{}" y="{}" width="14" height="14" fill="{}"/>"#,
            num(lx),
            num(y),
            shade(frac)
        );
        let _ = writeln!(
            f.doc,
            r#"<text class="legend" x="{}" y="{}">{}</text>"#,
            num(lx + 20.0),
            num(y + 11.0),
            tick(lo + (hi - lo) * frac)
        );
    }
    Ok(f.finish())
}

/// White to dark blue.
fn shade(t: f64) -> String {
    let t = t.clamp(0.0, 1.0);
    let lerp = |a: f64, b: f64| (a + (b - a) * t).round() as u8;
    format!("#{:02x}{:02x}{:02x}", lerp(247.0, 8.0), lerp(251.0, 48.0), lerp(255.0, 107.0))
}
