//! Minimal static SVG charts.

use std::fmt::Write as _;

const WIDTH: f64 = 480.0;
const HEIGHT: f64 = 320.0;
const MARGIN_LEFT: f64 = 60.0;
const MARGIN_RIGHT: f64 = 20.0;
const MARGIN_TOP: f64 = 36.0;
const MARGIN_BOTTOM: f64 = 48.0;
const PALETTE: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mark {
    Line,
    Points,
}

#[derive(Debug, Clone)]
pub struct Series {
    pub name: String,
    pub points: Vec<(f64, f64)>,
    pub mark: Mark,
}

impl Series {
    pub fn line(name: impl Into<String>, points: Vec<(f64, f64)>) -> Self {
        Self {
            name: name.into(),
            points,
            mark: Mark::Line,
        }
    }

    pub fn points(name: impl Into<String>, points: Vec<(f64, f64)>) -> Self {
        Self {
            name: name.into(),
            points,
            mark: Mark::Points,
        }
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}

fn nice_ticks(lo: f64, hi: f64) -> Vec<f64> {
    let span = (hi - lo).max(1e-12);
    let raw = span / 5.0;
    let mag = 10f64.powf(raw.log10().floor());
    let step = [1.0, 2.0, 2.5, 5.0, 10.0]
        .iter()
        .map(|m| m * mag)
        .find(|s| span / s <= 6.0)
        .unwrap_or(10.0 * mag);
    let start = (lo / step).ceil() as i64;
    let end = (hi / step).floor() as i64;
    (start..=end).map(|i| i as f64 * step).collect()
}

fn fmt_tick(v: f64) -> String {
    let r = (v * 1e6).round() / 1e6;
    if r == 0.0 {
        "0".into()
    } else {
        format!("{r}")
    }
}

struct Frame {
    x0: f64,
    x1: f64,
    y0: f64,
    y1: f64,
}

impl Frame {
    fn px(&self, x: f64) -> f64 {
        MARGIN_LEFT + (x - self.x0) / (self.x1 - self.x0) * (WIDTH - MARGIN_LEFT - MARGIN_RIGHT)
    }

    fn py(&self, y: f64) -> f64 {
        HEIGHT
            - MARGIN_BOTTOM
            - (y - self.y0) / (self.y1 - self.y0) * (HEIGHT - MARGIN_TOP - MARGIN_BOTTOM)
    }
}

fn padded(lo: f64, hi: f64) -> (f64, f64) {
    if (hi - lo).abs() < 1e-12 {
        (lo - 0.5, hi + 0.5)
    } else {
        let pad = 0.05 * (hi - lo);
        (lo - pad, hi + pad)
    }
}

fn open(out: &mut String, title: &str) {
    let _ = write!(
        out,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" \
         viewBox=\"0 0 {WIDTH} {HEIGHT}\" font-family=\"sans-serif\" font-size=\"11\">\n\
         <rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n\
         <text x=\"{}\" y=\"20\" text-anchor=\"middle\" font-size=\"13\">{}</text>\n",
        WIDTH / 2.0,
        escape(title)
    );
}

fn axes(out: &mut String, f: &Frame, x_label: &str, y_label: &str, x_ticks: bool) {
    let (l, r) = (MARGIN_LEFT, WIDTH - MARGIN_RIGHT);
    let (t, b) = (MARGIN_TOP, HEIGHT - MARGIN_BOTTOM);
    let _ = writeln!(
        out,
        "<rect x=\"{l}\" y=\"{t}\" width=\"{}\" height=\"{}\" fill=\"none\" stroke=\"#333\"/>",
        r - l,
        b - t
    );
    if x_ticks {
        for v in nice_ticks(f.x0, f.x1) {
            let x = f.px(v);
            let _ = writeln!(
                out,
                "<line x1=\"{x:.2}\" y1=\"{b}\" x2=\"{x:.2}\" y2=\"{}\" stroke=\"#333\"/>\
                 <text x=\"{x:.2}\" y=\"{}\" text-anchor=\"middle\">{}</text>",
                b + 4.0,
                b + 16.0,
                fmt_tick(v)
            );
        }
    }
    for v in nice_ticks(f.y0, f.y1) {
        let y = f.py(v);
        let _ = writeln!(
            out,
            "<line x1=\"{}\" y1=\"{y:.2}\" x2=\"{l}\" y2=\"{y:.2}\" stroke=\"#333\"/>\
             <text x=\"{}\" y=\"{:.2}\" text-anchor=\"end\">{}</text>",
            l - 4.0,
            l - 6.0,
            y + 4.0,
            fmt_tick(v)
        );
    }
    let _ = writeln!(
        out,
        "<text x=\"{:.1}\" y=\"{}\" text-anchor=\"middle\">{}</text>\n\
         <text x=\"14\" y=\"{:.1}\" text-anchor=\"middle\" transform=\"rotate(-90 14 {:.1})\">{}</text>",
        0.5 * (l + r),
        HEIGHT - 10.0,
        escape(x_label),
        0.5 * (t + b),
        0.5 * (t + b),
        escape(y_label)
    );
}

fn hline(out: &mut String, f: &Frame, y: f64, label: &str) {
    if y < f.y0 || y > f.y1 {
        return;
    }
    let py = f.py(y);
    let _ = writeln!(
        out,
        "<line x1=\"{MARGIN_LEFT}\" y1=\"{py:.2}\" x2=\"{}\" y2=\"{py:.2}\" stroke=\"#888\" \
         stroke-dasharray=\"4 3\"/><text x=\"{}\" y=\"{:.2}\" text-anchor=\"end\" fill=\"#666\">{}</text>",
        WIDTH - MARGIN_RIGHT,
        WIDTH - MARGIN_RIGHT - 2.0,
        py - 3.0,
        escape(label)
    );
}

/// Line and scatter chart. `y_range` fixes the vertical axis when given.
pub fn line_chart(
    title: &str,
    x_label: &str,
    y_label: &str,
    series: &[Series],
    y_range: Option<(f64, f64)>,
    reference: Option<(f64, &str)>,
) -> String {
    let all = series
        .iter()
        .flat_map(|s| s.points.iter())
        .filter(|p| p.0.is_finite() && p.1.is_finite());
    let (mut x0, mut x1, mut y0, mut y1) = (
        f64::INFINITY,
        f64::NEG_INFINITY,
        f64::INFINITY,
        f64::NEG_INFINITY,
    );
    for &(x, y) in all {
        x0 = x0.min(x);
        x1 = x1.max(x);
        y0 = y0.min(y);
        y1 = y1.max(y);
    }
    if !x0.is_finite() {
        (x0, x1, y0, y1) = (0.0, 1.0, 0.0, 1.0);
    }
    let (y0, y1) = y_range.unwrap_or_else(|| padded(y0, y1));
    let (x0, x1) = if (x1 - x0).abs() < 1e-12 {
        padded(x0, x1)
    } else {
        (x0, x1)
    };
    let f = Frame { x0, x1, y0, y1 };
    let mut out = String::new();
    open(&mut out, title);
    axes(&mut out, &f, x_label, y_label, true);
    if let Some((y, label)) = reference {
        hline(&mut out, &f, y, label);
    }
    for (k, s) in series.iter().enumerate() {
        let color = PALETTE[k % PALETTE.len()];
        let pts: Vec<(f64, f64)> = s
            .points
            .iter()
            .filter(|p| p.0.is_finite() && p.1.is_finite())
            .map(|&(x, y)| (f.px(x), f.py(y.clamp(y0, y1))))
            .collect();
        match s.mark {
            Mark::Line => {
                let path: Vec<String> = pts.iter().map(|(x, y)| format!("{x:.2},{y:.2}")).collect();
                let _ = writeln!(
                    out,
                    "<polyline fill=\"none\" stroke=\"{color}\" stroke-width=\"1.6\" points=\"{}\"/>",
                    path.join(" ")
                );
            }
            Mark::Points => {
                for (x, y) in pts {
                    let _ = writeln!(
                        out,
                        "<circle cx=\"{x:.2}\" cy=\"{y:.2}\" r=\"2.5\" fill=\"{color}\"/>"
                    );
                }
            }
        }
        let ly = MARGIN_TOP + 12.0 + 14.0 * k as f64;
        let lx = WIDTH - MARGIN_RIGHT - 130.0;
        let _ = writeln!(
            out,
            "<rect x=\"{lx}\" y=\"{:.1}\" width=\"10\" height=\"3\" fill=\"{color}\"/>\
             <text x=\"{}\" y=\"{ly:.1}\">{}</text>",
            ly - 4.0,
            lx + 14.0,
            escape(&s.name)
        );
    }
    out.push_str("</svg>\n");
    out
}

/// Vertical bar chart of labelled values.
pub fn bar_chart(
    title: &str,
    y_label: &str,
    bars: &[(String, f64)],
    y_range: Option<(f64, f64)>,
    reference: Option<(f64, &str)>,
) -> String {
    let finite: Vec<f64> = bars.iter().map(|b| b.1).filter(|v| v.is_finite()).collect();
    let top = finite.iter().cloned().fold(0.0, f64::max);
    let (y0, y1) = y_range.unwrap_or((0.0, if top > 0.0 { 1.1 * top } else { 1.0 }));
    let f = Frame {
        x0: 0.0,
        x1: bars.len().max(1) as f64,
        y0,
        y1,
    };
    let mut out = String::new();
    open(&mut out, title);
    axes(&mut out, &f, "", y_label, false);
    if let Some((y, label)) = reference {
        hline(&mut out, &f, y, label);
    }
    for (k, (label, v)) in bars.iter().enumerate() {
        let left = f.px(k as f64 + 0.15);
        let right = f.px(k as f64 + 0.85);
        let v = if v.is_finite() { v.clamp(y0, y1) } else { y1 };
        let top_px = f.py(v);
        let base = f.py(y0.max(0.0).min(y1));
        let _ = writeln!(
            out,
            "<rect x=\"{left:.2}\" y=\"{:.2}\" width=\"{:.2}\" height=\"{:.2}\" fill=\"{}\"/>\
             <text x=\"{:.2}\" y=\"{}\" text-anchor=\"middle\">{}</text>",
            top_px.min(base),
            right - left,
            (base - top_px).abs(),
            PALETTE[0],
            0.5 * (left + right),
            HEIGHT - MARGIN_BOTTOM + 16.0,
            escape(label)
        );
    }
    out.push_str("</svg>\n");
    out
}

/// Arranges finished charts in a grid with `cols` columns.
pub fn grid(charts: &[String], cols: usize) -> String {
    let cols = cols.max(1);
    let rows = charts.len().div_ceil(cols);
    let mut out = format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" viewBox=\"0 0 {w} {h}\">\n",
        w = WIDTH * cols as f64,
        h = HEIGHT * rows as f64
    );
    for (k, chart) in charts.iter().enumerate() {
        let x = WIDTH * (k % cols) as f64;
        let y = HEIGHT * (k / cols) as f64;
        let inner = chart.replacen("<svg ", &format!("<svg x=\"{x}\" y=\"{y}\" "), 1);
        out.push_str(&inner);
    }
    out.push_str("</svg>\n");
    out
}
