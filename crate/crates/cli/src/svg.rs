// SPDX-License-Identifier: MIT OR Apache-2.0

//! Standalone SVG charts. Output depends only on the data, so plots are as
//! reproducible as the CSVs they are drawn from.

use std::fmt::Write;

const W: f64 = 640.0;
const H: f64 = 400.0;
const MARGIN: f64 = 56.0;
const PALETTE: [&str; 6] = ["#d62728", "#1f77b4", "#2ca02c", "#ff7f0e", "#9467bd", "#7f7f7f"];

pub struct Series<'a> {
    pub name: &'a str,
    pub points: Vec<(f64, f64)>,
}

struct Frame {
    x: (f64, f64),
    y: (f64, f64),
}

impl Frame {
    fn fit<'a>(points: impl Iterator<Item = &'a (f64, f64)>) -> Self {
        let (mut x, mut y) = ((f64::INFINITY, f64::NEG_INFINITY), (f64::INFINITY, f64::NEG_INFINITY));
        for &(px, py) in points.filter(|p| p.0.is_finite() && p.1.is_finite()) {
            x = (x.0.min(px), x.1.max(px));
            y = (y.0.min(py), y.1.max(py));
        }
        Self {
            x: widen(x),
            y: widen(y),
        }
    }

    fn px(&self, v: f64) -> f64 {
        MARGIN + (v - self.x.0) / (self.x.1 - self.x.0) * (W - 2.0 * MARGIN)
    }

    fn py(&self, v: f64) -> f64 {
        H - MARGIN - (v - self.y.0) / (self.y.1 - self.y.0) * (H - 2.0 * MARGIN)
    }
}

fn widen((lo, hi): (f64, f64)) -> (f64, f64) {
    if !lo.is_finite() {
        (0.0, 1.0)
    } else if hi - lo < 1e-12 {
        (lo - 0.5, hi + 0.5)
    } else {
        (lo, hi)
    }
}

fn header(title: &str, xlabel: &str, ylabel: &str) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{}" y="24" text-anchor="middle" font-size="15">{}</text>"#,
        W / 2.0,
        escape(title)
    );
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#,
        W / 2.0,
        H - 12.0,
        escape(xlabel)
    );
    let _ = writeln!(
        s,
        r#"<text x="16" y="{}" text-anchor="middle" transform="rotate(-90 16 {})">{}</text>"#,
        H / 2.0,
        H / 2.0,
        escape(ylabel)
    );
    s
}

fn axes(s: &mut String, f: &Frame) {
    let (x0, x1, y0, y1) = (MARGIN, W - MARGIN, H - MARGIN, MARGIN);
    let _ = writeln!(
        s,
        r#"<path d="M{x0} {y1} L{x0} {y0} L{x1} {y0}" stroke="black" fill="none"/>"#
    );
    for (v, label) in [(f.y.0, f.y.0), (f.y.1, f.y.1)] {
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{:.1}" text-anchor="end">{}</text>"#,
            x0 - 4.0,
            f.py(v) + 4.0,
            tick(label)
        );
    }
    for v in [f.x.0, f.x.1] {
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{}" text-anchor="middle">{}</text>"#,
            f.px(v),
            y0 + 16.0,
            tick(v)
        );
    }
}

fn legend(s: &mut String, names: &[&str]) {
    for (i, name) in names.iter().enumerate() {
        let y = MARGIN + 4.0 + 16.0 * i as f64;
        let color = PALETTE[i % PALETTE.len()];
        let _ = writeln!(
            s,
            r#"<rect x="{}" y="{}" width="10" height="10" fill="{color}"/>"#,
            W - MARGIN - 120.0,
            y
        );
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}">{}</text>"#,
            W - MARGIN - 104.0,
            y + 9.0,
            escape(name)
        );
    }
}

pub fn line_chart(title: &str, xlabel: &str, ylabel: &str, series: &[Series]) -> String {
    let frame = Frame::fit(series.iter().flat_map(|s| s.points.iter()));
    let mut s = header(title, xlabel, ylabel);
    axes(&mut s, &frame);
    for (i, ser) in series.iter().enumerate() {
        let path: Vec<String> = ser
            .points
            .iter()
            .filter(|p| p.0.is_finite() && p.1.is_finite())
            .map(|&(x, y)| format!("{:.2},{:.2}", frame.px(x), frame.py(y)))
            .collect();
        let _ = writeln!(
            s,
            r#"<polyline points="{}" stroke="{}" fill="none" stroke-width="1.5"/>"#,
            path.join(" "),
            PALETTE[i % PALETTE.len()]
        );
    }
    legend(&mut s, &series.iter().map(|x| x.name).collect::<Vec<_>>());
    s.push_str("</svg>\n");
    s
}

/// Bars start at zero; negative values hang below the axis.
pub fn bar_chart(title: &str, ylabel: &str, bars: &[(String, f64)]) -> String {
    let mut ys: Vec<(f64, f64)> = bars.iter().map(|b| (0.0, b.1)).collect();
    ys.push((0.0, 0.0));
    let mut frame = Frame::fit(ys.iter());
    frame.x = (0.0, bars.len().max(1) as f64);
    let mut s = header(title, "", ylabel);
    axes(&mut s, &frame);
    let slot = (W - 2.0 * MARGIN) / bars.len().max(1) as f64;
    for (i, (label, v)) in bars.iter().enumerate() {
        let (top, bottom) = (frame.py(v.max(0.0)), frame.py(v.min(0.0)));
        let x = MARGIN + slot * (i as f64 + 0.15);
        let _ = writeln!(
            s,
            r#"<rect x="{x:.2}" y="{top:.2}" width="{:.2}" height="{:.2}" fill="{}"/>"#,
            slot * 0.7,
            bottom - top,
            PALETTE[i % PALETTE.len()]
        );
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{}" text-anchor="middle">{}</text>"#,
            x + slot * 0.35,
            H - MARGIN + 16.0,
            escape(label)
        );
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
            x + slot * 0.35,
            top - 4.0,
            tick(*v)
        );
    }
    s.push_str("</svg>\n");
    s
}

/// One colour per group; `line` is `w0*x + w1*y + b = 0`, drawn when present.
pub fn scatter(title: &str, xlabel: &str, ylabel: &str, groups: &[Series], line: Option<([f64; 2], f64)>) -> String {
    let frame = Frame::fit(groups.iter().flat_map(|g| g.points.iter()));
    let mut s = header(title, xlabel, ylabel);
    axes(&mut s, &frame);
    for (i, g) in groups.iter().enumerate() {
        for &(x, y) in g.points.iter().filter(|p| p.0.is_finite() && p.1.is_finite()) {
            let _ = writeln!(
                s,
                r#"<circle cx="{:.2}" cy="{:.2}" r="3" fill="{}" fill-opacity="0.7"/>"#,
                frame.px(x),
                frame.py(y),
                PALETTE[i % PALETTE.len()]
            );
        }
    }
    if let Some(([w0, w1], b)) = line {
        if w1.abs() > 1e-12 {
            let at = |x: f64| -(w0 * x + b) / w1;
            let _ = writeln!(
                s,
                r#"<line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="black" stroke-dasharray="4 3"/>"#,
                frame.px(frame.x.0),
                frame.py(at(frame.x.0)).clamp(0.0, H),
                frame.px(frame.x.1),
                frame.py(at(frame.x.1)).clamp(0.0, H)
            );
        }
    }
    legend(&mut s, &groups.iter().map(|g| g.name).collect::<Vec<_>>());
    s.push_str("</svg>\n");
    s
}

fn tick(v: f64) -> String {
    if v.abs() >= 1e4 || (v != 0.0 && v.abs() < 1e-2) {
        format!("{v:.2e}")
    } else {
        format!("{v:.3}")
    }
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
