//! Minimal standalone SVG writer for top-down plots in world coordinates
//! (x forward, y left). The y axis is flipped so that left is up.

use std::fmt::Write as _;

const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"];

/// Stroke colour for vehicle `i`.
pub fn vehicle_color(i: usize) -> &'static str {
    PALETTE[i % PALETTE.len()]
}

/// Axis-aligned world window plus accumulated elements.
pub struct SvgCanvas {
    x0: f64,
    y1: f64,
    scale: f64,
    width: f64,
    height: f64,
    body: String,
}

impl SvgCanvas {
    /// Canvas covering `[x0, x1] x [y0, y1]` (metres) with a margin, at
    /// `scale` pixels per metre.
    pub fn new(mut x0: f64, mut x1: f64, mut y0: f64, mut y1: f64, scale: f64) -> Self {
        let margin = 1.0;
        if !(x1 > x0) {
            x1 = x0 + 1.0;
        }
        if !(y1 > y0) {
            y1 = y0 + 1.0;
        }
        x0 -= margin;
        x1 += margin;
        y0 -= margin;
        y1 += margin;
        Self {
            x0,
            y1,
            scale,
            width: (x1 - x0) * scale,
            height: (y1 - y0) * scale,
            body: String::new(),
        }
    }

    fn px(&self, x: f64, y: f64) -> (f64, f64) {
        ((x - self.x0) * self.scale, (self.y1 - y) * self.scale)
    }

    pub fn open_group(&mut self, id: &str) {
        writeln!(self.body, r#"<g id="{}">"#, escape(id)).expect("string write");
    }

    pub fn close_group(&mut self) {
        self.body.push_str("</g>\n");
    }

    /// Closed polygon; `attrs` is appended verbatim (e.g. `data-step="3"`).
    pub fn polygon(&mut self, pts: &[[f64; 2]], class: &str, stroke: &str, fill: &str, attrs: &str) {
        let mut points = String::new();
        for (k, p) in pts.iter().enumerate() {
            let (x, y) = self.px(p[0], p[1]);
            if k > 0 {
                points.push(' ');
            }
            write!(points, "{x:.2},{y:.2}").expect("string write");
        }
        writeln!(
            self.body,
            r#"<polygon class="{class}" points="{points}" stroke="{stroke}" fill="{fill}" fill-opacity="0.25" stroke-width="1" {attrs}/>"#
        )
        .expect("string write");
    }

    pub fn rect(&mut self, lb: [f64; 2], ub: [f64; 2], class: &str, stroke: &str, attrs: &str) {
        let (x, y) = self.px(lb[0], ub[1]);
        let w = (ub[0] - lb[0]) * self.scale;
        let h = (ub[1] - lb[1]) * self.scale;
        writeln!(
            self.body,
            r#"<rect class="{class}" x="{x:.2}" y="{y:.2}" width="{w:.2}" height="{h:.2}" stroke="{stroke}" fill="none" stroke-width="0.6" {attrs}/>"#
        )
        .expect("string write");
    }

    pub fn line(&mut self, a: [f64; 2], b: [f64; 2], class: &str, stroke: &str, dashed: bool) {
        let (x1, y1) = self.px(a[0], a[1]);
        let (x2, y2) = self.px(b[0], b[1]);
        let dash = if dashed { r#" stroke-dasharray="6,4""# } else { "" };
        writeln!(
            self.body,
            r#"<line class="{class}" x1="{x1:.2}" y1="{y1:.2}" x2="{x2:.2}" y2="{y2:.2}" stroke="{stroke}" stroke-width="1"{dash}/>"#
        )
        .expect("string write");
    }

    /// Text anchored at a world point.
    pub fn text(&mut self, at: [f64; 2], size: f64, content: &str) {
        let (x, y) = self.px(at[0], at[1]);
        writeln!(
            self.body,
            r#"<text x="{x:.2}" y="{y:.2}" font-family="sans-serif" font-size="{size}">{}</text>"#,
            escape(content)
        )
        .expect("string write");
    }

    /// Horizontal world line spanning the canvas.
    pub fn hline(&mut self, y: f64, class: &str, stroke: &str, dashed: bool) {
        let x1 = self.x0 + self.width / self.scale;
        self.line([self.x0, y], [x1, y], class, stroke, dashed);
    }

    pub fn finish(self) -> String {
        format!(
            "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w:.0}\" height=\"{h:.0}\" viewBox=\"0 0 {w:.2} {h:.2}\">\n\
             <rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n{}</svg>\n",
            self.body,
            w = self.width,
            h = self.height
        )
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}
