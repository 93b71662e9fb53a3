//! Static SVG figures: filled regions, boundary curves and sample dots.

use std::fmt::Write as _;

use crate::model::Cplx;
use crate::regions::{Polyline, Raster, Window};

pub const BLUE: &str = "#3b6fd8";
pub const GREY: &str = "#9a9a9a";
pub const BLACK: &str = "#000000";
pub const GREEN: &str = "#2e9c4a";
pub const RED: &str = "#c8322d";

pub struct Plot {
    window: Window,
    width: f64,
    height: f64,
    body: String,
    title: Option<String>,
}

impl Plot {
    /// Plot of `window`, `width` pixels wide with equal axis scaling.
    pub fn new(window: Window, width: f64) -> Plot {
        let height = width * window.height() / window.width();
        Plot {
            window,
            width,
            height,
            body: String::new(),
            title: None,
        }
    }

    pub fn title(mut self, text: impl Into<String>) -> Self {
        self.title = Some(text.into());
        self
    }

    fn px(&self, z: Cplx) -> (f64, f64) {
        let w = &self.window;
        (
            (z.re - w.re_min) / w.width() * self.width,
            self.height - (z.im - w.im_min) / w.height() * self.height,
        )
    }

    /// Marked cells, merged into one rectangle per horizontal run.
    pub fn fill(&mut self, raster: &Raster, color: &str, opacity: f64) {
        let n = raster.resolution;
        let (cw, ch) = (self.width / n as f64, self.height / n as f64);
        let _ = writeln!(self.body, "<g fill=\"{color}\" fill-opacity=\"{opacity}\" shape-rendering=\"crispEdges\">");
        for j in 0..n {
            let mut i = 0;
            while i < n {
                if !raster.get(i, j) {
                    i += 1;
                    continue;
                }
                let start = i;
                while i < n && raster.get(i, j) {
                    i += 1;
                }
                let y = self.height - (j + 1) as f64 * ch;
                let _ = writeln!(
                    self.body,
                    "<rect x=\"{:.2}\" y=\"{:.2}\" width=\"{:.2}\" height=\"{:.2}\"/>",
                    start as f64 * cw,
                    y,
                    (i - start) as f64 * cw + 0.01,
                    ch + 0.01
                );
            }
        }
        self.body.push_str("</g>\n");
    }

    pub fn curves(&mut self, lines: &[Polyline], color: &str, width: f64) {
        for line in lines.iter().filter(|l| l.len() >= 2) {
            let mut d = String::new();
            for (k, z) in line.iter().enumerate() {
                let (x, y) = self.px(*z);
                let _ = write!(d, "{}{x:.2},{y:.2} ", if k == 0 { "M" } else { "L" });
            }
            let _ = writeln!(
                self.body,
                "<path d=\"{}\" fill=\"none\" stroke=\"{color}\" stroke-width=\"{width}\"/>",
                d.trim_end()
            );
        }
    }

    pub fn dots(&mut self, points: &[Cplx], color: &str, radius: f64) {
        let _ = writeln!(self.body, "<g fill=\"{color}\">");
        for z in points {
            if !self.window.contains(*z) {
                continue;
            }
            let (x, y) = self.px(*z);
            let _ = writeln!(self.body, "<circle cx=\"{x:.2}\" cy=\"{y:.2}\" r=\"{radius}\"/>");
        }
        self.body.push_str("</g>\n");
    }

    pub fn segment(&mut self, a: Cplx, b: Cplx, color: &str) {
        let (x1, y1) = self.px(a);
        let (x2, y2) = self.px(b);
        let _ = writeln!(
            self.body,
            "<line x1=\"{x1:.2}\" y1=\"{y1:.2}\" x2=\"{x2:.2}\" y2=\"{y2:.2}\" stroke=\"{color}\" stroke-width=\"2\"/>"
        );
    }

    fn axes(&self) -> String {
        let w = &self.window;
        let mut s = String::new();
        if w.im_min <= 0.0 && w.im_max >= 0.0 {
            let (_, y) = self.px(Cplx::new(w.re_min, 0.0));
            let _ = writeln!(
                s,
                "<line x1=\"0\" y1=\"{y:.2}\" x2=\"{:.2}\" y2=\"{y:.2}\" stroke=\"#444\" stroke-width=\"0.6\"/>",
                self.width
            );
        }
        if w.re_min <= 0.0 && w.re_max >= 0.0 {
            let (x, _) = self.px(Cplx::new(0.0, w.im_min));
            let _ = writeln!(
                s,
                "<line x1=\"{x:.2}\" y1=\"0\" x2=\"{x:.2}\" y2=\"{:.2}\" stroke=\"#444\" stroke-width=\"0.6\"/>",
                self.height
            );
        }
        s
    }

    /// SVG document; `comment` lines go into a leading XML comment.
    pub fn finish(&self, comment: &[(&str, String)]) -> String {
        let w = &self.window;
        let mut s = String::new();
        let _ = writeln!(
            s,
            "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{:.0}\" height=\"{:.0}\" viewBox=\"0 0 {:.2} {:.2}\">",
            self.width, self.height, self.width, self.height
        );
        if !comment.is_empty() {
            s.push_str("<!--\n");
            for (k, v) in comment {
                let _ = writeln!(s, "{k}: {}", v.replace("--", "- -"));
            }
            s.push_str("-->\n");
        }
        let _ = writeln!(s, "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>");
        s.push_str(&self.body);
        s.push_str(&self.axes());
        let _ = writeln!(
            s,
            "<text x=\"4\" y=\"{:.2}\" font-size=\"11\" font-family=\"sans-serif\">Re [{}, {}]  Im [{}, {}]</text>",
            self.height - 4.0,
            w.re_min,
            w.re_max,
            w.im_min,
            w.im_max
        );
        if let Some(t) = &self.title {
            let _ = writeln!(s, "<text x=\"4\" y=\"14\" font-size=\"13\" font-family=\"sans-serif\">{}</text>", escape(t));
        }
        s.push_str("</svg>\n");
        s
    }
}

fn escape(t: &str) -> String {
    t.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
