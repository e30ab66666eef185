//! Minimal self-contained SVG charts: no plotting dependency, fixed layout,
//! the run's config digest embedded as metadata.

use std::fmt::Write;

pub struct Series<'a> {
    pub label: &'a str,
    pub points: Vec<(f64, f64)>,
    /// Step plot (horizontal-then-vertical) instead of a straight polyline.
    pub step: bool,
}

pub struct Chart<'a> {
    pub title: &'a str,
    pub x_label: &'a str,
    pub y_label: &'a str,
    pub series: Vec<Series<'a>>,
    pub config_digest: &'a str,
}

const W: f64 = 640.0;
const H: f64 = 480.0;
const ML: f64 = 70.0;
const MR: f64 = 20.0;
const MT: f64 = 40.0;
const MB: f64 = 55.0;
const COLORS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"];

impl Chart<'_> {
    pub fn render(&self) -> String {
        let (mut x_min, mut x_max) = (f64::INFINITY, f64::NEG_INFINITY);
        let (mut y_min, mut y_max) = (f64::INFINITY, f64::NEG_INFINITY);
        for s in &self.series {
            for &(x, y) in &s.points {
                if x.is_finite() && y.is_finite() {
                    x_min = x_min.min(x);
                    x_max = x_max.max(x);
                    y_min = y_min.min(y);
                    y_max = y_max.max(y);
                }
            }
        }
        if !x_min.is_finite() || x_min == x_max {
            x_min -= 0.5;
            x_max = x_min + 1.0;
        }
        if !y_min.is_finite() || y_min == y_max {
            y_min -= 0.5;
            y_max = y_min + 1.0;
        }
        let pad_y = 0.05 * (y_max - y_min);
        y_min -= pad_y;
        y_max += pad_y;

        let sx = |x: f64| ML + (x - x_min) / (x_max - x_min) * (W - ML - MR);
        let sy = |y: f64| H - MB - (y - y_min) / (y_max - y_min) * (H - MT - MB);

        let mut out = String::new();
        let _ = writeln!(
            out,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}">"#
        );
        let _ = writeln!(
            out,
            "  <metadata>config-digest: {}</metadata>",
            self.config_digest
        );
        let _ = writeln!(
            out,
            r#"  <rect width="{W}" height="{H}" fill="white"/>"#
        );
        let _ = writeln!(
            out,
            r#"  <text x="{}" y="22" text-anchor="middle" font-family="sans-serif" font-size="15">{}</text>"#,
            W / 2.0,
            escape(self.title)
        );
        // axes
        let _ = writeln!(
            out,
            r#"  <line x1="{ML}" y1="{MT}" x2="{ML}" y2="{}" stroke="black"/>"#,
            H - MB
        );
        let _ = writeln!(
            out,
            r#"  <line x1="{ML}" y1="{}" x2="{}" y2="{}" stroke="black"/>"#,
            H - MB,
            W - MR,
            H - MB
        );
        // ticks
        for i in 0..=4 {
            let fx = x_min + (x_max - x_min) * i as f64 / 4.0;
            let px = sx(fx);
            let _ = writeln!(
                out,
                r#"  <line x1="{px}" y1="{}" x2="{px}" y2="{}" stroke="black"/>"#,
                H - MB,
                H - MB + 5.0
            );
            let _ = writeln!(
                out,
                r#"  <text x="{px}" y="{}" text-anchor="middle" font-family="sans-serif" font-size="11">{}</text>"#,
                H - MB + 18.0,
                tick(fx)
            );
            let fy = y_min + (y_max - y_min) * i as f64 / 4.0;
            let py = sy(fy);
            let _ = writeln!(
                out,
                r#"  <line x1="{}" y1="{py}" x2="{ML}" y2="{py}" stroke="black"/>"#,
                ML - 5.0
            );
            let _ = writeln!(
                out,
                r#"  <text x="{}" y="{}" text-anchor="end" font-family="sans-serif" font-size="11">{}</text>"#,
                ML - 8.0,
                py + 4.0,
                tick(fy)
            );
        }
        let _ = writeln!(
            out,
            r#"  <text x="{}" y="{}" text-anchor="middle" font-family="sans-serif" font-size="13">{}</text>"#,
            (ML + W - MR) / 2.0,
            H - 12.0,
            escape(self.x_label)
        );
        let _ = writeln!(
            out,
            r#"  <text x="16" y="{}" text-anchor="middle" font-family="sans-serif" font-size="13" transform="rotate(-90 16 {})">{}</text>"#,
            (MT + H - MB) / 2.0,
            (MT + H - MB) / 2.0,
            escape(self.y_label)
        );
        for (si, s) in self.series.iter().enumerate() {
            let color = COLORS[si % COLORS.len()];
            let mut d = String::new();
            let mut prev: Option<(f64, f64)> = None;
            for &(x, y) in &s.points {
                if !x.is_finite() || !y.is_finite() {
                    continue;
                }
                let (px, py) = (sx(x), sy(y));
                match prev {
                    None => {
                        let _ = write!(d, "M{px:.2},{py:.2}");
                    }
                    Some((_, qpy)) if s.step => {
                        // hold the previous level to the new x, then jump
                        let _ = write!(d, " L{px:.2},{qpy:.2} L{px:.2},{py:.2}");
                    }
                    Some(_) => {
                        let _ = write!(d, " L{px:.2},{py:.2}");
                    }
                }
                prev = Some((px, py));
            }
            let _ = writeln!(
                out,
                r#"  <path d="{d}" fill="none" stroke="{color}" stroke-width="1.5"/>"#
            );
            let _ = writeln!(
                out,
                r#"  <text x="{}" y="{}" font-family="sans-serif" font-size="11" fill="{color}">{}</text>"#,
                W - MR - 150.0,
                MT + 14.0 * (si as f64 + 1.0),
                escape(s.label)
            );
        }
        out.push_str("</svg>\n");
        out
    }
}

fn tick(v: f64) -> String {
    if v == 0.0 {
        return "0".into();
    }
    let a = v.abs();
    if (1e-3..1e4).contains(&a) {
        format!("{v:.3}")
    } else {
        format!("{v:.2e}")
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
