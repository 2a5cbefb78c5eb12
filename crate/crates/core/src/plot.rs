//! Minimal SVG line charts for RMS-versus-iteration curves.

use std::fmt::Write as _;

#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub label: String,
    pub color: String,
    /// `None` breaks the line (e.g. an undefined dB value).
    pub points: Vec<(f64, Option<f64>)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Marker {
    pub label: String,
    pub x: f64,
    pub y: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct LineChart {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub series: Vec<Series>,
    pub markers: Vec<Marker>,
}

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 440.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 20.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 55.0;

/// Tick positions at a 1-2-5 step covering `[lo, hi]`.
fn ticks(lo: f64, hi: f64, target: usize) -> Vec<f64> {
    let span = (hi - lo).max(f64::EPSILON);
    let raw = span / target.max(1) as f64;
    let magnitude = 10f64.powf(raw.log10().floor());
    let step = [1.0, 2.0, 5.0, 10.0]
        .iter()
        .map(|m| m * magnitude)
        .find(|s| *s >= raw)
        .unwrap_or(10.0 * magnitude);
    let first = (lo / step).ceil() as i64;
    let last = (hi / step).floor() as i64;
    (first..=last).map(|i| i as f64 * step).collect()
}

fn fmt_tick(v: f64) -> String {
    let s = format!("{v:.3}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" {
        "0".to_string()
    } else {
        s.to_string()
    }
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}

impl LineChart {
    fn bounds(&self) -> Option<(f64, f64, f64, f64)> {
        let points = self
            .series
            .iter()
            .flat_map(|s| s.points.iter().filter_map(|&(x, y)| y.map(|y| (x, y))))
            .chain(self.markers.iter().map(|m| (m.x, m.y)))
            .filter(|(x, y)| x.is_finite() && y.is_finite());
        let mut b: Option<(f64, f64, f64, f64)> = None;
        for (x, y) in points {
            b = Some(match b {
                None => (x, x, y, y),
                Some((x0, x1, y0, y1)) => (x0.min(x), x1.max(x), y0.min(y), y1.max(y)),
            });
        }
        b.map(|(x0, x1, y0, y1)| {
            let pad = ((y1 - y0) * 0.05).max(0.5);
            let x1 = if x1 > x0 { x1 } else { x0 + 1.0 };
            (x0, x1, y0 - pad, y1 + pad)
        })
    }

    pub fn to_svg(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
        );
        let _ = writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#);
        let _ = writeln!(
            out,
            r#"<text x="{}" y="22" text-anchor="middle" font-size="14">{}</text>"#,
            WIDTH / 2.0,
            escape(&self.title)
        );
        let plot_w = WIDTH - LEFT - RIGHT;
        let plot_h = HEIGHT - TOP - BOTTOM;
        let _ = writeln!(
            out,
            r#"<rect x="{LEFT}" y="{TOP}" width="{plot_w}" height="{plot_h}" fill="none" stroke="black"/>"#
        );

        if let Some((x0, x1, y0, y1)) = self.bounds() {
            let sx = |x: f64| LEFT + (x - x0) / (x1 - x0) * plot_w;
            let sy = |y: f64| TOP + (y1 - y) / (y1 - y0) * plot_h;

            for t in ticks(x0, x1, 8) {
                let px = sx(t);
                let _ = writeln!(
                    out,
                    r##"<line x1="{px:.2}" y1="{:.2}" x2="{px:.2}" y2="{TOP}" stroke="#e0e0e0"/><text x="{px:.2}" y="{:.2}" text-anchor="middle">{}</text>"##,
                    TOP + plot_h,
                    TOP + plot_h + 16.0,
                    fmt_tick(t)
                );
            }
            for t in ticks(y0, y1, 6) {
                let py = sy(t);
                let _ = writeln!(
                    out,
                    r##"<line x1="{LEFT}" y1="{py:.2}" x2="{:.2}" y2="{py:.2}" stroke="#e0e0e0"/><text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"##,
                    LEFT + plot_w,
                    LEFT - 6.0,
                    py + 4.0,
                    fmt_tick(t)
                );
            }

            for series in &self.series {
                let mut segment: Vec<String> = Vec::new();
                let flush = |segment: &mut Vec<String>, out: &mut String| {
                    if segment.len() > 1 {
                        let _ = writeln!(
                            out,
                            r#"<polyline fill="none" stroke="{}" stroke-width="1.5" points="{}"/>"#,
                            series.color,
                            segment.join(" ")
                        );
                    }
                    segment.clear();
                };
                for &(x, y) in &series.points {
                    match y {
                        Some(y) if y.is_finite() => segment.push(format!("{:.2},{:.2}", sx(x), sy(y))),
                        _ => flush(&mut segment, &mut out),
                    }
                }
                flush(&mut segment, &mut out);
            }

            for marker in &self.markers {
                let (px, py) = (sx(marker.x), sy(marker.y));
                let _ = writeln!(
                    out,
                    r#"<circle cx="{px:.2}" cy="{py:.2}" r="3.5" fill="none" stroke="black"/><text x="{:.2}" y="{:.2}">{}</text>"#,
                    px + 5.0,
                    py - 5.0,
                    escape(&marker.label)
                );
            }
        }

        for (i, series) in self.series.iter().enumerate() {
            let y = TOP + 14.0 + 16.0 * i as f64;
            let x = WIDTH - RIGHT - 150.0;
            let _ = writeln!(
                out,
                r#"<line x1="{x}" y1="{:.1}" x2="{}" y2="{:.1}" stroke="{}" stroke-width="2"/><text x="{}" y="{y:.1}">{}</text>"#,
                y - 4.0,
                x + 20.0,
                y - 4.0,
                series.color,
                x + 26.0,
                escape(&series.label)
            );
        }

        let _ = writeln!(
            out,
            r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#,
            LEFT + plot_w / 2.0,
            HEIGHT - 14.0,
            escape(&self.x_label)
        );
        let _ = writeln!(
            out,
            r#"<text x="18" y="{}" text-anchor="middle" transform="rotate(-90 18 {})">{}</text>"#,
            TOP + plot_h / 2.0,
            TOP + plot_h / 2.0,
            escape(&self.y_label)
        );
        out.push_str("</svg>\n");
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tick_steps() {
        assert_eq!(ticks(0.0, 100.0, 5), vec![0.0, 20.0, 40.0, 60.0, 80.0, 100.0]);
        assert_eq!(ticks(-3.0, 3.0, 6), vec![-3.0, -2.0, -1.0, 0.0, 1.0, 2.0, 3.0]);
        assert_eq!(fmt_tick(0.5), "0.5");
        assert_eq!(fmt_tick(-0.0), "0");
    }

    #[test]
    fn svg_structure() {
        let chart = LineChart {
            title: "a < b".into(),
            x_label: "iteration".into(),
            y_label: "RMS error (dB)".into(),
            series: vec![Series {
                label: "model".into(),
                color: "black".into(),
                points: vec![(0.0, Some(1.0)), (1.0, Some(0.5)), (2.0, None), (3.0, Some(0.1)), (4.0, Some(0.0))],
            }],
            markers: vec![Marker { label: "A1".into(), x: 1.0, y: 0.5 }],
        };
        let svg = chart.to_svg();
        assert!(svg.starts_with("<svg"));
        assert!(svg.trim_end().ends_with("</svg>"));
        assert!(svg.contains("a &lt; b"));
        // the None point splits the curve into two polylines
        assert_eq!(svg.matches("<polyline").count(), 2);
        assert_eq!(svg.matches("<circle").count(), 1);
    }

    #[test]
    fn empty_chart_is_valid() {
        let svg = LineChart::default().to_svg();
        assert!(svg.contains("</svg>"));
        assert!(!svg.contains("<polyline"));
    }
}
