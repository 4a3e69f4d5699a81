//! Minimal self-contained SVG line chart with a logarithmic y axis.

use std::fmt::Write as _;

const WIDTH: f64 = 760.0;
const HEIGHT: f64 = 480.0;
const LEFT: f64 = 80.0;
const RIGHT: f64 = 230.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 60.0;

/// Colours cycled over series groups.
pub const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

/// Stroke patterns cycled over series variants.
pub const DASHES: [&str; 4] = ["", "6 3", "2 3", "8 3 2 3"];

#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub label: String,
    pub color: String,
    pub dash: String,
    /// Points with a non-finite coordinate or `y <= 0` are skipped.
    pub points: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct LineChart {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub series: Vec<Series>,
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

/// Step from {1, 2, 5}·10ᵏ giving roughly `target` intervals.
fn nice_step(range: f64, target: f64) -> f64 {
    let raw = range / target;
    let mag = 10f64.powf(raw.log10().floor());
    let r = raw / mag;
    let m = if r <= 1.0 {
        1.0
    } else if r <= 2.0 {
        2.0
    } else if r <= 5.0 {
        5.0
    } else {
        10.0
    };
    m * mag
}

fn fmt_tick(x: f64, step: f64) -> String {
    let decimals = (-step.log10().floor()).max(0.0) as usize;
    format!("{x:.decimals$}")
}

impl LineChart {
    fn visible(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.series
            .iter()
            .flat_map(|s| s.points.iter().copied())
            .filter(|&(x, y)| x.is_finite() && y.is_finite() && y > 0.0)
    }

    pub fn render(&self) -> String {
        let (mut x0, mut x1, mut y0, mut y1) = self.visible().fold(
            (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY),
            |(a, b, c, d), (x, y)| (a.min(x), b.max(x), c.min(y), d.max(y)),
        );
        if !x0.is_finite() {
            (x0, x1, y0, y1) = (0.0, 1.0, 1.0, 10.0);
        }
        if x1 - x0 < 1e-12 {
            x0 -= 0.5;
            x1 += 0.5;
        }
        let xstep = nice_step(x1 - x0, 6.0);
        let (x0, x1) = ((x0 / xstep).floor() * xstep, (x1 / xstep).ceil() * xstep);
        let d0 = y0.log10().floor() as i32;
        let mut d1 = y1.log10().ceil() as i32;
        if d1 <= d0 {
            d1 = d0 + 1;
        }
        let pw = WIDTH - LEFT - RIGHT;
        let ph = HEIGHT - TOP - BOTTOM;
        let sx = |x: f64| LEFT + (x - x0) / (x1 - x0) * pw;
        let sy = |y: f64| TOP + ph - (y.log10() - d0 as f64) / (d1 - d0) as f64 * ph;

        let mut o = String::new();
        let _ = writeln!(
            o,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
        );
        let _ = writeln!(o, r#"<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
        let _ = writeln!(
            o,
            r#"<text x="{:.2}" y="24" text-anchor="middle" font-size="14">{}</text>"#,
            LEFT + pw / 2.0,
            escape(&self.title)
        );

        // Grid and ticks.
        let _ = writeln!(o, r##"<g stroke="#dddddd" stroke-width="1">"##);
        let minor: Vec<f64> = if d1 - d0 <= 1 { vec![2.0, 5.0] } else { vec![] };
        for d in d0..=d1 {
            let y = sy(10f64.powi(d));
            let _ = writeln!(o, r#"<line x1="{LEFT:.2}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}"/>"#, LEFT + pw);
            if d < d1 {
                for k in 2..10 {
                    let y = sy(k as f64 * 10f64.powi(d));
                    let _ = writeln!(
                        o,
                        r#"<line x1="{LEFT:.2}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke-opacity="0.4"/>"#,
                        LEFT + pw
                    );
                }
            }
        }
        let nx = ((x1 - x0) / xstep).round() as i64;
        for k in 0..=nx {
            let x = sx(x0 + k as f64 * xstep);
            let _ = writeln!(o, r#"<line x1="{x:.2}" y1="{TOP:.2}" x2="{x:.2}" y2="{:.2}"/>"#, TOP + ph);
        }
        let _ = writeln!(o, "</g>");

        let _ = writeln!(o, r#"<g text-anchor="end">"#);
        for d in d0..=d1 {
            let _ = writeln!(
                o,
                r#"<text x="{:.2}" y="{:.2}">10<tspan dy="-6" font-size="9">{d}</tspan></text>"#,
                LEFT - 8.0,
                sy(10f64.powi(d)) + 4.0
            );
            if d < d1 {
                for &m in &minor {
                    let _ = writeln!(
                        o,
                        r#"<text x="{:.2}" y="{:.2}" font-size="10">{}</text>"#,
                        LEFT - 8.0,
                        sy(m * 10f64.powi(d)) + 4.0,
                        m * 10f64.powi(d)
                    );
                }
            }
        }
        let _ = writeln!(o, "</g>");
        let _ = writeln!(o, r#"<g text-anchor="middle">"#);
        for k in 0..=nx {
            let v = x0 + k as f64 * xstep;
            let _ = writeln!(
                o,
                r#"<text x="{:.2}" y="{:.2}">{}</text>"#,
                sx(v),
                TOP + ph + 18.0,
                fmt_tick(v, xstep)
            );
        }
        let _ = writeln!(o, "</g>");

        // Axes and labels.
        let _ = writeln!(
            o,
            r#"<rect x="{LEFT:.2}" y="{TOP:.2}" width="{pw:.2}" height="{ph:.2}" fill="none" stroke="black"/>"#
        );
        let _ = writeln!(
            o,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
            LEFT + pw / 2.0,
            HEIGHT - 18.0,
            escape(&self.x_label)
        );
        let _ = writeln!(
            o,
            r#"<text x="20" y="{:.2}" text-anchor="middle" transform="rotate(-90 20 {:.2})">{}</text>"#,
            TOP + ph / 2.0,
            TOP + ph / 2.0,
            escape(&self.y_label)
        );

        // Series.
        for s in &self.series {
            let pts: Vec<(f64, f64)> = s
                .points
                .iter()
                .copied()
                .filter(|&(x, y)| x.is_finite() && y.is_finite() && y > 0.0)
                .map(|(x, y)| (sx(x), sy(y)))
                .collect();
            let coords = pts
                .iter()
                .map(|(x, y)| format!("{x:.2},{y:.2}"))
                .collect::<Vec<_>>()
                .join(" ");
            let dash = if s.dash.is_empty() {
                String::new()
            } else {
                format!(r#" stroke-dasharray="{}""#, s.dash)
            };
            let _ = writeln!(
                o,
                r#"<polyline fill="none" stroke="{}" stroke-width="1.8"{dash} points="{coords}"><title>{}</title></polyline>"#,
                s.color,
                escape(&s.label)
            );
            for (x, y) in pts {
                let _ = writeln!(o, r#"<circle cx="{x:.2}" cy="{y:.2}" r="2.5" fill="{}"/>"#, s.color);
            }
        }

        // Legend.
        let lx = LEFT + pw + 16.0;
        for (i, s) in self.series.iter().enumerate() {
            let y = TOP + 10.0 + 20.0 * i as f64;
            let dash = if s.dash.is_empty() {
                String::new()
            } else {
                format!(r#" stroke-dasharray="{}""#, s.dash)
            };
            let _ = writeln!(
                o,
                r#"<line x1="{lx:.2}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="{}" stroke-width="1.8"{dash}/>"#,
                lx + 28.0,
                s.color
            );
            let _ = writeln!(
                o,
                r#"<text x="{:.2}" y="{:.2}">{}</text>"#,
                lx + 34.0,
                y + 4.0,
                escape(&s.label)
            );
        }
        o.push_str("</svg>\n");
        o
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn chart() -> LineChart {
        LineChart {
            title: "cost <vs> target".into(),
            x_label: "x".into(),
            y_label: "y".into(),
            series: vec![
                Series {
                    label: "a & b".into(),
                    color: PALETTE[0].into(),
                    dash: String::new(),
                    points: vec![(0.3, 50.0), (0.5, 20.0), (0.7, f64::NAN)],
                },
                Series {
                    label: "c".into(),
                    color: PALETTE[1].into(),
                    dash: DASHES[1].into(),
                    points: vec![(0.3, 500.0), (0.5, 0.0)],
                },
            ],
        }
    }

    #[test]
    fn one_polyline_per_series_and_escaped_text() {
        let svg = chart().render();
        assert_eq!(svg.matches("<polyline").count(), 2);
        assert!(svg.contains("a &amp; b"));
        assert!(svg.contains("cost &lt;vs&gt; target"));
        assert_eq!(svg.matches("<circle").count(), 3);
    }

    #[test]
    fn nice_steps() {
        assert_eq!(nice_step(0.5, 6.0), 0.1);
        assert_eq!(nice_step(10.0, 5.0), 2.0);
        assert_eq!(nice_step(3.0, 1.0), 5.0);
    }

    #[test]
    fn empty_chart_renders() {
        let svg = LineChart::default().render();
        assert!(svg.starts_with("<svg"));
        assert!(svg.ends_with("</svg>\n"));
    }
}
