//! Minimal SVG figures: line plots with error bars, and site-time heatmaps.

use std::fmt::Write;

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 450.0;
const LEFT: f64 = 80.0;
const RIGHT: f64 = 170.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 60.0;

const PALETTE: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf",
];

pub struct Line {
    pub label: String,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub err: Option<Vec<f64>>,
}

pub struct LinePlot {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub log_x: bool,
    pub markers: bool,
    pub lines: Vec<Line>,
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Roughly five round tick values covering `[lo, hi]`.
fn ticks(lo: f64, hi: f64) -> Vec<f64> {
    let span = hi - lo;
    if !(span > 0.0) {
        return vec![lo];
    }
    let raw = span / 5.0;
    let mag = 10f64.powf(raw.log10().floor());
    let step = [1.0, 2.0, 5.0, 10.0]
        .iter()
        .map(|m| m * mag)
        .find(|s| span / s <= 6.0)
        .unwrap_or(10.0 * mag);
    let mut t = (lo / step).ceil() * step;
    let mut out = Vec::new();
    while t <= hi + step * 1e-9 {
        out.push(if t.abs() < step * 1e-9 { 0.0 } else { t });
        t += step;
    }
    out
}

fn tick_label(v: f64) -> String {
    if v != 0.0 && (v.abs() >= 1e4 || v.abs() < 1e-2) {
        format!("{v:.0e}")
    } else {
        let s = format!("{v:.3}");
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    }
}

struct Frame {
    x0: f64,
    x1: f64,
    y0: f64,
    y1: f64,
    log_x: bool,
}

impl Frame {
    fn fx(&self, x: f64) -> f64 {
        let (x, x0, x1) = if self.log_x {
            (x.log10(), self.x0.log10(), self.x1.log10())
        } else {
            (x, self.x0, self.x1)
        };
        LEFT + (x - x0) / (x1 - x0) * (WIDTH - LEFT - RIGHT)
    }

    fn fy(&self, y: f64) -> f64 {
        HEIGHT - BOTTOM - (y - self.y0) / (self.y1 - self.y0) * (HEIGHT - TOP - BOTTOM)
    }
}

fn header(svg: &mut String, title: &str) {
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="22" text-anchor="middle" font-size="14">{}</text>"#,
        (LEFT + WIDTH - RIGHT) / 2.0,
        escape(title)
    );
}

fn axes(svg: &mut String, frame: &Frame, x_label: &str, y_label: &str) {
    let (l, r, t, b) = (LEFT, WIDTH - RIGHT, TOP, HEIGHT - BOTTOM);
    let _ = writeln!(
        svg,
        r#"<rect x="{l}" y="{t}" width="{}" height="{}" fill="none" stroke="black"/>"#,
        r - l,
        b - t
    );
    let xt = if frame.log_x {
        let (a, z) = (frame.x0.log10().floor() as i32, frame.x1.log10().ceil() as i32);
        (a..=z).map(|e| 10f64.powi(e)).filter(|v| *v >= frame.x0 && *v <= frame.x1).collect()
    } else {
        ticks(frame.x0, frame.x1)
    };
    for v in xt {
        let x = frame.fx(v);
        let _ = writeln!(
            svg,
            r#"<line x1="{x:.1}" y1="{b}" x2="{x:.1}" y2="{}" stroke="black"/><text x="{x:.1}" y="{}" text-anchor="middle">{}</text>"#,
            b + 5.0,
            b + 18.0,
            tick_label(v)
        );
    }
    for v in ticks(frame.y0, frame.y1) {
        let y = frame.fy(v);
        let _ = writeln!(
            svg,
            r#"<line x1="{}" y1="{y:.1}" x2="{l}" y2="{y:.1}" stroke="black"/><text x="{}" y="{:.1}" text-anchor="end">{}</text>"#,
            l - 5.0,
            l - 8.0,
            y + 4.0,
            tick_label(v)
        );
    }
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#,
        (l + r) / 2.0,
        HEIGHT - 15.0,
        escape(x_label)
    );
    let _ = writeln!(
        svg,
        r#"<text transform="translate(20 {}) rotate(-90)" text-anchor="middle">{}</text>"#,
        (t + b) / 2.0,
        escape(y_label)
    );
}

fn padded(lo: f64, hi: f64) -> (f64, f64) {
    if !(hi > lo) {
        let pad = if lo == 0.0 { 1.0 } else { lo.abs() * 0.1 };
        return (lo - pad, hi + pad);
    }
    let pad = (hi - lo) * 0.05;
    (lo - pad, hi + pad)
}

impl LinePlot {
    pub fn render(&self) -> String {
        let finite = |v: &f64| v.is_finite() && (!self.log_x || *v > 0.0);
        let xs = self.lines.iter().flat_map(|l| l.x.iter().copied().filter(finite));
        let (x0, x1) = xs.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
        let mut y0 = f64::INFINITY;
        let mut y1 = f64::NEG_INFINITY;
        for l in &self.lines {
            for (k, y) in l.y.iter().enumerate() {
                let e = l.err.as_ref().map_or(0.0, |e| e[k]);
                y0 = y0.min(y - e);
                y1 = y1.max(y + e);
            }
        }
        if !x0.is_finite() || !y0.is_finite() {
            (y0, y1) = (0.0, 1.0);
        }
        let (x0, x1) = if !x0.is_finite() {
            (0.0, 1.0)
        } else if self.log_x {
            if x1 > x0 { (x0 / 1.2, x1 * 1.2) } else { (x0 / 2.0, x0 * 2.0) }
        } else if x1 > x0 {
            (x0, x1)
        } else {
            padded(x0, x1)
        };
        let (y0, y1) = padded(y0, y1);
        let frame = Frame { x0, x1, y0, y1, log_x: self.log_x };

        let mut svg = String::new();
        header(&mut svg, &self.title);
        axes(&mut svg, &frame, &self.x_label, &self.y_label);
        for (i, line) in self.lines.iter().enumerate() {
            let color = PALETTE[i % PALETTE.len()];
            let pts: Vec<String> = line
                .x
                .iter()
                .zip(&line.y)
                .filter(|(x, _)| finite(x))
                .map(|(x, y)| format!("{:.2},{:.2}", frame.fx(*x), frame.fy(*y)))
                .collect();
            let _ = writeln!(
                svg,
                r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#,
                pts.join(" ")
            );
            if let Some(err) = &line.err {
                // thin the bars on dense grids
                let every = (line.x.len() / 40).max(1);
                for k in (0..line.x.len()).step_by(every) {
                    if !finite(&line.x[k]) || err[k] <= 0.0 {
                        continue;
                    }
                    let x = frame.fx(line.x[k]);
                    let _ = writeln!(
                        svg,
                        r#"<line x1="{x:.2}" y1="{:.2}" x2="{x:.2}" y2="{:.2}" stroke="{color}"/>"#,
                        frame.fy(line.y[k] - err[k]),
                        frame.fy(line.y[k] + err[k])
                    );
                }
            }
            if self.markers {
                for (x, y) in line.x.iter().zip(&line.y).filter(|(x, _)| finite(x)) {
                    let _ = writeln!(
                        svg,
                        r#"<circle cx="{:.2}" cy="{:.2}" r="3" fill="{color}"/>"#,
                        frame.fx(*x),
                        frame.fy(*y)
                    );
                }
            }
            let ly = TOP + 10.0 + 18.0 * i as f64;
            let lx = WIDTH - RIGHT + 12.0;
            let _ = writeln!(
                svg,
                r#"<line x1="{lx}" y1="{ly}" x2="{}" y2="{ly}" stroke="{color}" stroke-width="2"/><text x="{}" y="{}">{}</text>"#,
                lx + 20.0,
                lx + 26.0,
                ly + 4.0,
                escape(&line.label)
            );
        }
        svg.push_str("</svg>\n");
        svg
    }
}

/// Blue (−1) through white (0) to red (+1).
fn diverging(v: f64) -> String {
    let v = v.clamp(-1.0, 1.0);
    let (r, g, b) = if v < 0.0 {
        let s = 1.0 + v;
        (s, s, 1.0)
    } else {
        let s = 1.0 - v;
        (1.0, s, s)
    };
    format!(
        "#{:02x}{:02x}{:02x}",
        (r * 255.0).round() as u8,
        (g * 255.0).round() as u8,
        (b * 255.0).round() as u8
    )
}

/// `⟨σᶻᵢ⟩(t)` with the colour scale pinned to `[−1, 1]`; a dashed line
/// marks `t_cut`.
pub fn heatmap(title: &str, times: &[f64], magnetization: &[Vec<f64>], t_cut: f64) -> String {
    let n_sites = magnetization.first().map_or(0, Vec::len);
    let t_end = times.last().copied().unwrap_or(1.0).max(1e-12);
    let frame = Frame {
        x0: 0.0,
        x1: t_end,
        y0: -0.5,
        y1: n_sites as f64 - 0.5,
        log_x: false,
    };
    let mut svg = String::new();
    header(&mut svg, title);
    let stride = (times.len() / 240).max(1);
    let cell_h = (HEIGHT - TOP - BOTTOM) / n_sites.max(1) as f64;
    for k in (0..times.len()).step_by(stride) {
        let x = frame.fx(times[k]);
        let next = times.get(k + stride).copied().unwrap_or(t_end + times.get(1).copied().unwrap_or(0.0));
        let w = (frame.fx(next.min(t_end)) - x).max(0.5);
        for (i, v) in magnetization[k].iter().enumerate() {
            let _ = write!(
                svg,
                r#"<rect x="{x:.2}" y="{:.2}" width="{w:.2}" height="{:.2}" fill="{}"/>"#,
                frame.fy(i as f64 + 0.5),
                cell_h + 0.05,
                diverging(*v)
            );
        }
        svg.push('\n');
    }
    axes(&mut svg, &frame, "t J", "site");
    if t_cut < t_end {
        let x = frame.fx(t_cut);
        let _ = writeln!(
            svg,
            r#"<line x1="{x:.2}" y1="{TOP}" x2="{x:.2}" y2="{}" stroke="black" stroke-dasharray="4 3"/>"#,
            HEIGHT - BOTTOM
        );
    }
    let lx = WIDTH - RIGHT + 30.0;
    for s in 0..=20 {
        let v = 1.0 - s as f64 / 10.0;
        let y = TOP + s as f64 * 10.0;
        let _ = writeln!(svg, r#"<rect x="{lx}" y="{y}" width="18" height="10.5" fill="{}"/>"#, diverging(v));
    }
    for (v, s) in [(1.0, 0), (0.0, 10), (-1.0, 20)] {
        let _ = writeln!(
            svg,
            r#"<text x="{}" y="{}">{}</text>"#,
            lx + 24.0,
            TOP + s as f64 * 10.0 + 9.0,
            v
        );
    }
    svg.push_str("</svg>\n");
    svg
}
