//! Minimal deterministic SVG charts.

use std::fmt::Write as _;

const W: f64 = 640.0;
const H: f64 = 480.0;
const MARGIN: f64 = 60.0;
const PALETTE: [&str; 8] =
    ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#e377c2", "#17becf"];

pub fn color(i: usize) -> &'static str {
    PALETTE[i % PALETTE.len()]
}

fn esc(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

/// Data-to-pixel mapping over a padded bounding box.
struct Axes {
    x: (f64, f64),
    y: (f64, f64),
}

impl Axes {
    fn fit(points: impl Iterator<Item = (f64, f64)>) -> Self {
        let (mut x, mut y) = ((f64::INFINITY, f64::NEG_INFINITY), (f64::INFINITY, f64::NEG_INFINITY));
        for (px, py) in points.filter(|p| p.0.is_finite() && p.1.is_finite()) {
            x = (x.0.min(px), x.1.max(px));
            y = (y.0.min(py), y.1.max(py));
        }
        let pad = |(lo, hi): (f64, f64)| {
            if !lo.is_finite() {
                return (0.0, 1.0);
            }
            let span = if hi > lo { hi - lo } else { lo.abs().max(1.0) };
            (lo - 0.05 * span, hi + 0.05 * span)
        };
        Axes { x: pad(x), y: pad(y) }
    }

    fn px(&self, x: f64) -> f64 {
        MARGIN + (x - self.x.0) / (self.x.1 - self.x.0) * (W - 2.0 * MARGIN)
    }

    fn py(&self, y: f64) -> f64 {
        H - MARGIN - (y - self.y.0) / (self.y.1 - self.y.0) * (H - 2.0 * MARGIN)
    }

    fn sx(&self, dx: f64) -> f64 {
        dx / (self.x.1 - self.x.0) * (W - 2.0 * MARGIN)
    }

    fn sy(&self, dy: f64) -> f64 {
        dy / (self.y.1 - self.y.0) * (H - 2.0 * MARGIN)
    }
}

fn frame(s: &mut String, axes: &Axes, title: &str, xlabel: &str, ylabel: &str) {
    let _ = writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" font-family="sans-serif" font-size="11">"#);
    let _ = writeln!(s, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let _ = writeln!(s, r#"<text x="{}" y="20" text-anchor="middle" font-size="14">{}</text>"#, W / 2.0, esc(title));
    let (x0, y0, x1, y1) = (MARGIN, H - MARGIN, W - MARGIN, MARGIN);
    let _ = writeln!(s, r#"<path d="M{x0},{y1} L{x0},{y0} L{x1},{y0}" fill="none" stroke="black"/>"#);
    for k in 0..=4 {
        let t = k as f64 / 4.0;
        let xv = axes.x.0 + t * (axes.x.1 - axes.x.0);
        let yv = axes.y.0 + t * (axes.y.1 - axes.y.0);
        let (px, py) = (axes.px(xv), axes.py(yv));
        let _ = writeln!(s, r#"<text x="{px:.1}" y="{:.1}" text-anchor="middle">{xv:.3}</text>"#, y0 + 16.0);
        let _ = writeln!(s, r#"<text x="{:.1}" y="{py:.1}" text-anchor="end">{yv:.3}</text>"#, x0 - 6.0);
    }
    let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#, W / 2.0, H - 15.0, esc(xlabel));
    let _ = writeln!(
        s,
        r#"<text x="15" y="{}" text-anchor="middle" transform="rotate(-90 15 {})">{}</text>"#,
        H / 2.0,
        H / 2.0,
        esc(ylabel)
    );
}

fn legend(s: &mut String, names: &[String]) {
    for (i, n) in names.iter().enumerate() {
        let y = MARGIN + 14.0 * i as f64;
        let _ = writeln!(s, r#"<rect x="{}" y="{:.1}" width="10" height="10" fill="{}"/>"#, W - MARGIN + 5.0, y - 9.0, color(i));
        let _ = writeln!(s, r#"<text x="{}" y="{y:.1}">{}</text>"#, W - MARGIN + 18.0, esc(n));
    }
}

pub struct Point {
    pub x: f64,
    pub y: f64,
    pub label: String,
    pub group: usize,
}

/// Axis-aligned ellipse: center and semi-axes.
pub struct Ellipse {
    pub cx: f64,
    pub cy: f64,
    pub rx: f64,
    pub ry: f64,
    pub group: usize,
}

pub fn scatter(
    title: &str,
    xlabel: &str,
    ylabel: &str,
    groups: &[String],
    points: &[Point],
    ellipses: &[Ellipse],
) -> String {
    let axes = Axes::fit(
        points
            .iter()
            .map(|p| (p.x, p.y))
            .chain(ellipses.iter().flat_map(|e| [(e.cx - e.rx, e.cy - e.ry), (e.cx + e.rx, e.cy + e.ry)])),
    );
    let mut s = String::new();
    frame(&mut s, &axes, title, xlabel, ylabel);
    for e in ellipses {
        let _ = writeln!(
            s,
            r#"<ellipse cx="{:.2}" cy="{:.2}" rx="{:.2}" ry="{:.2}" fill="{}" fill-opacity="0.15" stroke="{}"/>"#,
            axes.px(e.cx),
            axes.py(e.cy),
            axes.sx(e.rx),
            axes.sy(e.ry),
            color(e.group),
            color(e.group)
        );
    }
    for p in points.iter().filter(|p| p.x.is_finite() && p.y.is_finite()) {
        let (x, y) = (axes.px(p.x), axes.py(p.y));
        let _ = writeln!(s, r#"<circle cx="{x:.2}" cy="{y:.2}" r="4" fill="{}"><title>{}</title></circle>"#, color(p.group), esc(&p.label));
        if !p.label.is_empty() {
            let _ = writeln!(s, r#"<text x="{:.2}" y="{:.2}" font-size="9">{}</text>"#, x + 5.0, y - 5.0, esc(&p.label));
        }
    }
    legend(&mut s, groups);
    s.push_str("</svg>\n");
    s
}

/// One polyline per series.
pub fn lines(title: &str, xlabel: &str, ylabel: &str, series: &[(String, Vec<(f64, f64)>)]) -> String {
    let axes = Axes::fit(series.iter().flat_map(|(_, pts)| pts.iter().copied()));
    let mut s = String::new();
    frame(&mut s, &axes, title, xlabel, ylabel);
    for (i, (_, pts)) in series.iter().enumerate() {
        let d: Vec<String> = pts
            .iter()
            .filter(|p| p.0.is_finite() && p.1.is_finite())
            .map(|&(x, y)| format!("{:.2},{:.2}", axes.px(x), axes.py(y)))
            .collect();
        let _ = writeln!(s, r#"<polyline points="{}" fill="none" stroke="{}" stroke-width="1.5"/>"#, d.join(" "), color(i));
    }
    let names: Vec<String> = series.iter().map(|(n, _)| n.clone()).collect();
    legend(&mut s, &names);
    s.push_str("</svg>\n");
    s
}

/// Vertical bars, one per label.
pub fn bars(title: &str, ylabel: &str, bars: &[(String, f64)]) -> String {
    let axes = Axes::fit(
        bars.iter().enumerate().map(|(i, b)| (i as f64, b.1)).chain([(0.0, 0.0), (bars.len() as f64, 0.0)]),
    );
    let mut s = String::new();
    frame(&mut s, &axes, title, "", ylabel);
    let width = axes.sx(0.8);
    for (i, (label, v)) in bars.iter().enumerate() {
        let (x, y, base) = (axes.px(i as f64 + 0.1), axes.py(v.max(0.0)), axes.py(0.0));
        let _ = writeln!(
            s,
            r#"<rect x="{x:.2}" y="{y:.2}" width="{width:.2}" height="{:.2}" fill="{}"><title>{} {v}</title></rect>"#,
            (base - y).abs(),
            color(i),
            esc(label)
        );
        let _ = writeln!(s, r#"<text x="{:.2}" y="{:.2}" text-anchor="middle" font-size="9">{}</text>"#, x + width / 2.0, base - 4.0, esc(label));
    }
    s.push_str("</svg>\n");
    s
}
