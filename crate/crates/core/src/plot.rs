//! Minimal SVG output: line plots and scalogram heatmaps.

use std::fmt::Write as _;

use crate::wavelet::Scalogram;

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 360.0;
const MARGIN_L: f64 = 70.0;
const MARGIN_R: f64 = 20.0;
const MARGIN_T: f64 = 30.0;
const MARGIN_B: f64 = 45.0;
/// Points kept per series after min/max decimation.
const MAX_POINTS: usize = 2000;
const HEAT_COLS: usize = 360;
const HEAT_ROWS: usize = 160;
const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"];

#[derive(Debug, Clone)]
pub struct Series {
    pub name: String,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
}

impl Series {
    pub fn new(name: impl Into<String>, x: Vec<f64>, y: Vec<f64>) -> Self {
        Self { name: name.into(), x, y }
    }
}

#[derive(Debug, Clone, Default)]
pub struct LinePlot {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub series: Vec<Series>,
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn tick(v: f64) -> String {
    if v == 0.0 {
        "0".into()
    } else if v.abs() >= 1e4 || v.abs() < 1e-2 {
        format!("{v:.2e}")
    } else {
        format!("{:.3}", v).trim_end_matches('0').trim_end_matches('.').to_string()
    }
}

/// Keeps the first/min/max/last point of each bucket so peaks survive.
fn decimate(x: &[f64], y: &[f64]) -> Vec<(f64, f64)> {
    let n = x.len().min(y.len());
    if n <= MAX_POINTS {
        return (0..n).map(|i| (x[i], y[i])).collect();
    }
    let buckets = MAX_POINTS / 2;
    let mut out = Vec::with_capacity(MAX_POINTS + 2);
    for b in 0..buckets {
        let lo = b * n / buckets;
        let hi = ((b + 1) * n / buckets).max(lo + 1);
        let (mut imin, mut imax) = (lo, lo);
        for i in lo..hi {
            if y[i] < y[imin] {
                imin = i;
            }
            if y[i] > y[imax] {
                imax = i;
            }
        }
        let (a, c) = if imin <= imax { (imin, imax) } else { (imax, imin) };
        out.push((x[a], y[a]));
        if c != a {
            out.push((x[c], y[c]));
        }
    }
    out
}

fn frame(svg: &mut String, title: &str, x_label: &str, y_label: &str) {
    let _ = write!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="11">
<rect width="100%" height="100%" fill="white"/>
<text x="{}" y="18" text-anchor="middle" font-size="13">{}</text>
<text x="{}" y="{}" text-anchor="middle">{}</text>
<text x="14" y="{}" text-anchor="middle" transform="rotate(-90 14 {})">{}</text>
"#,
        WIDTH / 2.0,
        escape(title),
        MARGIN_L + (WIDTH - MARGIN_L - MARGIN_R) / 2.0,
        HEIGHT - 8.0,
        escape(x_label),
        MARGIN_T + (HEIGHT - MARGIN_T - MARGIN_B) / 2.0,
        MARGIN_T + (HEIGHT - MARGIN_T - MARGIN_B) / 2.0,
        escape(y_label),
    );
}

fn finite_range(v: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = v.filter(|x| x.is_finite()).fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), x| (l.min(x), h.max(x)));
    if !lo.is_finite() {
        (0.0, 1.0)
    } else if hi - lo <= f64::EPSILON * lo.abs().max(1.0) {
        (lo - 0.5 * lo.abs().max(1.0), hi + 0.5 * hi.abs().max(1.0))
    } else {
        (lo, hi)
    }
}

impl LinePlot {
    pub fn new(title: impl Into<String>, x_label: impl Into<String>, y_label: impl Into<String>) -> Self {
        Self { title: title.into(), x_label: x_label.into(), y_label: y_label.into(), series: Vec::new() }
    }

    pub fn with(mut self, s: Series) -> Self {
        self.series.push(s);
        self
    }

    pub fn to_svg(&self) -> String {
        let (x0, x1) = finite_range(self.series.iter().flat_map(|s| s.x.iter().copied()));
        let (y0, y1) = finite_range(self.series.iter().flat_map(|s| s.y.iter().copied()));
        let pw = WIDTH - MARGIN_L - MARGIN_R;
        let ph = HEIGHT - MARGIN_T - MARGIN_B;
        let px = |x: f64| MARGIN_L + (x - x0) / (x1 - x0) * pw;
        let py = |y: f64| MARGIN_T + (1.0 - (y - y0) / (y1 - y0)) * ph;

        let mut svg = String::new();
        frame(&mut svg, &self.title, &self.x_label, &self.y_label);
        let _ = writeln!(svg, r##"<rect x="{MARGIN_L}" y="{MARGIN_T}" width="{pw}" height="{ph}" fill="none" stroke="#444"/>"##);
        for k in 0..=4 {
            let f = k as f64 / 4.0;
            let (xv, yv) = (x0 + f * (x1 - x0), y0 + f * (y1 - y0));
            let _ = writeln!(
                svg,
                r##"<text x="{:.1}" y="{:.1}" text-anchor="middle">{}</text><text x="{:.1}" y="{:.1}" text-anchor="end">{}</text>"##,
                px(xv),
                MARGIN_T + ph + 15.0,
                tick(xv),
                MARGIN_L - 5.0,
                py(yv) + 4.0,
                tick(yv)
            );
        }
        for (k, s) in self.series.iter().enumerate() {
            let color = PALETTE[k % PALETTE.len()];
            let pts = decimate(&s.x, &s.y);
            let mut d = String::with_capacity(pts.len() * 16);
            for (i, (x, y)) in pts.iter().filter(|(x, y)| x.is_finite() && y.is_finite()).enumerate() {
                let _ = write!(d, "{}{:.2},{:.2}", if i == 0 { "M" } else { " L" }, px(*x), py(*y));
            }
            let _ = writeln!(svg, r#"<path d="{d}" fill="none" stroke="{color}" stroke-width="1"/>"#);
            let _ = writeln!(
                svg,
                r#"<text x="{:.1}" y="{:.1}" fill="{color}">{}</text>"#,
                MARGIN_L + 8.0,
                MARGIN_T + 14.0 + 13.0 * k as f64,
                escape(&s.name)
            );
        }
        svg.push_str("</svg>\n");
        svg
    }
}

/// Piecewise-linear approximation of the viridis colormap.
fn colormap(v: f64) -> (u8, u8, u8) {
    const STOPS: [(f64, f64, f64); 5] =
        [(68.0, 1.0, 84.0), (59.0, 82.0, 139.0), (33.0, 145.0, 140.0), (94.0, 201.0, 98.0), (253.0, 231.0, 37.0)];
    let x = v.clamp(0.0, 1.0) * (STOPS.len() - 1) as f64;
    let i = (x.floor() as usize).min(STOPS.len() - 2);
    let f = x - i as f64;
    let lerp = |a: f64, b: f64| (a + f * (b - a)).round() as u8;
    (lerp(STOPS[i].0, STOPS[i + 1].0), lerp(STOPS[i].1, STOPS[i + 1].1), lerp(STOPS[i].2, STOPS[i + 1].2))
}

/// Heatmap of `|W|/√ω` with time across and scale (log axis) upward.
pub fn scalogram_svg(s: &Scalogram, title: &str) -> String {
    let mut svg = String::new();
    frame(&mut svg, title, "t", "scale ω (log)");
    let pw = WIDTH - MARGIN_L - MARGIN_R;
    let ph = HEIGHT - MARGIN_T - MARGIN_B;
    if s.is_empty() {
        svg.push_str("</svg>\n");
        return svg;
    }
    let (nt, ns) = (s.n_times(), s.n_scales());
    let cols = nt.min(HEAT_COLS);
    let rows = ns.min(HEAT_ROWS);
    let mut cells = vec![0.0; cols * rows];
    for r in 0..rows {
        for c in 0..cols {
            let (j0, j1) = (r * ns / rows, ((r + 1) * ns / rows).max(r * ns / rows + 1));
            let (i0, i1) = (c * nt / cols, ((c + 1) * nt / cols).max(c * nt / cols + 1));
            let mut m: f64 = 0.0;
            for j in j0..j1 {
                let norm = s.scales[j].sqrt();
                for i in i0..i1 {
                    m = m.max(s.get(i, j).norm() / norm);
                }
            }
            cells[r * cols + c] = m;
        }
    }
    let max = cells.iter().cloned().fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    let (lw0, lw1) = (s.scales[0].ln(), s.scales[ns - 1].ln().max(s.scales[0].ln() + 1e-12));
    let cw = pw / cols as f64;
    for r in 0..rows {
        let j0 = r * ns / rows;
        let j1 = ((r + 1) * ns / rows).max(j0 + 1) - 1;
        let lo = if j0 == 0 { lw0 } else { 0.5 * (s.scales[j0 - 1].ln() + s.scales[j0].ln()) };
        let hi = if j1 + 1 >= ns { lw1 } else { 0.5 * (s.scales[j1].ln() + s.scales[j1 + 1].ln()) };
        let y_hi = MARGIN_T + (1.0 - (hi - lw0) / (lw1 - lw0)) * ph;
        let y_lo = MARGIN_T + (1.0 - (lo - lw0) / (lw1 - lw0)) * ph;
        for c in 0..cols {
            let (cr, cg, cb) = colormap(cells[r * cols + c] / max);
            let _ = writeln!(
                svg,
                r#"<rect x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="rgb({cr},{cg},{cb})"/>"#,
                MARGIN_L + c as f64 * cw,
                y_hi,
                cw + 0.3,
                (y_lo - y_hi).max(0.3) + 0.3
            );
        }
    }
    let (t0, t1) = (s.times[0], s.times[nt - 1]);
    for k in 0..=4 {
        let f = k as f64 / 4.0;
        let t = t0 + f * (t1 - t0);
        let lw = lw0 + f * (lw1 - lw0);
        let _ = writeln!(
            svg,
            r##"<text x="{:.1}" y="{:.1}" text-anchor="middle">{}</text><text x="{:.1}" y="{:.1}" text-anchor="end">{}</text>"##,
            MARGIN_L + f * pw,
            MARGIN_T + ph + 15.0,
            tick(t),
            MARGIN_L - 5.0,
            MARGIN_T + (1.0 - f) * ph + 4.0,
            tick(lw.exp())
        );
    }
    let _ = writeln!(svg, r##"<rect x="{MARGIN_L}" y="{MARGIN_T}" width="{pw}" height="{ph}" fill="none" stroke="#444"/>"##);
    svg.push_str("</svg>\n");
    svg
}
