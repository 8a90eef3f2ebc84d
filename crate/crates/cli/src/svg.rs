//! Standalone SVG renderings of stored artifacts.

use std::fmt::Write as _;

const WIDTH: f64 = 760.0;
const HEIGHT: f64 = 500.0;
const LEFT: f64 = 90.0;
const TOP: f64 = 40.0;
const PLOT_W: f64 = 520.0;
const PLOT_H: f64 = 390.0;
const CBAR_X: f64 = LEFT + PLOT_W + 30.0;
const CBAR_W: f64 = 18.0;
const CBAR_STEPS: usize = 64;
const MAX_TRACE_BUCKETS: usize = 2000;

const VIRIDIS: [(f64, f64, f64); 5] = [
    (68.0, 1.0, 84.0),
    (59.0, 82.0, 139.0),
    (33.0, 145.0, 140.0),
    (94.0, 201.0, 98.0),
    (253.0, 231.0, 37.0),
];
const DIVERGING: [(f64, f64, f64); 3] = [(33.0, 102.0, 172.0), (247.0, 247.0, 247.0), (178.0, 24.0, 43.0)];
const MISSING: &str = "#c8c8c8";

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ColorScale {
    Sequential,
    /// Symmetric limits, white at zero.
    Diverging,
}

/// Frequency x power grid of values, `values[f * powers.len() + p]`.
pub struct Heatmap<'a> {
    pub title: &'a str,
    pub freqs_ghz: &'a [f64],
    pub powers: &'a [f64],
    pub values: &'a [f64],
    pub value_label: &'a str,
    pub scale: ColorScale,
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

fn interpolate(stops: &[(f64, f64, f64)], x: f64) -> String {
    let x = x.clamp(0.0, 1.0) * (stops.len() - 1) as f64;
    let k = (x.floor() as usize).min(stops.len() - 2);
    let u = x - k as f64;
    let (a, b) = (stops[k], stops[k + 1]);
    let mix = |p: f64, q: f64| (p + (q - p) * u).round() as u8;
    format!("#{:02x}{:02x}{:02x}", mix(a.0, b.0), mix(a.1, b.1), mix(a.2, b.2))
}

/// Colour limits and the mapping of a value to a fill.
struct Colors {
    lo: f64,
    hi: f64,
    scale: ColorScale,
}

impl Colors {
    fn new(values: &[f64], scale: ColorScale) -> Self {
        let finite = values.iter().cloned().filter(|v| v.is_finite());
        let (mut lo, mut hi) = finite.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
        if !lo.is_finite() {
            (lo, hi) = (0.0, 1.0);
        }
        if scale == ColorScale::Diverging {
            let m = lo.abs().max(hi.abs());
            let m = if m > 0.0 { m } else { 1.0 };
            (lo, hi) = (-m, m);
        } else if hi == lo {
            (lo, hi) = (lo - 0.5, hi + 0.5);
        }
        Self { lo, hi, scale }
    }

    fn fill(&self, v: f64) -> String {
        if !v.is_finite() {
            return MISSING.to_string();
        }
        let x = (v - self.lo) / (self.hi - self.lo);
        match self.scale {
            ColorScale::Sequential => interpolate(&VIRIDIS, x),
            ColorScale::Diverging => interpolate(&DIVERGING, x),
        }
    }
}

fn header(s: &mut String, title: &str) {
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="11">"#
    );
    let _ = writeln!(s, r#"<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{}" y="22" text-anchor="middle" font-size="14">{}</text>"#,
        LEFT + PLOT_W / 2.0,
        escape(title)
    );
}

fn frame(s: &mut String, x_label: &str, y_label: &str) {
    let _ = writeln!(
        s,
        r#"<rect class="frame" x="{LEFT}" y="{TOP}" width="{PLOT_W}" height="{PLOT_H}" fill="none" stroke="black"/>"#
    );
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#,
        LEFT + PLOT_W / 2.0,
        TOP + PLOT_H + 40.0,
        escape(x_label)
    );
    let (x, y) = (22.0, TOP + PLOT_H / 2.0);
    let _ = writeln!(
        s,
        r#"<text x="{x}" y="{y}" text-anchor="middle" transform="rotate(-90 {x} {y})">{}</text>"#,
        escape(y_label)
    );
}

fn x_tick(s: &mut String, x: f64, label: &str) {
    let y = TOP + PLOT_H;
    let _ = writeln!(s, r#"<line x1="{x:.2}" y1="{y}" x2="{x:.2}" y2="{}" stroke="black"/>"#, y + 5.0);
    let _ = writeln!(s, r#"<text x="{x:.2}" y="{}" text-anchor="middle">{}</text>"#, y + 18.0, label);
}

fn y_tick(s: &mut String, y: f64, label: &str) {
    let _ = writeln!(s, r#"<line x1="{}" y1="{y:.2}" x2="{LEFT}" y2="{y:.2}" stroke="black"/>"#, LEFT - 5.0);
    let _ = writeln!(s, r#"<text x="{}" y="{:.2}" text-anchor="end">{}</text>"#, LEFT - 8.0, y + 4.0, label);
}

/// Indices of at most `n` evenly spread ticks over `len` entries.
fn tick_indices(len: usize, n: usize) -> Vec<usize> {
    if len <= n {
        return (0..len).collect();
    }
    let mut v: Vec<usize> = (0..n).map(|k| k * (len - 1) / (n - 1)).collect();
    v.dedup();
    v
}

/// Cells are laid out on index axes: frequency to the right, power upwards.
pub fn heatmap(h: &Heatmap) -> String {
    let (nf, np) = (h.freqs_ghz.len(), h.powers.len());
    assert_eq!(h.values.len(), nf * np, "heatmap values do not match the axes");
    let colors = Colors::new(h.values, h.scale);
    let (cw, ch) = (PLOT_W / nf as f64, PLOT_H / np as f64);
    let mut s = String::new();
    header(&mut s, h.title);
    for f in 0..nf {
        for p in 0..np {
            let v = h.values[f * np + p];
            let x = LEFT + f as f64 * cw;
            let y = TOP + PLOT_H - (p + 1) as f64 * ch;
            let _ = writeln!(
                s,
                r#"<rect class="cell" x="{x:.3}" y="{y:.3}" width="{cw:.3}" height="{ch:.3}" fill="{}"/>"#,
                colors.fill(v)
            );
        }
    }
    frame(&mut s, "drive frequency [GHz]", "drive amplitude epsilon [rad/s]");
    for f in tick_indices(nf, 6) {
        x_tick(&mut s, LEFT + (f as f64 + 0.5) * cw, &format!("{:.4}", h.freqs_ghz[f]));
    }
    for p in tick_indices(np, 8) {
        y_tick(&mut s, TOP + PLOT_H - (p as f64 + 0.5) * ch, &format!("{:.2e}", h.powers[p]));
    }
    colorbar(&mut s, &colors, h.value_label);
    s.push_str("</svg>\n");
    s
}

fn colorbar(s: &mut String, colors: &Colors, label: &str) {
    let step = PLOT_H / CBAR_STEPS as f64;
    for k in 0..CBAR_STEPS {
        let v = colors.lo + (colors.hi - colors.lo) * (k as f64 + 0.5) / CBAR_STEPS as f64;
        let y = TOP + PLOT_H - (k + 1) as f64 * step;
        let _ = writeln!(
            s,
            r#"<rect class="cbar" x="{CBAR_X}" y="{y:.3}" width="{CBAR_W}" height="{:.3}" fill="{}"/>"#,
            step + 0.2,
            colors.fill(v)
        );
    }
    let _ = writeln!(
        s,
        r#"<rect x="{CBAR_X}" y="{TOP}" width="{CBAR_W}" height="{PLOT_H}" fill="none" stroke="black"/>"#
    );
    for k in 0..=4 {
        let u = k as f64 / 4.0;
        let v = colors.lo + (colors.hi - colors.lo) * u;
        let y = TOP + PLOT_H * (1.0 - u);
        let _ = writeln!(
            s,
            r#"<text class="cbar-tick" x="{}" y="{:.2}">{:.3}</text>"#,
            CBAR_X + CBAR_W + 5.0,
            y + 4.0,
            v
        );
    }
    let (x, y) = (CBAR_X + CBAR_W + 58.0, TOP + PLOT_H / 2.0);
    let _ = writeln!(
        s,
        r#"<text x="{x}" y="{y}" text-anchor="middle" transform="rotate(-90 {x} {y})">{}</text>"#,
        escape(label)
    );
}

/// Min and max per bucket, so that steps survive decimation.
fn envelope(y: &[f64], buckets: usize) -> Vec<(usize, f64)> {
    if y.len() <= 2 * buckets {
        return y.iter().cloned().enumerate().collect();
    }
    let size = y.len().div_ceil(buckets);
    let mut out = Vec::with_capacity(2 * buckets);
    for (b, chunk) in y.chunks(size).enumerate() {
        let base = b * size;
        let (mut imin, mut imax) = (0, 0);
        for (k, v) in chunk.iter().enumerate() {
            if *v < chunk[imin] {
                imin = k;
            }
            if *v > chunk[imax] {
                imax = k;
            }
        }
        let (a, c) = if imin <= imax { (imin, imax) } else { (imax, imin) };
        out.push((base + a, chunk[a]));
        if c != a {
            out.push((base + c, chunk[c]));
        }
    }
    out
}

/// Time trace with an optional horizontal threshold.
pub fn trace(title: &str, dt: f64, y: &[f64], y_label: &str, threshold: Option<f64>) -> String {
    let mut s = String::new();
    header(&mut s, title);
    let t_end = dt * y.len().max(1) as f64;
    let mut lo = y.iter().cloned().fold(f64::INFINITY, f64::min);
    let mut hi = y.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if let Some(th) = threshold {
        lo = lo.min(th);
        hi = hi.max(th);
    }
    if !(hi > lo) {
        (lo, hi) = (lo - 0.5, lo + 0.5);
    }
    let pad = 0.05 * (hi - lo);
    let (lo, hi) = (lo - pad, hi + pad);
    let px = |t: f64| LEFT + PLOT_W * t / t_end;
    let py = |v: f64| TOP + PLOT_H * (hi - v) / (hi - lo);
    let mut points = String::new();
    for (k, v) in envelope(y, MAX_TRACE_BUCKETS) {
        let _ = write!(points, "{:.2},{:.2} ", px(k as f64 * dt), py(v));
    }
    let _ = writeln!(
        s,
        r##"<polyline class="trace" fill="none" stroke="#1f4e9a" stroke-width="0.6" points="{}"/>"##,
        points.trim_end()
    );
    if let Some(th) = threshold {
        let _ = writeln!(
            s,
            r##"<line class="threshold" x1="{LEFT}" y1="{y:.2}" x2="{}" y2="{y:.2}" stroke="#d62728" stroke-dasharray="6 4"/>"##,
            LEFT + PLOT_W,
            y = py(th)
        );
    }
    frame(&mut s, "time [s]", y_label);
    for k in 0..=5 {
        let t = t_end * k as f64 / 5.0;
        x_tick(&mut s, px(t), &format!("{t:.3e}"));
    }
    for k in 0..=5 {
        let v = lo + (hi - lo) * k as f64 / 5.0;
        y_tick(&mut s, py(v), &format!("{v:.3}"));
    }
    s.push_str("</svg>\n");
    s
}
