//! Minimal static SVG charts for verification reports: histograms and
//! monthly skill lines. Deterministic output, no dependencies.

use std::fmt::Write;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 360.0;
const MARGIN_LEFT: f64 = 56.0;
const MARGIN_RIGHT: f64 = 16.0;
const MARGIN_TOP: f64 = 34.0;
const MARGIN_BOTTOM: f64 = 42.0;

const SERIES_COLORS: [&str; 6] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b",
];

fn header(title: &str) -> String {
    format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" \
         viewBox=\"0 0 {WIDTH} {HEIGHT}\">\n\
         <rect width=\"{WIDTH}\" height=\"{HEIGHT}\" fill=\"white\"/>\n\
         <text x=\"{x}\" y=\"20\" text-anchor=\"middle\" font-family=\"sans-serif\" \
         font-size=\"14\">{title}</text>\n",
        x = WIDTH / 2.0,
        title = escape(title),
    )
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}

fn fmt_tick(v: f64) -> String {
    if v == 0.0 {
        "0".to_string()
    } else if v.abs() >= 100.0 {
        format!("{v:.0}")
    } else {
        format!("{v:.2}")
    }
}

/// Histogram bar chart of bin counts.
pub fn bar_chart(title: &str, counts: &[u64]) -> String {
    let mut out = header(title);
    let plot_w = WIDTH - MARGIN_LEFT - MARGIN_RIGHT;
    let plot_h = HEIGHT - MARGIN_TOP - MARGIN_BOTTOM;
    let max = counts.iter().copied().max().unwrap_or(1).max(1) as f64;
    let n = counts.len().max(1) as f64;
    let bar_w = plot_w / n;

    // axes
    let _ = write!(
        out,
        "<line x1=\"{l}\" y1=\"{b}\" x2=\"{r}\" y2=\"{b}\" stroke=\"black\"/>\n\
         <line x1=\"{l}\" y1=\"{t}\" x2=\"{l}\" y2=\"{b}\" stroke=\"black\"/>\n",
        l = MARGIN_LEFT,
        r = WIDTH - MARGIN_RIGHT,
        t = MARGIN_TOP,
        b = HEIGHT - MARGIN_BOTTOM,
    );
    let _ = writeln!(
        out,
        "<text x=\"{x}\" y=\"{y}\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">{v}</text>",
        x = MARGIN_LEFT - 6.0,
        y = MARGIN_TOP + 4.0,
        v = max as u64,
    );
    for (i, &count) in counts.iter().enumerate() {
        let h = plot_h * count as f64 / max;
        let x = MARGIN_LEFT + i as f64 * bar_w;
        let y = HEIGHT - MARGIN_BOTTOM - h;
        let _ = writeln!(
            out,
            "<rect x=\"{:.2}\" y=\"{:.2}\" width=\"{:.2}\" height=\"{:.2}\" \
             fill=\"#4a90d9\" stroke=\"white\" stroke-width=\"0.5\"/>",
            x, y, bar_w, h
        );
    }
    let _ = write!(
        out,
        "<text x=\"{x}\" y=\"{y}\" text-anchor=\"middle\" font-family=\"sans-serif\" \
         font-size=\"11\">bin (1..{n})</text>\n</svg>\n",
        x = MARGIN_LEFT + plot_w / 2.0,
        y = HEIGHT - 12.0,
        n = counts.len(),
    );
    out
}

/// Multi-series line chart over shared x labels (e.g. months).
pub fn line_chart(title: &str, labels: &[String], series: &[(String, Vec<Option<f64>>)]) -> String {
    let mut out = header(title);
    let plot_w = WIDTH - MARGIN_LEFT - MARGIN_RIGHT;
    let plot_h = HEIGHT - MARGIN_TOP - MARGIN_BOTTOM;

    let values: Vec<f64> = series
        .iter()
        .flat_map(|(_, points)| points.iter().flatten().copied())
        .collect();
    let (mut lo, mut hi) = values
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
            (lo.min(v), hi.max(v))
        });
    if !lo.is_finite() || !hi.is_finite() {
        lo = 0.0;
        hi = 1.0;
    }
    lo = lo.min(0.0);
    hi = hi.max(0.0);
    if hi - lo < 1e-9 {
        hi = lo + 1.0;
    }
    let pad = 0.05 * (hi - lo);
    let (lo, hi) = (lo - pad, hi + pad);

    let x_at = |i: usize| {
        let n = labels.len().max(2) as f64;
        MARGIN_LEFT + plot_w * i as f64 / (n - 1.0)
    };
    let y_at = |v: f64| HEIGHT - MARGIN_BOTTOM - plot_h * (v - lo) / (hi - lo);

    // frame, zero line, y ticks
    let _ = write!(
        out,
        "<line x1=\"{l}\" y1=\"{b}\" x2=\"{r}\" y2=\"{b}\" stroke=\"black\"/>\n\
         <line x1=\"{l}\" y1=\"{t}\" x2=\"{l}\" y2=\"{b}\" stroke=\"black\"/>\n\
         <line x1=\"{l}\" y1=\"{z:.2}\" x2=\"{r}\" y2=\"{z:.2}\" stroke=\"#999\" stroke-dasharray=\"4 3\"/>\n",
        l = MARGIN_LEFT,
        r = WIDTH - MARGIN_RIGHT,
        t = MARGIN_TOP,
        b = HEIGHT - MARGIN_BOTTOM,
        z = y_at(0.0),
    );
    for v in [lo + pad, 0.0, hi - pad] {
        let _ = writeln!(
            out,
            "<text x=\"{x}\" y=\"{y:.2}\" text-anchor=\"end\" font-family=\"sans-serif\" \
             font-size=\"11\">{tick}</text>",
            x = MARGIN_LEFT - 6.0,
            y = y_at(v) + 4.0,
            tick = fmt_tick(v),
        );
    }

    // sparse x labels
    let step = (labels.len() / 8).max(1);
    for (i, label) in labels.iter().enumerate() {
        if i % step == 0 {
            let _ = writeln!(
                out,
                "<text x=\"{x:.2}\" y=\"{y}\" text-anchor=\"middle\" font-family=\"sans-serif\" \
                 font-size=\"10\">{label}</text>",
                x = x_at(i),
                y = HEIGHT - MARGIN_BOTTOM + 16.0,
                label = escape(label),
            );
        }
    }

    for (series_idx, (name, points)) in series.iter().enumerate() {
        let color = SERIES_COLORS[series_idx % SERIES_COLORS.len()];
        let mut path = String::new();
        let mut pen_down = false;
        for (i, point) in points.iter().enumerate() {
            match point {
                Some(v) => {
                    let cmd = if pen_down { 'L' } else { 'M' };
                    let _ = write!(path, "{cmd}{:.2} {:.2} ", x_at(i), y_at(*v));
                    pen_down = true;
                }
                None => pen_down = false,
            }
        }
        let _ = write!(
            out,
            "<path d=\"{path}\" fill=\"none\" stroke=\"{color}\" stroke-width=\"1.8\"/>\n\
             <text x=\"{x}\" y=\"{y}\" font-family=\"sans-serif\" font-size=\"11\" \
             fill=\"{color}\">{name}</text>\n",
            x = MARGIN_LEFT + 8.0,
            y = MARGIN_TOP + 14.0 + 14.0 * series_idx as f64,
            name = escape(name),
        );
    }
    out.push_str("</svg>\n");
    out
}
