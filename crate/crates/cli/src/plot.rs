//! Self-contained SVG line charts: two polylines, axes, a zero line and a legend.

use std::fmt::Write;

const WIDTH: f64 = 900.0;
const HEIGHT: f64 = 320.0;
const MARGIN: f64 = 48.0;

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn polyline(values: &[f64], lo: f64, hi: f64, colour: &str) -> String {
    let n = values.len().max(2) - 1;
    let span = if hi > lo { hi - lo } else { 1.0 };
    let pts: Vec<String> = values
        .iter()
        .enumerate()
        .map(|(i, v)| {
            let x = MARGIN + (WIDTH - 2.0 * MARGIN) * i as f64 / n as f64;
            let y = HEIGHT - MARGIN - (HEIGHT - 2.0 * MARGIN) * (v - lo) / span;
            format!("{x:.2},{y:.2}")
        })
        .collect();
    format!("<polyline fill=\"none\" stroke=\"{colour}\" stroke-width=\"1.2\" points=\"{}\"/>\n", pts.join(" "))
}

/// Actual (dark) against predicted (orange). `header` goes into a leading comment.
pub fn line_chart(header: &str, title: &str, actual: &[f64], predicted: &[f64]) -> String {
    let finite = actual.iter().chain(predicted).copied().filter(|v| v.is_finite());
    let (mut lo, mut hi) = finite.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
    if !lo.is_finite() {
        (lo, hi) = (-1.0, 1.0);
    }
    let mut s = String::new();
    let _ = writeln!(s, "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" viewBox=\"0 0 {WIDTH} {HEIGHT}\">");
    let _ = writeln!(s, "<!-- {} -->", escape(header));
    let _ = writeln!(s, "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>");
    let _ = writeln!(s, "<text x=\"{MARGIN}\" y=\"24\" font-family=\"sans-serif\" font-size=\"14\">{}</text>", escape(title));
    let (x0, x1, y0, y1) = (MARGIN, WIDTH - MARGIN, HEIGHT - MARGIN, MARGIN);
    let _ = writeln!(s, "<line x1=\"{x0}\" y1=\"{y0}\" x2=\"{x1}\" y2=\"{y0}\" stroke=\"black\"/>");
    let _ = writeln!(s, "<line x1=\"{x0}\" y1=\"{y0}\" x2=\"{x0}\" y2=\"{y1}\" stroke=\"black\"/>");
    if lo < 0.0 && hi > 0.0 {
        let y = HEIGHT - MARGIN - (HEIGHT - 2.0 * MARGIN) * (0.0 - lo) / (hi - lo);
        let _ = writeln!(s, "<line x1=\"{x0}\" y1=\"{y:.2}\" x2=\"{x1}\" y2=\"{y:.2}\" stroke=\"#bbbbbb\" stroke-dasharray=\"4 3\"/>");
    }
    for (v, y) in [(hi, y1), (lo, y0)] {
        let _ = writeln!(s, "<text x=\"4\" y=\"{:.2}\" font-family=\"sans-serif\" font-size=\"10\">{v:.3}</text>", y + 3.0);
    }
    s.push_str(&polyline(actual, lo, hi, "#1f3b73"));
    s.push_str(&polyline(predicted, lo, hi, "#e07b00"));
    let ly = HEIGHT - 14.0;
    let _ = writeln!(s, "<text x=\"{x0}\" y=\"{ly}\" font-family=\"sans-serif\" font-size=\"11\" fill=\"#1f3b73\">actual</text>");
    let _ = writeln!(s, "<text x=\"{}\" y=\"{ly}\" font-family=\"sans-serif\" font-size=\"11\" fill=\"#e07b00\">predicted</text>", x0 + 60.0);
    s.push_str("</svg>\n");
    s
}
