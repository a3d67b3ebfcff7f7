use crate::output::CoverageCsv;

const SIZE: f64 = 480.0;
const MARGIN: f64 = 60.0;
const COLORS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"];

fn px(v: f64) -> f64 {
    MARGIN + v.clamp(0.0, 1.0) * SIZE
}

fn py(v: f64) -> f64 {
    MARGIN + (1.0 - v.clamp(0.0, 1.0)) * SIZE
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

/// Legend text from the CSV metadata, e.g. `DRP (prior, euclidean)`.
pub fn legend_label(csv: &CoverageCsv) -> String {
    let method = csv.meta("method").unwrap_or("curve").to_uppercase();
    match (csv.meta("policy"), csv.meta("metric")) {
        (Some(p), Some(m)) if p != "none" => format!("{method} ({p}, {m})"),
        _ => method,
    }
}

/// Expected coverage against credibility for each CSV, with a dashed
/// diagonal and the first curve's binomial band shaded.
pub fn render_svg(curves: &[CoverageCsv]) -> String {
    let total = SIZE + 2.0 * MARGIN;
    let mut s = format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" viewBox=\"0 0 {w} {h}\">\n",
        w = total + 200.0,
        h = total
    );
    s.push_str(&format!(
        "<rect x=\"0\" y=\"0\" width=\"{}\" height=\"{total}\" fill=\"white\"/>\n",
        total + 200.0
    ));
    if let Some(first) = curves.first() {
        let upper = first
            .credibility
            .iter()
            .zip(&first.band_hi)
            .map(|(c, h)| format!("{:.2},{:.2}", px(*c), py(*h)));
        let lower = first
            .credibility
            .iter()
            .zip(&first.band_lo)
            .rev()
            .map(|(c, l)| format!("{:.2},{:.2}", px(*c), py(*l)));
        let pts: Vec<String> = upper.chain(lower).collect();
        s.push_str(&format!(
            "<polygon class=\"band\" points=\"{}\" fill=\"#999999\" fill-opacity=\"0.25\" stroke=\"none\"/>\n",
            pts.join(" ")
        ));
    }
    // Axes box and ticks.
    s.push_str(&format!(
        "<rect x=\"{MARGIN}\" y=\"{MARGIN}\" width=\"{SIZE}\" height=\"{SIZE}\" fill=\"none\" stroke=\"black\"/>\n"
    ));
    for k in 0..=5 {
        let v = k as f64 / 5.0;
        s.push_str(&format!(
            "<text x=\"{:.2}\" y=\"{:.2}\" font-size=\"12\" text-anchor=\"middle\">{v:.1}</text>\n",
            px(v),
            MARGIN + SIZE + 18.0
        ));
        s.push_str(&format!(
            "<text x=\"{:.2}\" y=\"{:.2}\" font-size=\"12\" text-anchor=\"end\">{v:.1}</text>\n",
            MARGIN - 6.0,
            py(v) + 4.0
        ));
    }
    s.push_str(&format!(
        "<text x=\"{:.2}\" y=\"{:.2}\" font-size=\"14\" text-anchor=\"middle\">Credibility level 1 - α</text>\n",
        MARGIN + SIZE / 2.0,
        MARGIN + SIZE + 42.0
    ));
    s.push_str(&format!(
        "<text x=\"18\" y=\"{:.2}\" font-size=\"14\" text-anchor=\"middle\" transform=\"rotate(-90 18 {:.2})\">Expected coverage</text>\n",
        MARGIN + SIZE / 2.0,
        MARGIN + SIZE / 2.0
    ));
    s.push_str(&format!(
        "<line class=\"diagonal\" x1=\"{:.2}\" y1=\"{:.2}\" x2=\"{:.2}\" y2=\"{:.2}\" stroke=\"black\" stroke-dasharray=\"6,4\"/>\n",
        px(0.0),
        py(0.0),
        px(1.0),
        py(1.0)
    ));
    for (i, c) in curves.iter().enumerate() {
        let color = COLORS[i % COLORS.len()];
        let pts: Vec<String> = c
            .credibility
            .iter()
            .zip(&c.ecp)
            .map(|(x, y)| format!("{:.2},{:.2}", px(*x), py(*y)))
            .collect();
        s.push_str(&format!(
            "<polyline points=\"{}\" fill=\"none\" stroke=\"{color}\" stroke-width=\"2\"/>\n",
            pts.join(" ")
        ));
    }
    let lx = MARGIN + SIZE + 20.0;
    for (i, c) in curves.iter().enumerate() {
        let color = COLORS[i % COLORS.len()];
        let y = MARGIN + 10.0 + 22.0 * i as f64;
        s.push_str(&format!(
            "<g class=\"legend-entry\"><rect x=\"{lx:.2}\" y=\"{:.2}\" width=\"14\" height=\"4\" fill=\"{color}\"/><text x=\"{:.2}\" y=\"{:.2}\" font-size=\"12\">{}</text></g>\n",
            y - 2.0,
            lx + 20.0,
            y + 4.0,
            escape(&legend_label(c))
        ));
    }
    if let Some(first) = curves.first() {
        let z = first.meta("band_z").unwrap_or("3");
        s.push_str(&format!(
            "<text class=\"band-note\" x=\"{lx:.2}\" y=\"{:.2}\" font-size=\"11\" fill=\"#555555\">shaded: ±{} binomial σ band</text>\n",
            MARGIN + 10.0 + 22.0 * curves.len() as f64 + 8.0,
            escape(z)
        ));
        s.push_str(&format!(
            "<text class=\"band-note\" x=\"{lx:.2}\" y=\"{:.2}\" font-size=\"11\" fill=\"#555555\">(harness addition)</text>\n",
            MARGIN + 10.0 + 22.0 * curves.len() as f64 + 22.0
        ));
    }
    s.push_str("</svg>\n");
    s
}
