//! Minimal dependency-free SVG charts for report bundles.

use std::fmt::Write as _;

const W: f64 = 480.0;
const H: f64 = 320.0;
const PAD: f64 = 48.0;

fn bounds(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = values
        .filter(|v| v.is_finite())
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
    if !lo.is_finite() {
        (0.0, 1.0)
    } else if hi - lo < 1e-12 {
        (lo - 0.5, hi + 0.5)
    } else {
        (lo, hi)
    }
}

fn header(out: &mut String, title: &str) {
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="11">"#
    );
    let _ = writeln!(out, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let _ = writeln!(out, r#"<text x="{}" y="20" text-anchor="middle" font-size="13">{}</text>"#, W / 2.0, escape(title));
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Line chart of `(x, y)` points with labelled axes.
pub fn line_chart_svg(title: &str, x_label: &str, y_label: &str, points: &[(f64, f64)]) -> String {
    let (x0, x1) = bounds(points.iter().map(|p| p.0));
    let (y0, y1) = bounds(points.iter().map(|p| p.1).chain([0.0]));
    let sx = |x: f64| PAD + (x - x0) / (x1 - x0) * (W - 2.0 * PAD);
    let sy = |y: f64| H - PAD - (y - y0) / (y1 - y0) * (H - 2.0 * PAD);
    let mut out = String::new();
    header(&mut out, title);
    let _ = writeln!(
        out,
        r#"<path d="M{PAD} {PAD} V{} H{}" fill="none" stroke="black"/>"#,
        H - PAD,
        W - PAD
    );
    let _ = writeln!(out, r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#, W / 2.0, H - 10.0, escape(x_label));
    let _ = writeln!(
        out,
        r#"<text x="14" y="{}" text-anchor="middle" transform="rotate(-90 14 {})">{}</text>"#,
        H / 2.0,
        H / 2.0,
        escape(y_label)
    );
    for (v, y) in [(y0, sy(y0)), (y1, sy(y1))] {
        let _ = writeln!(out, r#"<text x="{}" y="{}" text-anchor="end">{v:.3}</text>"#, PAD - 4.0, y + 4.0);
    }
    for (v, x) in [(x0, sx(x0)), (x1, sx(x1))] {
        let _ = writeln!(out, r#"<text x="{x}" y="{}" text-anchor="middle">{v}</text>"#, H - PAD + 14.0);
    }
    if !points.is_empty() {
        let path: Vec<String> = points.iter().map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y))).collect();
        let _ = writeln!(out, r#"<polyline points="{}" fill="none" stroke="steelblue" stroke-width="2"/>"#, path.join(" "));
        for &(x, y) in points {
            let _ = writeln!(out, r#"<circle cx="{:.2}" cy="{:.2}" r="3" fill="steelblue"/>"#, sx(x), sy(y));
        }
    }
    out.push_str("</svg>\n");
    out
}

/// Scatter of node positions colored green to red by `values`; nodes in
/// `highlight` get a black ring.
pub fn node_map_svg(title: &str, positions: &[[f64; 2]], values: &[Option<f64>], highlight: &[usize]) -> String {
    let (x0, x1) = bounds(positions.iter().map(|p| p[0]));
    let (y0, y1) = bounds(positions.iter().map(|p| p[1]));
    let (v0, v1) = bounds(values.iter().flatten().copied());
    let sx = |x: f64| PAD + (x - x0) / (x1 - x0) * (W - 2.0 * PAD);
    let sy = |y: f64| H - PAD - (y - y0) / (y1 - y0) * (H - 2.0 * PAD);
    let mut out = String::new();
    header(&mut out, title);
    for (i, p) in positions.iter().enumerate() {
        let fill = match values.get(i).copied().flatten() {
            Some(v) => {
                let t = ((v - v0) / (v1 - v0)).clamp(0.0, 1.0);
                format!("rgb({},{},60)", (255.0 * t) as u8, (200.0 * (1.0 - t)) as u8)
            }
            None => "lightgray".to_string(),
        };
        let stroke = if highlight.contains(&i) {
            r#" stroke="black" stroke-width="2""#
        } else {
            ""
        };
        let _ = writeln!(out, r#"<circle cx="{:.2}" cy="{:.2}" r="5" fill="{fill}"{stroke}/>"#, sx(p[0]), sy(p[1]));
    }
    out.push_str("</svg>\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn charts_are_well_formed() {
        let svg = line_chart_svg("a<b", "x", "y", &[(0.0, 1.0), (1.0, 0.5)]);
        assert!(svg.starts_with("<svg") && svg.trim_end().ends_with("</svg>"));
        assert!(svg.contains("a&lt;b"));
        let map = node_map_svg("m", &[[0.0, 0.0], [1.0, 1.0]], &[Some(0.1), None], &[0]);
        assert_eq!(map.matches("<circle").count(), 2);
        assert!(line_chart_svg("e", "x", "y", &[]).contains("</svg>"));
    }
}
