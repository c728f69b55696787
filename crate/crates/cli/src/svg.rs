//! Self-contained SVG line plot of the elbow curve.

use std::fmt::Write as _;

use gaitbow::codebook::ElbowCurve;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 400.0;
const MARGIN: f64 = 60.0;

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace("--", "- -")
}

pub fn elbow_svg(curve: &ElbowCurve, metadata: &[(String, String)]) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
    );
    out.push_str("<!--\n");
    for (k, v) in metadata {
        let _ = writeln!(out, "{}={}", escape(k), escape(v));
    }
    out.push_str("-->\n");
    let _ = writeln!(
        out,
        r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#
    );

    let (x0, x1) = (MARGIN, WIDTH - MARGIN / 2.0);
    let (y0, y1) = (HEIGHT - MARGIN, MARGIN / 2.0);
    let _ = writeln!(
        out,
        r#"<path d="M{x0} {y1} L{x0} {y0} L{x1} {y0}" stroke="black" fill="none"/>"#
    );
    let _ = writeln!(
        out,
        r#"<text x="{}" y="{}" text-anchor="middle" font-family="sans-serif" font-size="14">k</text>"#,
        (x0 + x1) / 2.0,
        HEIGHT - 15.0
    );
    let _ = writeln!(
        out,
        r#"<text x="18" y="{}" text-anchor="middle" font-family="sans-serif" font-size="14" transform="rotate(-90 18 {})">WCSS</text>"#,
        (y0 + y1) / 2.0,
        (y0 + y1) / 2.0
    );

    if let (Some(first), Some(last)) = (curve.points.first(), curve.points.last()) {
        let (k_lo, k_hi) = (first.0 as f64, last.0 as f64);
        let w_max = curve.points.iter().map(|p| p.1).fold(0.0, f64::max);
        let w_max = if w_max > 0.0 { w_max } else { 1.0 };
        let sx = |k: f64| {
            if k_hi > k_lo {
                x0 + (k - k_lo) / (k_hi - k_lo) * (x1 - x0)
            } else {
                (x0 + x1) / 2.0
            }
        };
        let sy = |w: f64| y0 - w / w_max * (y0 - y1);

        for (k, _) in &curve.points {
            let x = sx(*k as f64);
            let _ = writeln!(
                out,
                r#"<text x="{x:.1}" y="{}" text-anchor="middle" font-family="sans-serif" font-size="10">{k}</text>"#,
                y0 + 14.0
            );
        }
        for i in 0..=4 {
            let w = w_max * i as f64 / 4.0;
            let _ = writeln!(
                out,
                r#"<text x="{}" y="{:.1}" text-anchor="end" font-family="sans-serif" font-size="10">{w:.2}</text>"#,
                x0 - 4.0,
                sy(w) + 3.0
            );
        }
        let pts: Vec<String> = curve
            .points
            .iter()
            .map(|(k, w)| format!("{:.1},{:.1}", sx(*k as f64), sy(*w)))
            .collect();
        let _ = writeln!(
            out,
            r#"<polyline points="{}" stroke="steelblue" stroke-width="2" fill="none"/>"#,
            pts.join(" ")
        );
        for (k, w) in &curve.points {
            let _ = writeln!(
                out,
                r#"<circle cx="{:.1}" cy="{:.1}" r="3" fill="steelblue"/>"#,
                sx(*k as f64),
                sy(*w)
            );
        }
    }
    out.push_str("</svg>\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_marker_per_point() {
        let curve = ElbowCurve {
            points: vec![(2, 10.0), (3, 6.0), (4, 5.0)],
        };
        let svg = elbow_svg(&curve, &[("seed".into(), "42".into())]);
        assert!(svg.starts_with("<svg"));
        assert!(svg.trim_end().ends_with("</svg>"));
        assert_eq!(svg.matches("<circle").count(), 3);
        assert!(svg.contains("seed=42"));
    }

    #[test]
    fn empty_curve_still_renders() {
        let svg = elbow_svg(&ElbowCurve { points: vec![] }, &[]);
        assert!(!svg.contains("<polyline"));
    }
}
