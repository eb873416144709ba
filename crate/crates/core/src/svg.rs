//! Minimal static SVG log-log plots.

use std::fmt::Write;

#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub label: String,
    pub color: String,
    /// `(log n, log value)` pairs; non-finite points are skipped.
    pub points: Vec<(f64, f64)>,
    pub dashed: bool,
}

const W: f64 = 640.0;
const H: f64 = 420.0;
const MARGIN: f64 = 56.0;

/// Line through `(x0, y0)` with slope `slope`, sampled at the ends of `[x0, x1]`.
pub fn reference_line(label: &str, x0: f64, x1: f64, y0: f64, slope: f64) -> Series {
    Series {
        label: label.to_string(),
        color: "#c0392b".into(),
        points: vec![(x0, y0), (x1, y0 + slope * (x1 - x0))],
        dashed: true,
    }
}

fn bounds(series: &[Series]) -> Option<(f64, f64, f64, f64)> {
    let pts = series.iter().flat_map(|s| s.points.iter()).filter(|p| p.0.is_finite() && p.1.is_finite());
    let mut b: Option<(f64, f64, f64, f64)> = None;
    for &(x, y) in pts {
        b = Some(match b {
            None => (x, x, y, y),
            Some((a, c, d, e)) => (a.min(x), c.max(x), d.min(y), e.max(y)),
        });
    }
    b.map(|(x0, x1, y0, y1)| {
        let dx = if x1 > x0 { 0.0 } else { 0.5 };
        let dy = if y1 > y0 { 0.0 } else { 0.5 };
        (x0 - dx, x1 + dx, y0 - dy, y1 + dy)
    })
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Renders natural-log coordinates; tick labels show powers of ten of `n`
/// and the natural log of the value.
pub fn loglog_plot(title: &str, x_label: &str, y_label: &str, series: &[Series]) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(out, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let _ = writeln!(out, r#"<text x="{}" y="20" text-anchor="middle" font-size="14">{}</text>"#, W / 2.0, escape(title));
    let Some((x0, x1, y0, y1)) = bounds(series) else {
        out.push_str("</svg>\n");
        return out;
    };
    let sx = |x: f64| MARGIN + (x - x0) / (x1 - x0) * (W - 2.0 * MARGIN);
    let sy = |y: f64| H - MARGIN - (y - y0) / (y1 - y0) * (H - 2.0 * MARGIN);
    let _ = writeln!(
        out,
        r#"<path d="M{m} {t} V{b} H{r}" fill="none" stroke="black"/>"#,
        m = MARGIN,
        t = MARGIN,
        b = H - MARGIN,
        r = W - MARGIN
    );
    let ten = 10f64.ln();
    let (d0, d1) = ((x0 / ten).ceil() as i64, (x1 / ten).floor() as i64);
    for d in d0..=d1 {
        let x = sx(d as f64 * ten);
        let _ = writeln!(
            out,
            r#"<line x1="{x:.1}" y1="{y:.1}" x2="{x:.1}" y2="{y2:.1}" stroke="black"/><text x="{x:.1}" y="{ty:.1}" text-anchor="middle">1e{d}</text>"#,
            y = H - MARGIN,
            y2 = H - MARGIN + 5.0,
            ty = H - MARGIN + 18.0
        );
    }
    let step = nice_step((y1 - y0) / 6.0);
    let mut t = (y0 / step).ceil() * step;
    while t <= y1 + 1e-9 * step {
        let y = sy(t);
        let _ = writeln!(
            out,
            r#"<line x1="{a:.1}" y1="{y:.1}" x2="{m:.1}" y2="{y:.1}" stroke="black"/><text x="{tx:.1}" y="{ly:.1}" text-anchor="end">{t:.3}</text>"#,
            a = MARGIN - 5.0,
            m = MARGIN,
            tx = MARGIN - 8.0,
            ly = y + 4.0
        );
        t += step;
    }
    let _ = writeln!(
        out,
        r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#,
        W / 2.0,
        H - 12.0,
        escape(x_label)
    );
    let _ = writeln!(
        out,
        r#"<text x="14" y="{y}" text-anchor="middle" transform="rotate(-90 14 {y})">{}</text>"#,
        escape(y_label),
        y = H / 2.0
    );
    for (i, s) in series.iter().enumerate() {
        let pts: Vec<String> = s
            .points
            .iter()
            .filter(|p| p.0.is_finite() && p.1.is_finite())
            .map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y)))
            .collect();
        let dash = if s.dashed { r#" stroke-dasharray="6 4""# } else { "" };
        let _ = writeln!(
            out,
            r#"<polyline points="{}" fill="none" stroke="{}" stroke-width="1.5"{dash}/>"#,
            pts.join(" "),
            s.color
        );
        let ly = MARGIN + 16.0 * i as f64;
        let _ = writeln!(
            out,
            r#"<line x1="{a}" y1="{ly}" x2="{b}" y2="{ly}" stroke="{c}"{dash}/><text x="{tx}" y="{ty}">{}</text>"#,
            escape(&s.label),
            a = W - MARGIN - 150.0,
            b = W - MARGIN - 130.0,
            c = s.color,
            tx = W - MARGIN - 125.0,
            ty = ly + 4.0
        );
    }
    out.push_str("</svg>\n");
    out
}

fn nice_step(raw: f64) -> f64 {
    if !(raw > 0.0) {
        return 1.0;
    }
    let e = raw.log10().floor();
    let base = 10f64.powf(e);
    let m = raw / base;
    let k = if m <= 1.0 {
        1.0
    } else if m <= 2.0 {
        2.0
    } else if m <= 5.0 {
        5.0
    } else {
        10.0
    };
    k * base
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn renders_two_polylines() {
        let env = Series {
            label: "envelope".into(),
            color: "#1f4e79".into(),
            points: (1..50).map(|n| ((n as f64).ln(), -(n as f64).ln())).collect(),
            dashed: false,
        };
        let r = reference_line("slope -1", 0.0, 50f64.ln(), 0.0, -1.0);
        let svg = loglog_plot("a <b>", "n", "log norm", &[env, r]);
        assert_eq!(svg.matches("<polyline").count(), 2);
        assert!(svg.contains("a &lt;b&gt;"));
        assert!(svg.trim_end().ends_with("</svg>"));
    }

    #[test]
    fn empty_input() {
        let svg = loglog_plot("t", "x", "y", &[]);
        assert!(svg.contains("</svg>"));
        assert_eq!(nice_step(0.37), 0.5);
    }
}
