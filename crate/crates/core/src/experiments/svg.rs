use std::fmt::Write;

/// A curve on a log-log plot.
#[derive(Debug, Clone)]
pub struct Series {
    pub label: String,
    /// `(x, y, error)`; points with nonpositive coordinates are dropped.
    pub points: Vec<(f64, f64, Option<f64>)>,
    /// Markers with error bars when true, a polyline otherwise.
    pub markers: bool,
    pub color: &'static str,
}

const W: f64 = 640.0;
const H: f64 = 440.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 170.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 50.0;

fn esc(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Log-log plot of the given series as a standalone SVG document.
pub fn loglog_svg(title: &str, x_label: &str, y_label: &str, series: &[Series]) -> String {
    let pts = series.iter().flat_map(|s| s.points.iter()).filter(|p| p.0 > 0.0 && p.1 > 0.0);
    let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for &(x, y, e) in pts {
        x0 = x0.min(x.log10());
        x1 = x1.max(x.log10());
        let lo = e.map_or(y, |e| if y - e > 0.0 { y - e } else { y });
        y0 = y0.min(lo.log10());
        y1 = y1.max((y + e.unwrap_or(0.0)).log10());
    }
    if !x0.is_finite() {
        (x0, x1, y0, y1) = (0.0, 1.0, 0.0, 1.0);
    }
    let (x0, x1) = (x0.floor(), x1.ceil().max(x0.floor() + 1.0));
    let (y0, y1) = (y0.floor(), y1.ceil().max(y0.floor() + 1.0));
    let pw = W - LEFT - RIGHT;
    let ph = H - TOP - BOTTOM;
    let sx = |x: f64| LEFT + (x.log10() - x0) / (x1 - x0) * pw;
    let sy = |y: f64| TOP + ph - (y.log10() - y0) / (y1 - y0) * ph;

    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(out, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let _ = writeln!(
        out,
        r#"<text x="{}" y="22" text-anchor="middle" font-size="14">{}</text>"#,
        LEFT + pw / 2.0,
        esc(title)
    );
    let _ = writeln!(out, r#"<rect x="{LEFT}" y="{TOP}" width="{pw}" height="{ph}" fill="none" stroke="black"/>"#);
    for k in x0 as i32..=x1 as i32 {
        let x = sx(10f64.powi(k));
        let _ = writeln!(out, r##"<line x1="{x:.2}" y1="{TOP}" x2="{x:.2}" y2="{}" stroke="#ddd"/>"##, TOP + ph);
        let _ = writeln!(out, r#"<text x="{x:.2}" y="{}" text-anchor="middle">1e{k}</text>"#, TOP + ph + 16.0);
    }
    for k in y0 as i32..=y1 as i32 {
        let y = sy(10f64.powi(k));
        let _ = writeln!(out, r##"<line x1="{LEFT}" y1="{y:.2}" x2="{}" y2="{y:.2}" stroke="#ddd"/>"##, LEFT + pw);
        let _ = writeln!(out, r#"<text x="{}" y="{:.2}" text-anchor="end">1e{k}</text>"#, LEFT - 6.0, y + 4.0);
    }
    let _ =
        writeln!(out, r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#, LEFT + pw / 2.0, H - 12.0, esc(x_label));
    let _ = writeln!(
        out,
        r#"<text x="18" y="{0}" text-anchor="middle" transform="rotate(-90 18 {0})">{1}</text>"#,
        TOP + ph / 2.0,
        esc(y_label)
    );
    for (i, s) in series.iter().enumerate() {
        let c = s.color;
        let valid: Vec<_> = s.points.iter().filter(|p| p.0 > 0.0 && p.1 > 0.0).collect();
        if s.markers {
            for &&(x, y, e) in &valid {
                let (px, py) = (sx(x), sy(y));
                if let Some(e) = e.filter(|e| *e > 0.0) {
                    let lo = if y - e > 0.0 { sy(y - e) } else { TOP + ph };
                    let _ = writeln!(
                        out,
                        r#"<line x1="{px:.2}" y1="{lo:.2}" x2="{px:.2}" y2="{:.2}" stroke="{c}"/>"#,
                        sy(y + e)
                    );
                }
                let _ = writeln!(out, r#"<circle cx="{px:.2}" cy="{py:.2}" r="3" fill="{c}"/>"#);
            }
        } else if valid.len() > 1 {
            let path: Vec<String> = valid.iter().map(|p| format!("{:.2},{:.2}", sx(p.0), sy(p.1))).collect();
            let _ =
                writeln!(out, r#"<polyline points="{}" fill="none" stroke="{c}" stroke-width="1.5"/>"#, path.join(" "));
        }
        let ly = TOP + 14.0 + 18.0 * i as f64;
        let lx = LEFT + pw + 12.0;
        let _ = writeln!(out, r#"<rect x="{lx}" y="{}" width="12" height="3" fill="{c}"/>"#, ly - 4.0);
        let _ = writeln!(out, r#"<text x="{}" y="{ly}">{}</text>"#, lx + 18.0, esc(&s.label));
    }
    out.push_str("</svg>\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn well_formed() {
        let s = vec![
            Series {
                label: "mean".into(),
                points: vec![(10.0, 0.5, Some(0.1)), (100.0, 0.2, Some(0.5))],
                markers: true,
                color: "black",
            },
            Series {
                label: "a<b".into(),
                points: vec![(10.0, 2.0, None), (100.0, 1.0, None), (0.0, 1.0, None)],
                markers: false,
                color: "red",
            },
        ];
        let svg = loglog_svg("t", "n", "W", &s);
        assert!(svg.starts_with("<svg") && svg.ends_with("</svg>\n"));
        assert!(svg.contains("a&lt;b"));
        assert_eq!(svg.matches("<circle").count(), 2);
        assert_eq!(svg.matches("<polyline").count(), 1);
        assert!(!svg.contains("NaN") && !svg.contains("inf"));
    }

    #[test]
    fn empty_plot() {
        let svg = loglog_svg("empty", "n", "W", &[]);
        assert!(svg.contains("</svg>"));
    }
}
