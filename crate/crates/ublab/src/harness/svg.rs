//! Minimal self-contained SVG line charts.
//!
//! Hand-rolled on purpose: the files must carry no external assets and be
//! byte-stable across reruns, so the renderer is a few fixed-precision
//! string writes instead of a plotting dependency.

use std::fmt::Write as _;

const WIDTH: f64 = 800.0;
const HEIGHT: f64 = 480.0;
const MARGIN_L: f64 = 80.0;
const MARGIN_R: f64 = 24.0;
const MARGIN_T: f64 = 48.0;
const MARGIN_B: f64 = 56.0;
const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"];
const TICKS: usize = 5;

fn tick_label(v: f64) -> String {
    if v == 0.0 {
        "0".to_string()
    } else if v.abs() >= 1e5 || v.abs() < 1e-2 {
        format!("{v:.2e}")
    } else {
        let s = format!("{v:.2}");
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    }
}

struct Range {
    lo: f64,
    hi: f64,
}

impl Range {
    fn of(values: impl Iterator<Item = f64>) -> Range {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for v in values {
            lo = lo.min(v);
            hi = hi.max(v);
        }
        if lo > hi {
            // No data; draw an empty unit box.
            return Range { lo: 0.0, hi: 1.0 };
        }
        if lo == hi {
            // Flat series still needs a band to live in.
            let pad = if lo == 0.0 { 1.0 } else { lo.abs() * 0.1 };
            return Range { lo: lo - pad, hi: hi + pad };
        }
        Range { lo, hi }
    }

    fn scale(&self, v: f64, out_lo: f64, out_hi: f64) -> f64 {
        out_lo + (v - self.lo) / (self.hi - self.lo) * (out_hi - out_lo)
    }
}

/// Render one chart with a polyline per series and a small legend.
pub fn polyline_chart(
    title: &str,
    x_label: &str,
    y_label: &str,
    series: &[(String, Vec<(f64, f64)>)],
) -> String {
    let xr = Range::of(series.iter().flat_map(|(_, pts)| pts.iter().map(|p| p.0)));
    let yr = Range::of(series.iter().flat_map(|(_, pts)| pts.iter().map(|p| p.1)));
    let x_px = |v: f64| xr.scale(v, MARGIN_L, WIDTH - MARGIN_R);
    let y_px = |v: f64| yr.scale(v, HEIGHT - MARGIN_B, MARGIN_T);

    let mut s = String::new();
    writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="monospace" font-size="13">"#
    )
    .unwrap();
    writeln!(s, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#).unwrap();
    writeln!(
        s,
        r#"<text x="{:.2}" y="24" text-anchor="middle" font-size="16">{title}</text>"#,
        WIDTH / 2.0
    )
    .unwrap();

    // Grid and tick labels.
    for i in 0..TICKS {
        let t = i as f64 / (TICKS - 1) as f64;
        let xv = xr.lo + t * (xr.hi - xr.lo);
        let yv = yr.lo + t * (yr.hi - yr.lo);
        let xp = x_px(xv);
        let yp = y_px(yv);
        writeln!(
            s,
            r##"<line x1="{xp:.2}" y1="{MARGIN_T}" x2="{xp:.2}" y2="{:.2}" stroke="#dddddd"/>"##,
            HEIGHT - MARGIN_B
        )
        .unwrap();
        writeln!(
            s,
            r##"<line x1="{MARGIN_L}" y1="{yp:.2}" x2="{:.2}" y2="{yp:.2}" stroke="#dddddd"/>"##,
            WIDTH - MARGIN_R
        )
        .unwrap();
        writeln!(
            s,
            r#"<text x="{xp:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
            HEIGHT - MARGIN_B + 20.0,
            tick_label(xv)
        )
        .unwrap();
        writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"#,
            MARGIN_L - 8.0,
            yp + 4.0,
            tick_label(yv)
        )
        .unwrap();
    }

    // Axes.
    writeln!(
        s,
        r#"<line x1="{MARGIN_L}" y1="{MARGIN_T}" x2="{MARGIN_L}" y2="{0:.2}" stroke="black"/>"#,
        HEIGHT - MARGIN_B
    )
    .unwrap();
    writeln!(
        s,
        r#"<line x1="{MARGIN_L}" y1="{0:.2}" x2="{1:.2}" y2="{0:.2}" stroke="black"/>"#,
        HEIGHT - MARGIN_B,
        WIDTH - MARGIN_R
    )
    .unwrap();
    writeln!(
        s,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{x_label}</text>"#,
        (MARGIN_L + WIDTH - MARGIN_R) / 2.0,
        HEIGHT - 12.0
    )
    .unwrap();
    writeln!(
        s,
        r#"<text x="18" y="{:.2}" text-anchor="middle" transform="rotate(-90 18 {0:.2})">{y_label}</text>"#,
        (MARGIN_T + HEIGHT - MARGIN_B) / 2.0
    )
    .unwrap();

    // Series.
    for (i, (name, pts)) in series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        if !pts.is_empty() {
            let mut attr = String::with_capacity(pts.len() * 12);
            for &(x, y) in pts {
                let _ = write!(attr, "{:.2},{:.2} ", x_px(x), y_px(y));
            }
            writeln!(
                s,
                r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#,
                attr.trim_end()
            )
            .unwrap();
        }
        let ly = MARGIN_T + 16.0 * i as f64;
        writeln!(
            s,
            r#"<line x1="{0:.2}" y1="{ly:.2}" x2="{1:.2}" y2="{ly:.2}" stroke="{color}" stroke-width="3"/>"#,
            WIDTH - MARGIN_R - 170.0,
            WIDTH - MARGIN_R - 150.0
        )
        .unwrap();
        writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}">{name}</text>"#,
            WIDTH - MARGIN_R - 144.0,
            ly + 4.0
        )
        .unwrap();
    }
    s.push_str("</svg>\n");
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    fn demo_series() -> Vec<(String, Vec<(f64, f64)>)> {
        vec![
            ("a".to_string(), vec![(0.0, 1.0), (1.0, 3.0), (2.0, 2.0)]),
            ("b".to_string(), vec![(0.0, 4.0), (2.0, 0.5)]),
        ]
    }

    #[test]
    fn chart_is_wellformed_and_self_contained() {
        let svg = polyline_chart("demo", "x", "y", &demo_series());
        assert!(svg.starts_with("<svg "));
        assert!(svg.trim_end().ends_with("</svg>"));
        assert_eq!(svg.matches("<polyline").count(), 2);
        assert!(!svg.contains("http://") || svg.contains("xmlns"), "only the xmlns URI allowed");
        assert!(!svg.contains("href"), "no external assets");
    }

    #[test]
    fn chart_is_deterministic() {
        let a = polyline_chart("demo", "x", "y", &demo_series());
        let b = polyline_chart("demo", "x", "y", &demo_series());
        assert_eq!(a, b);
    }

    #[test]
    fn empty_and_flat_series_render() {
        let empty = polyline_chart("none", "x", "y", &[]);
        assert!(empty.contains("</svg>"));
        let flat = polyline_chart(
            "flat",
            "x",
            "y",
            &[("c".to_string(), vec![(0.0, 5.0), (1.0, 5.0)])],
        );
        assert_eq!(flat.matches("<polyline").count(), 1);
        for token in ["NaN", "inf"] {
            assert!(!flat.contains(token), "degenerate ranges must not leak {token}");
        }
    }

    #[test]
    fn points_scale_into_the_plot_box() {
        let svg = polyline_chart("demo", "x", "y", &demo_series());
        let points = svg
            .lines()
            .filter(|l| l.starts_with("<polyline"))
            .flat_map(|l| {
                let attr = l.split("points=\"").nth(1).unwrap().split('"').next().unwrap();
                attr.split_whitespace().map(|p| {
                    let (x, y) = p.split_once(',').unwrap();
                    (x.parse::<f64>().unwrap(), y.parse::<f64>().unwrap())
                })
            })
            .collect::<Vec<_>>();
        assert!(!points.is_empty());
        for (x, y) in points {
            assert!((MARGIN_L..=WIDTH - MARGIN_R).contains(&x), "x={x} outside plot box");
            assert!((MARGIN_T..=HEIGHT - MARGIN_B).contains(&y), "y={y} outside plot box");
        }
    }
}
