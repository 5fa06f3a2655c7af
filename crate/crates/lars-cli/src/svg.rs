//! SVG rendering of a coefficient path: one polyline per coefficient
//! against cumulative L1 arc length, vertical rules at the knots and an
//! optional marker at the selected point.

use std::fmt::Write;

use crate::io::KnotsFile;

const WIDTH: f64 = 960.0;
const HEIGHT: f64 = 600.0;
const MARGIN_L: f64 = 72.0;
const MARGIN_R: f64 = 150.0;
const MARGIN_T: f64 = 32.0;
const MARGIN_B: f64 = 52.0;

const PALETTE: [&str; 10] = [
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f",
    "#bcbd22", "#17becf",
];

fn tick_label(v: f64) -> String {
    if v == 0.0 {
        "0".to_string()
    } else if v.abs() >= 100.0 {
        format!("{v:.0}")
    } else if v.abs() >= 1.0 {
        format!("{v:.2}")
    } else {
        format!("{v:.3}")
    }
}

fn esc(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

/// Render the path. `standardized` selects which coefficient scale to
/// plot; `selected_arc` draws a red rule at the chosen arc length.
pub fn render(knots: &KnotsFile, standardized: bool, selected_arc: Option<f64>) -> String {
    let m = knots.column_names.len();
    let series: Vec<Vec<f64>> = (0..m)
        .map(|j| {
            knots
                .knots
                .iter()
                .map(|k| {
                    if standardized || !knots.standardized {
                        k.beta_standardized[j]
                    } else {
                        k.beta_raw.as_ref().map_or(k.beta_standardized[j], |r| r[j])
                    }
                })
                .collect()
        })
        .collect();
    let arcs: Vec<f64> = knots.knots.iter().map(|k| k.arc_length).collect();
    let x_max = arcs.last().copied().unwrap_or(0.0).max(1e-12);
    let mut y_min = 0.0_f64;
    let mut y_max = 0.0_f64;
    for s in &series {
        for &v in s {
            y_min = y_min.min(v);
            y_max = y_max.max(v);
        }
    }
    if y_max - y_min < 1e-12 {
        y_max = y_min + 1.0;
    }
    let pad = 0.05 * (y_max - y_min);
    y_min -= pad;
    y_max += pad;

    let plot_w = WIDTH - MARGIN_L - MARGIN_R;
    let plot_h = HEIGHT - MARGIN_T - MARGIN_B;
    let sx = move |t: f64| MARGIN_L + plot_w * (t / x_max);
    let sy = move |v: f64| MARGIN_T + plot_h * (1.0 - (v - y_min) / (y_max - y_min));

    let mut out = String::new();
    let _ = writeln!(out, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
    );
    let _ = writeln!(
        out,
        r#"<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#
    );

    // Knot rules.
    for &a in &arcs {
        let _ = writeln!(
            out,
            r##"<line x1="{x:.2}" y1="{t:.2}" x2="{x:.2}" y2="{b:.2}" stroke="#cccccc" stroke-width="1" stroke-dasharray="4 4"/>"##,
            x = sx(a),
            t = MARGIN_T,
            b = MARGIN_T + plot_h
        );
    }
    // Zero line.
    if y_min < 0.0 && y_max > 0.0 {
        let _ = writeln!(
            out,
            r##"<line x1="{l:.2}" y1="{y:.2}" x2="{r:.2}" y2="{y:.2}" stroke="#999999" stroke-width="1"/>"##,
            l = MARGIN_L,
            r = MARGIN_L + plot_w,
            y = sy(0.0)
        );
    }
    // Axes.
    let _ = writeln!(
        out,
        r#"<line x1="{l:.2}" y1="{b:.2}" x2="{r:.2}" y2="{b:.2}" stroke="black" stroke-width="1.5"/>"#,
        l = MARGIN_L,
        r = MARGIN_L + plot_w,
        b = MARGIN_T + plot_h
    );
    let _ = writeln!(
        out,
        r#"<line x1="{l:.2}" y1="{t:.2}" x2="{l:.2}" y2="{b:.2}" stroke="black" stroke-width="1.5"/>"#,
        l = MARGIN_L,
        t = MARGIN_T,
        b = MARGIN_T + plot_h
    );
    // Ticks.
    for i in 0..=5 {
        let t = x_max * i as f64 / 5.0;
        let _ = writeln!(
            out,
            r#"<text x="{x:.2}" y="{y:.2}" font-size="12" text-anchor="middle">{v}</text>"#,
            x = sx(t),
            y = MARGIN_T + plot_h + 18.0,
            v = tick_label(t)
        );
        let v = y_min + (y_max - y_min) * i as f64 / 5.0;
        let _ = writeln!(
            out,
            r#"<text x="{x:.2}" y="{y:.2}" font-size="12" text-anchor="end">{v}</text>"#,
            x = MARGIN_L - 6.0,
            y = sy(v) + 4.0,
            v = tick_label(v)
        );
    }
    let _ = writeln!(
        out,
        r#"<text x="{x:.2}" y="{y:.2}" font-size="13" text-anchor="middle">cumulative L1 arc length</text>"#,
        x = MARGIN_L + plot_w / 2.0,
        y = HEIGHT - 12.0
    );

    // Selected point.
    if let Some(sel) = selected_arc {
        let _ = writeln!(
            out,
            r##"<line x1="{x:.2}" y1="{t:.2}" x2="{x:.2}" y2="{b:.2}" stroke="#d62728" stroke-width="2"/>"##,
            x = sx(sel),
            t = MARGIN_T,
            b = MARGIN_T + plot_h
        );
    }

    // Coefficient polylines with name labels at the right edge.
    for (j, s) in series.iter().enumerate() {
        let color = PALETTE[j % PALETTE.len()];
        let points: Vec<String> = arcs
            .iter()
            .zip(s.iter())
            .map(|(&a, &v)| format!("{:.2},{:.2}", sx(a), sy(v)))
            .collect();
        let _ = writeln!(
            out,
            r#"<polyline fill="none" stroke="{color}" stroke-width="1.8" points="{}"/>"#,
            points.join(" ")
        );
        let last = *s.last().unwrap_or(&0.0);
        let _ = writeln!(
            out,
            r#"<text x="{x:.2}" y="{y:.2}" font-size="11" fill="{color}">{name}</text>"#,
            x = MARGIN_L + plot_w + 6.0,
            y = sy(last) + 4.0,
            name = esc(&knots.column_names[j])
        );
    }
    let _ = writeln!(out, "</svg>");
    out
}
