//! Minimal SVG line charts for the figure files.

use std::fmt::Write;

use crate::sweep::SweepRow;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 420.0;
const MARGIN: f64 = 50.0;
const COLOURS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"];

/// Chart of `Q_m` against `rho` for one component count: exact values as
/// lines, one per `n`, and simulated estimates as markers when present.
pub fn render_figure(m: usize, rows: &[SweepRow]) -> String {
    let mut ns: Vec<usize> = rows.iter().map(|r| r.n).collect();
    ns.dedup();
    let rho_max = rows.iter().map(|r| r.rho).fold(0.0, f64::max).max(1.0);
    let y_max = rows
        .iter()
        .flat_map(|r| [r.q_exact, r.p_hat.unwrap_or(0.0)])
        .fold(0.0, f64::max)
        .clamp(0.05, 1.0);
    let x = |rho: f64| MARGIN + rho / rho_max * (WIDTH - 2.0 * MARGIN);
    let y = |q: f64| HEIGHT - MARGIN - q.clamp(0.0, 1.0) / y_max * (HEIGHT - 2.0 * MARGIN);

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{}" y="20" text-anchor="middle">Q_{m} against L/r</text>"#,
        WIDTH / 2.0
    );
    // Axes and ticks.
    let (x0, y0) = (x(0.0), y(0.0));
    let _ = writeln!(
        s,
        r#"<path d="M{x0},{} V{y0} H{}" stroke="black" fill="none"/>"#,
        MARGIN,
        WIDTH - MARGIN
    );
    for k in 0..=5 {
        let rho = rho_max * k as f64 / 5.0;
        let q = y_max * k as f64 / 5.0;
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{rho:.1}</text>"#,
            x(rho),
            y0 + 18.0
        );
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{q:.2}</text>"#,
            x0 - 6.0,
            y(q) + 4.0
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" text-anchor="middle">L/r</text>"#,
        WIDTH / 2.0,
        HEIGHT - 10.0
    );

    for (i, &n) in ns.iter().enumerate() {
        let colour = COLOURS[i % COLOURS.len()];
        let series: Vec<&SweepRow> = rows.iter().filter(|r| r.n == n).collect();
        let path: Vec<String> = series
            .iter()
            .map(|r| format!("{:.2},{:.2}", x(r.rho), y(r.q_exact)))
            .collect();
        let _ = writeln!(
            s,
            r#"<polyline points="{}" stroke="{colour}" stroke-width="1.5" fill="none"/>"#,
            path.join(" ")
        );
        for r in &series {
            if let Some(p) = r.p_hat {
                let _ = writeln!(
                    s,
                    r#"<circle cx="{:.2}" cy="{:.2}" r="2" fill="{colour}"/>"#,
                    x(r.rho),
                    y(p)
                );
            }
        }
        let ly = MARGIN + 16.0 * i as f64;
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{ly:.1}" fill="{colour}" text-anchor="end">n = {n}</text>"#,
            WIDTH - MARGIN
        );
    }
    s.push_str("</svg>\n");
    s
}
