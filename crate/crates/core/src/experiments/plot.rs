//! Static SVG figures: success-rate heatmap over `(n, s)` with the boundary curve.

use std::collections::BTreeMap;
use std::fmt::Write;

use super::fit::{boundary_crossing, Boundary};
use super::phase::PhaseCell;
use crate::error::{Error, Result};

const WIDTH: f64 = 720.0;
const ROW_HEIGHT: f64 = 48.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 110.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 50.0;

/// Blue (0) to red (1) through white.
fn color(rate: f64) -> String {
    let r = rate.clamp(0.0, 1.0);
    let (cr, cg, cb) = if r < 0.5 {
        let t = r / 0.5;
        (lerp(49.0, 247.0, t), lerp(54.0, 247.0, t), lerp(149.0, 247.0, t))
    } else {
        let t = (r - 0.5) / 0.5;
        (lerp(247.0, 165.0, t), lerp(247.0, 0.0, t), lerp(247.0, 38.0, t))
    };
    format!("rgb({},{},{})", cr.round(), cg.round(), cb.round())
}

fn lerp(a: f64, b: f64, t: f64) -> f64 {
    a + (b - a) * t
}

/// Per-`s` 50% boundaries of the raw (isotonic-smoothed) rate curves.
pub fn boundaries(cells: &[PhaseCell], big_n: usize) -> Vec<Boundary> {
    let mut by_s: BTreeMap<usize, Vec<&PhaseCell>> = BTreeMap::new();
    for c in cells.iter().filter(|c| c.big_n == big_n) {
        by_s.entry(c.s).or_default().push(c);
    }
    by_s.into_iter()
        .filter_map(|(s, mut v)| {
            v.sort_by_key(|c| c.n);
            let ns: Vec<f64> = v.iter().map(|c| c.n as f64).collect();
            let rates: Vec<f64> = v.iter().map(|c| c.success_rate).collect();
            let w: Vec<f64> = v.iter().map(|c| c.trials as f64).collect();
            boundary_crossing(&ns, &rates, &w, 0.5).map(|n_star| Boundary { s, n_star })
        })
        .collect()
}

/// Heatmap of success rate, one band per `s` with `n` on the horizontal axis.
pub fn phase_svg(cells: &[PhaseCell], big_n: usize) -> Result<String> {
    let mut by_s: BTreeMap<usize, Vec<&PhaseCell>> = BTreeMap::new();
    for c in cells.iter().filter(|c| c.big_n == big_n) {
        by_s.entry(c.s).or_default().push(c);
    }
    if by_s.is_empty() {
        return Err(Error::InvalidArgument(format!("no cells with N = {big_n}")));
    }
    let n_max = by_s.values().flatten().map(|c| c.n).max().unwrap_or(1) as f64;
    let plot_w = WIDTH - LEFT - RIGHT;
    let height = TOP + BOTTOM + ROW_HEIGHT * by_s.len() as f64;
    let x_of = |n: f64| LEFT + plot_w * n / n_max;
    let rows: Vec<usize> = by_s.keys().rev().copied().collect();
    let y_of = |row: usize| TOP + ROW_HEIGHT * row as f64;

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{height}" viewBox="0 0 {WIDTH} {height}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="20" text-anchor="middle">success rate, N = {big_n}</text>"#,
        LEFT + plot_w / 2.0
    );
    for (row, s) in rows.iter().enumerate() {
        let mut v = by_s[s].clone();
        v.sort_by_key(|c| c.n);
        for (k, c) in v.iter().enumerate() {
            let lo = if k == 0 { 0.0 } else { 0.5 * (v[k - 1].n + c.n) as f64 };
            let hi = if k + 1 == v.len() { c.n as f64 } else { 0.5 * (c.n + v[k + 1].n) as f64 };
            let _ = writeln!(
                svg,
                r#"<rect x="{:.2}" y="{:.2}" width="{:.2}" height="{ROW_HEIGHT}" fill="{}"><title>n={} s={} rate={:.3}</title></rect>"#,
                x_of(lo),
                y_of(row),
                (x_of(hi) - x_of(lo)).max(0.5),
                color(c.success_rate),
                c.n,
                c.s,
                c.success_rate
            );
        }
        let _ = writeln!(
            svg,
            r#"<text x="{}" y="{:.2}" text-anchor="end">s = {s}</text>"#,
            LEFT - 8.0,
            y_of(row) + ROW_HEIGHT / 2.0 + 4.0
        );
    }

    let pts: Vec<String> = boundaries(cells, big_n)
        .iter()
        .filter_map(|b| rows.iter().position(|&s| s == b.s).map(|row| (b, row)))
        .map(|(b, row)| format!("{:.2},{:.2}", x_of(b.n_star), y_of(row) + ROW_HEIGHT / 2.0))
        .collect();
    if !pts.is_empty() {
        let _ = writeln!(
            svg,
            r#"<polyline points="{}" fill="none" stroke="black" stroke-width="2"/>"#,
            pts.join(" ")
        );
        for p in &pts {
            let (x, y) = p.split_once(',').expect("formatted pair");
            let _ = writeln!(svg, r#"<circle cx="{x}" cy="{y}" r="3" fill="black"/>"#);
        }
    }

    let axis_y = TOP + ROW_HEIGHT * rows.len() as f64;
    let _ = writeln!(
        svg,
        r#"<line x1="{LEFT}" y1="{axis_y}" x2="{}" y2="{axis_y}" stroke="black"/>"#,
        LEFT + plot_w
    );
    for k in 0..=4 {
        let n = n_max * k as f64 / 4.0;
        let _ = writeln!(
            svg,
            r#"<text x="{:.2}" y="{}" text-anchor="middle">{}</text>"#,
            x_of(n),
            axis_y + 16.0,
            n.round()
        );
    }
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="{}" text-anchor="middle">measurements n</text>"#,
        LEFT + plot_w / 2.0,
        axis_y + 36.0
    );

    let lx = WIDTH - RIGHT + 20.0;
    for k in 0..=10 {
        let r = 1.0 - k as f64 / 10.0;
        let _ = writeln!(
            svg,
            r#"<rect x="{lx}" y="{:.2}" width="16" height="8" fill="{}"/>"#,
            TOP + 8.0 * k as f64,
            color(r)
        );
    }
    let _ = writeln!(svg, r#"<text x="{}" y="{}">1</text>"#, lx + 22.0, TOP + 8.0);
    let _ = writeln!(svg, r#"<text x="{}" y="{}">0</text>"#, lx + 22.0, TOP + 88.0);
    svg.push_str("</svg>\n");
    Ok(svg)
}
