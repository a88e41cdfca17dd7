//! SVG line plots of ladder convergence, drawn from the run CSV.

use std::collections::BTreeMap;
use std::fmt::Write;

use crate::formats::CsvRow;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 400.0;
const MARGIN: f64 = 56.0;
const COLORS: &[&str] = &["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf", "#8c564b", "#e377c2"];

/// One series per `(method, epsilon_or_alpha)`: the seed mean of the finite
/// raw values against `n`.
pub fn series(rows: &[CsvRow]) -> Vec<(String, Vec<(f64, f64)>)> {
    let mut groups: BTreeMap<(String, u64), BTreeMap<u64, (f64, usize)>> = BTreeMap::new();
    for r in rows.iter().filter(|r| r.raw_value.is_finite()) {
        let key = (r.method.clone(), r.epsilon_or_alpha.to_bits());
        let cell = groups.entry(key).or_default().entry(r.n).or_insert((0.0, 0));
        cell.0 += r.raw_value;
        cell.1 += 1;
    }
    groups
        .into_iter()
        .map(|((method, param), points)| {
            let label = format!("{method} {}", f64::from_bits(param));
            let pts = points.into_iter().map(|(n, (s, c))| (n as f64, s / c as f64)).collect();
            (label, pts)
        })
        .collect()
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

pub fn render(title: &str, rows: &[CsvRow]) -> String {
    let series = series(rows);
    let all: Vec<(f64, f64)> = series.iter().flat_map(|(_, p)| p.iter().copied()).collect();
    let (mut x0, mut x1, mut y0, mut y1) = all.iter().fold(
        (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY),
        |(a, b, c, d), &(x, y)| (a.min(x), b.max(x), c.min(y), d.max(y)),
    );
    if all.is_empty() {
        (x0, x1, y0, y1) = (0.0, 1.0, 0.0, 1.0);
    }
    if x1 - x0 < 1e-12 {
        x0 -= 0.5;
        x1 += 0.5;
    }
    if y1 - y0 < 1e-12 {
        y0 -= 0.5;
        y1 += 0.5;
    }
    let sx = |x: f64| MARGIN + (x - x0) / (x1 - x0) * (WIDTH - 2.0 * MARGIN);
    let sy = |y: f64| HEIGHT - MARGIN - (y - y0) / (y1 - y0) * (HEIGHT - 2.0 * MARGIN);

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="11">"#
    );
    let _ = writeln!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(svg, r#"<text x="{}" y="20" text-anchor="middle" font-size="13">{}</text>"#, WIDTH / 2.0, escape(title));
    let (left, right, top, bottom) = (MARGIN, WIDTH - MARGIN, MARGIN, HEIGHT - MARGIN);
    let _ = writeln!(
        svg,
        r#"<path d="M{left} {top} L{left} {bottom} L{right} {bottom}" stroke="black" fill="none"/>"#
    );
    for i in 0..=4 {
        let f = i as f64 / 4.0;
        let (xv, yv) = (x0 + f * (x1 - x0), y0 + f * (y1 - y0));
        let _ = writeln!(svg, r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{xv:.0}</text>"#, sx(xv), bottom + 16.0);
        let _ = writeln!(svg, r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{yv:.3}</text>"#, left - 6.0, sy(yv) + 4.0);
    }
    let _ = writeln!(svg, r#"<text x="{}" y="{}" text-anchor="middle">n</text>"#, WIDTH / 2.0, HEIGHT - 14.0);
    for (i, (label, pts)) in series.iter().enumerate() {
        let color = COLORS[i % COLORS.len()];
        let d: Vec<String> = pts.iter().map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y))).collect();
        let _ = writeln!(svg, r#"<polyline points="{}" stroke="{color}" fill="none" stroke-width="1.5"/>"#, d.join(" "));
        for &(x, y) in pts {
            let _ = writeln!(svg, r#"<circle cx="{:.2}" cy="{:.2}" r="2.5" fill="{color}"/>"#, sx(x), sy(y));
        }
        let ly = top + 14.0 * i as f64;
        let _ = writeln!(svg, r#"<text x="{:.1}" y="{ly:.1}" fill="{color}">{}</text>"#, right - 120.0, escape(label));
    }
    svg.push_str("</svg>\n");
    svg
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(method: &str, e: f64, seed: u64, n: u64, v: f64) -> CsvRow {
        CsvRow {
            method: method.into(),
            dim: 2,
            seed,
            q_or_t: "1/2,1/2".into(),
            nu_id: "x".into(),
            n,
            epsilon_or_alpha: e,
            raw_value: v,
            extrapolated: 0.0,
            band: 0.0,
        }
    }

    #[test]
    fn series_average_seeds() {
        let rows = vec![
            row("eps_sum", 1.0, 1, 6, 0.5),
            row("eps_sum", 1.0, 2, 6, 0.7),
            row("eps_sum", 1.0, 1, 8, f64::NEG_INFINITY),
            row("eps_sum", 2.0, 1, 6, 0.1),
        ];
        let s = series(&rows);
        assert_eq!(s.len(), 2);
        assert_eq!(s[0].1, vec![(6.0, 0.6)]);
        let svg = render("t <1>", &rows);
        assert!(svg.starts_with("<svg") && svg.contains("t &lt;1&gt;") && svg.contains("polyline"));
    }
}
