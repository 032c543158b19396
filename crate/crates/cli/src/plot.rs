//! Deterministic SVG of figure of merit against model time, both axes log10.

use std::fmt::Write as _;

use pareto_anneal::pipeline::BandedSeries;

const WIDTH: f64 = 820.0;
const HEIGHT: f64 = 500.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 200.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 50.0;
const PALETTE: [&str; 8] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#e377c2", "#7f7f7f"];

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

struct Axes {
    x0: f64,
    x1: f64,
    y1: f64,
}

impl Axes {
    fn px(&self, t: f64) -> f64 {
        LEFT + (t.log10() - self.x0) / (self.x1 - self.x0) * (WIDTH - LEFT - RIGHT)
    }

    /// Figure of merit is floored at 1, the bottom of the plot.
    fn py(&self, fom: f64) -> f64 {
        let y = fom.max(1.0).log10();
        HEIGHT - BOTTOM - y / self.y1 * (HEIGHT - TOP - BOTTOM)
    }
}

/// Last value carried forward between rows, so each curve is drawn as steps.
fn steps(rows: &[(f64, f64)], axes: &Axes) -> Vec<(f64, f64)> {
    let mut pts = Vec::with_capacity(rows.len() * 2);
    for (i, &(t, v)) in rows.iter().enumerate() {
        if i > 0 {
            pts.push((axes.px(t), axes.py(rows[i - 1].1)));
        }
        pts.push((axes.px(t), axes.py(v)));
    }
    pts
}

fn points_attr(pts: &[(f64, f64)]) -> String {
    pts.iter().map(|(x, y)| format!("{x:.2},{y:.2}")).collect::<Vec<_>>().join(" ")
}

pub fn render(series: &[BandedSeries], title: &str) -> Result<String, String> {
    if series.is_empty() {
        return Err("nothing to plot".into());
    }
    let rows = series.iter().flat_map(|s| &s.rows);
    let mut tmin = f64::INFINITY;
    let mut tmax = f64::NEG_INFINITY;
    let mut ymax = 1.0f64;
    for r in rows {
        if r.time_s <= 0.0 {
            return Err(format!("time {} is not positive; the time axis is logarithmic", r.time_s));
        }
        tmin = tmin.min(r.time_s);
        tmax = tmax.max(r.time_s);
        ymax = ymax.max(r.max_fom);
    }
    if !tmin.is_finite() {
        tmin = 0.1;
        tmax = 1.0;
    }
    let mut x0 = tmin.log10().floor();
    let mut x1 = tmax.log10().ceil();
    if x1 <= x0 {
        x0 -= 1.0;
        x1 += 1.0;
    }
    let y1 = ymax.log10().ceil().max(1.0);
    let axes = Axes { x0, x1, y1 };

    let mut svg = String::new();
    let w = |svg: &mut String, s: String| svg.push_str(&s);
    w(&mut svg, format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" viewBox=\"0 0 {WIDTH} {HEIGHT}\" font-family=\"sans-serif\" font-size=\"12\">\n"
    ));
    w(&mut svg, format!("<rect x=\"0\" y=\"0\" width=\"{WIDTH}\" height=\"{HEIGHT}\" fill=\"white\"/>\n"));
    w(&mut svg, format!("<text x=\"{:.2}\" y=\"24\" text-anchor=\"middle\" font-size=\"15\">{}</text>\n", (LEFT + WIDTH - RIGHT) / 2.0, escape(title)));

    let (left, right, top, bottom) = (LEFT, WIDTH - RIGHT, TOP, HEIGHT - BOTTOM);
    svg.push_str("<g stroke=\"#dddddd\" stroke-width=\"1\">\n");
    for d in x0 as i64..=x1 as i64 {
        let x = axes.px(10f64.powi(d as i32));
        writeln!(svg, "<line x1=\"{x:.2}\" y1=\"{top:.2}\" x2=\"{x:.2}\" y2=\"{bottom:.2}\"/>").unwrap();
    }
    for d in 0..=y1 as i64 {
        let y = axes.py(10f64.powi(d as i32));
        writeln!(svg, "<line x1=\"{left:.2}\" y1=\"{y:.2}\" x2=\"{right:.2}\" y2=\"{y:.2}\"/>").unwrap();
    }
    svg.push_str("</g>\n");
    writeln!(svg, "<rect x=\"{left:.2}\" y=\"{top:.2}\" width=\"{:.2}\" height=\"{:.2}\" fill=\"none\" stroke=\"black\"/>", right - left, bottom - top).unwrap();
    for d in x0 as i64..=x1 as i64 {
        let x = axes.px(10f64.powi(d as i32));
        writeln!(svg, "<text x=\"{x:.2}\" y=\"{:.2}\" text-anchor=\"middle\">1e{d}</text>", bottom + 16.0).unwrap();
    }
    for d in 0..=y1 as i64 {
        let y = axes.py(10f64.powi(d as i32));
        writeln!(svg, "<text x=\"{:.2}\" y=\"{:.2}\" text-anchor=\"end\">1e{d}</text>", left - 6.0, y + 4.0).unwrap();
    }
    writeln!(svg, "<text x=\"{:.2}\" y=\"{:.2}\" text-anchor=\"middle\">model time (s)</text>", (left + right) / 2.0, HEIGHT - 12.0).unwrap();
    writeln!(
        svg,
        "<text x=\"18\" y=\"{:.2}\" text-anchor=\"middle\" transform=\"rotate(-90 18 {:.2})\">HV_max - HV + 1</text>",
        (top + bottom) / 2.0,
        (top + bottom) / 2.0
    )
    .unwrap();

    for (i, s) in series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let upper: Vec<(f64, f64)> = s.rows.iter().map(|r| (r.time_s, r.max_fom)).collect();
        let lower: Vec<(f64, f64)> = s.rows.iter().map(|r| (r.time_s, r.min_fom)).collect();
        let mean: Vec<(f64, f64)> = s.rows.iter().map(|r| (r.time_s, r.mean_fom)).collect();
        if !s.rows.is_empty() {
            let mut band = steps(&upper, &axes);
            band.extend(steps(&lower, &axes).into_iter().rev());
            writeln!(svg, "<polygon id=\"band-{i}\" points=\"{}\" fill=\"{color}\" fill-opacity=\"0.2\" stroke=\"none\"/>", points_attr(&band)).unwrap();
            writeln!(
                svg,
                "<polyline id=\"mean-{i}\" points=\"{}\" fill=\"none\" stroke=\"{color}\" stroke-width=\"2\"/>",
                points_attr(&steps(&mean, &axes))
            )
            .unwrap();
        }
        let ly = top + 10.0 + 22.0 * i as f64;
        writeln!(svg, "<g id=\"legend-{i}\">").unwrap();
        writeln!(svg, "<rect x=\"{:.2}\" y=\"{:.2}\" width=\"18\" height=\"10\" fill=\"{color}\" fill-opacity=\"0.2\" stroke=\"{color}\"/>", right + 14.0, ly - 9.0).unwrap();
        writeln!(svg, "<text x=\"{:.2}\" y=\"{ly:.2}\">{}</text>", right + 38.0, escape(&s.label)).unwrap();
        svg.push_str("</g>\n");
    }
    svg.push_str("</svg>\n");
    Ok(svg)
}
