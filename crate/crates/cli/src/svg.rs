//! Minimal SVG line chart: three series drawn solid, dashed and dotted.

use std::fmt::Write as _;

const W: f64 = 640.0;
const H: f64 = 400.0;
const LEFT: f64 = 64.0;
const RIGHT: f64 = 150.0;
const TOP: f64 = 24.0;
const BOTTOM: f64 = 48.0;
const DASHES: [&str; 3] = ["", "8 5", "2 4"];

fn ticks(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..=n).map(|k| lo + (hi - lo) * k as f64 / n as f64).collect()
}

/// A named curve; `None` leaves a gap.
pub type Series<'a> = (&'a str, Vec<(f64, Option<f64>)>);

pub fn line_chart(x_label: &str, series: &[Series]) -> String {
    let xs: Vec<f64> = series.iter().flat_map(|s| s.1.iter().map(|p| p.0)).collect();
    let (mut x0, mut x1) = xs.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |a, &v| (a.0.min(v), a.1.max(v)));
    if !x0.is_finite() {
        (x0, x1) = (0.0, 1.0);
    }
    if x1 <= x0 {
        (x0, x1) = (x0 - 0.5, x0 + 0.5);
    }
    let ymax = series.iter().flat_map(|s| s.1.iter().filter_map(|p| p.1)).fold(0.0_f64, f64::max);
    let y1 = if ymax > 0.0 { ymax * 1.1 } else { 1.0 };
    let px = |x: f64| LEFT + (x - x0) / (x1 - x0) * (W - LEFT - RIGHT);
    let py = |y: f64| H - BOTTOM - y / y1 * (H - TOP - BOTTOM);

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let (bx, by) = (H - BOTTOM, W - RIGHT);
    let _ = writeln!(s, r#"<path d="M{LEFT} {TOP}V{bx}H{by}" fill="none" stroke="black"/>"#);
    for t in ticks(x0, x1, 5) {
        let x = px(t);
        let _ = writeln!(
            s,
            r#"<line x1="{x:.2}" y1="{bx}" x2="{x:.2}" y2="{:.2}" stroke="black"/><text x="{x:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
            bx + 4.0,
            bx + 18.0,
            trim(t)
        );
    }
    for t in ticks(0.0, y1, 4) {
        let y = py(t);
        let _ = writeln!(
            s,
            r#"<line x1="{:.2}" y1="{y:.2}" x2="{LEFT}" y2="{y:.2}" stroke="black"/><text x="{:.2}" y="{:.2}" text-anchor="end">{:.1}%</text>"#,
            LEFT - 4.0,
            LEFT - 6.0,
            y + 4.0,
            t * 100.0
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
        (LEFT + W - RIGHT) / 2.0,
        H - 10.0,
        escape(x_label)
    );
    for (k, (name, pts)) in series.iter().enumerate() {
        let dash = DASHES[k % DASHES.len()];
        let style = if dash.is_empty() { String::new() } else { format!(r#" stroke-dasharray="{dash}""#) };
        // Missing points break the line.
        let mut d = String::new();
        let mut pen_down = false;
        for (x, y) in pts {
            match y {
                Some(y) => {
                    let _ = write!(d, "{}{:.2} {:.2}", if pen_down { "L" } else { "M" }, px(*x), py(*y));
                    pen_down = true;
                }
                None => pen_down = false,
            }
        }
        if !d.is_empty() {
            let _ = writeln!(s, r#"<path d="{d}" fill="none" stroke="black" stroke-width="1.8"{style}/>"#);
        }
        let ly = TOP + 16.0 + 20.0 * k as f64;
        let lx = W - RIGHT + 12.0;
        let _ = writeln!(
            s,
            r#"<line x1="{lx}" y1="{ly}" x2="{:.2}" y2="{ly}" stroke="black" stroke-width="1.8"{style}/><text x="{:.2}" y="{:.2}">{}</text>"#,
            lx + 30.0,
            lx + 36.0,
            ly + 4.0,
            escape(name)
        );
    }
    s.push_str("</svg>\n");
    s
}

fn trim(v: f64) -> String {
    let s = format!("{v:.3}");
    s.trim_end_matches('0').trim_end_matches('.').to_string()
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
