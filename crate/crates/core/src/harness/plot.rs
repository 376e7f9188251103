use std::fmt::Write as _;

use crate::engine::{MethodKind, PredictionRecord};

const WIDTH: f64 = 900.0;
const HEIGHT: f64 = 320.0;
const MARGIN: f64 = 50.0;

/// Standalone SVG of predicted (blue) and measured (gray) power against
/// feature time for one STA and method. Measured values are drawn at the
/// prediction's time, so the two curves line up when the prediction is
/// right.
pub fn plot_svg(log: &[PredictionRecord], sta: usize, method: MethodKind) -> String {
    let pts: Vec<&PredictionRecord> = log.iter().filter(|p| p.sta == sta && p.method == method).collect();
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{MARGIN}" y="20" font-family="sans-serif" font-size="14">STA {sta}, {method}: predicted vs measured power (dBm)</text>"#
    );
    if pts.is_empty() {
        s.push_str("</svg>\n");
        return s;
    }
    let t0 = pts.first().map_or(0.0, |p| p.t);
    let t1 = pts.last().map_or(1.0, |p| p.t).max(t0 + 1e-6);
    let values = pts.iter().flat_map(|p| [Some(p.predicted_dbm), p.measured_dbm]).flatten();
    let (lo, hi) = values.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
    let (lo, hi) = (lo.floor() - 1.0, hi.ceil() + 1.0);
    let x = |t: f64| MARGIN + (t - t0) / (t1 - t0) * (WIDTH - 2.0 * MARGIN);
    let y = |v: f64| HEIGHT - MARGIN - (v - lo) / (hi - lo) * (HEIGHT - 2.0 * MARGIN);

    let _ = writeln!(
        s,
        r##"<rect x="{MARGIN}" y="{MARGIN}" width="{}" height="{}" fill="none" stroke="#888"/>"##,
        WIDTH - 2.0 * MARGIN,
        HEIGHT - 2.0 * MARGIN
    );
    for (label, v) in [(format!("{hi}"), hi), (format!("{lo}"), lo)] {
        let _ = writeln!(
            s,
            r#"<text x="4" y="{:.1}" font-family="sans-serif" font-size="11">{label}</text>"#,
            y(v) + 4.0
        );
    }
    for (label, t) in [(format!("{t0:.0} s"), t0), (format!("{t1:.0} s"), t1)] {
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{}" font-family="sans-serif" font-size="11" text-anchor="middle">{label}</text>"#,
            x(t),
            HEIGHT - MARGIN + 16.0
        );
    }
    let polyline = |s: &mut String, color: &str, it: &mut dyn Iterator<Item = (f64, f64)>| {
        let _ = write!(s, r#"<polyline fill="none" stroke="{color}" stroke-width="1" points=""#);
        for (t, v) in it {
            let _ = write!(s, "{:.1},{:.1} ", x(t), y(v));
        }
        s.push_str("\"/>\n");
    };
    polyline(&mut s, "#999999", &mut pts.iter().filter_map(|p| p.measured_dbm.map(|m| (p.t, m))));
    polyline(&mut s, "#1f5fbf", &mut pts.iter().map(|p| (p.t, p.predicted_dbm)));
    s.push_str("</svg>\n");
    s
}
