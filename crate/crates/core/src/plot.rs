//! Deterministic SVG rendering of log-log error curves.
//!
//! Output is a pure function of the inputs: fixed canvas, fixed formatting,
//! no timestamps, so byte-identical reruns produce byte-identical files.

use crate::error::{Error, Result};
use crate::experiment::{ErrorCurve, RateFit};

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 480.0;
const MARGIN_LEFT: f64 = 70.0;
const MARGIN_RIGHT: f64 = 30.0;
const MARGIN_TOP: f64 = 40.0;
const MARGIN_BOTTOM: f64 = 60.0;

/// Render an error curve as a log-log SVG line chart, optionally with the
/// fitted line overlaid.
pub fn error_curve_svg(curve: &ErrorCurve, fit: Option<&RateFit>, title: &str) -> Result<String> {
    let entries = curve.entries();
    if entries.len() < 2 {
        return Err(Error::Fit(format!(
            "need at least 2 points to plot, got {}",
            entries.len()
        )));
    }
    if entries.iter().any(|(_, e)| !(*e > 0.0)) {
        return Err(Error::Fit(
            "cannot plot non-positive errors on a log scale".into(),
        ));
    }
    let pts: Vec<(f64, f64)> = entries
        .iter()
        .map(|&(m, e)| ((m as f64).log2(), e.log2()))
        .collect();
    let x_min = pts.first().expect("non-empty").0;
    let x_max = pts.last().expect("non-empty").0;
    let (mut y_min, mut y_max) = pts
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| {
            (lo.min(p.1), hi.max(p.1))
        });
    let pad = 0.05 * (y_max - y_min).max(1e-6);
    y_min -= pad;
    y_max += pad;

    let to_px = |x: f64, y: f64| -> (f64, f64) {
        let px = MARGIN_LEFT + (x - x_min) / (x_max - x_min) * (WIDTH - MARGIN_LEFT - MARGIN_RIGHT);
        let py = HEIGHT
            - MARGIN_BOTTOM
            - (y - y_min) / (y_max - y_min) * (HEIGHT - MARGIN_TOP - MARGIN_BOTTOM);
        (px, py)
    };

    let mut svg = String::new();
    svg.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" \
         viewBox=\"0 0 {WIDTH} {HEIGHT}\">\n"
    ));
    svg.push_str("<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n");
    svg.push_str(&format!(
        "<text x=\"{:.1}\" y=\"24\" font-family=\"sans-serif\" font-size=\"16\" \
         text-anchor=\"middle\">{title}</text>\n",
        WIDTH / 2.0
    ));

    // Axes.
    let (x0, y0) = (MARGIN_LEFT, HEIGHT - MARGIN_BOTTOM);
    svg.push_str(&format!(
        "<line x1=\"{x0:.1}\" y1=\"{y0:.1}\" x2=\"{:.1}\" y2=\"{y0:.1}\" stroke=\"black\"/>\n",
        WIDTH - MARGIN_RIGHT
    ));
    svg.push_str(&format!(
        "<line x1=\"{x0:.1}\" y1=\"{y0:.1}\" x2=\"{x0:.1}\" y2=\"{MARGIN_TOP:.1}\" stroke=\"black\"/>\n"
    ));
    svg.push_str(&format!(
        "<text x=\"{:.1}\" y=\"{:.1}\" font-family=\"sans-serif\" font-size=\"13\" \
         text-anchor=\"middle\">log2 m</text>\n",
        (MARGIN_LEFT + WIDTH - MARGIN_RIGHT) / 2.0,
        HEIGHT - 14.0
    ));
    svg.push_str(&format!(
        "<text x=\"18\" y=\"{:.1}\" font-family=\"sans-serif\" font-size=\"13\" \
         text-anchor=\"middle\" transform=\"rotate(-90 18 {:.1})\">log2 error</text>\n",
        (MARGIN_TOP + HEIGHT - MARGIN_BOTTOM) / 2.0,
        (MARGIN_TOP + HEIGHT - MARGIN_BOTTOM) / 2.0
    ));

    // Ticks at the data abscissae and five uniform ordinate levels.
    for &(x, _) in &pts {
        let (px, py) = to_px(x, y_min);
        svg.push_str(&format!(
            "<line x1=\"{px:.1}\" y1=\"{py:.1}\" x2=\"{px:.1}\" y2=\"{:.1}\" stroke=\"black\"/>\n",
            py + 5.0
        ));
        svg.push_str(&format!(
            "<text x=\"{px:.1}\" y=\"{:.1}\" font-family=\"sans-serif\" font-size=\"11\" \
             text-anchor=\"middle\">{x:.0}</text>\n",
            py + 18.0
        ));
    }
    for k in 0..=4 {
        let y = y_min + (y_max - y_min) * k as f64 / 4.0;
        let (px, py) = to_px(x_min, y);
        svg.push_str(&format!(
            "<line x1=\"{:.1}\" y1=\"{py:.1}\" x2=\"{px:.1}\" y2=\"{py:.1}\" stroke=\"black\"/>\n",
            px - 5.0
        ));
        svg.push_str(&format!(
            "<text x=\"{:.1}\" y=\"{:.1}\" font-family=\"sans-serif\" font-size=\"11\" \
             text-anchor=\"end\">{y:.2}</text>\n",
            px - 8.0,
            py + 4.0
        ));
    }

    // Fitted line behind the data.
    if let Some(fit) = fit {
        let (ax, ay) = to_px(x_min, fit.intercept + fit.slope * x_min);
        let (bx, by) = to_px(x_max, fit.intercept + fit.slope * x_max);
        svg.push_str(&format!(
            "<line x1=\"{ax:.1}\" y1=\"{ay:.1}\" x2=\"{bx:.1}\" y2=\"{by:.1}\" \
             stroke=\"#d62728\" stroke-dasharray=\"6 4\"/>\n"
        ));
        svg.push_str(&format!(
            "<text x=\"{:.1}\" y=\"{:.1}\" font-family=\"sans-serif\" font-size=\"12\" \
             fill=\"#d62728\">slope = {:.4}</text>\n",
            MARGIN_LEFT + 12.0,
            MARGIN_TOP + 16.0,
            fit.slope
        ));
    }

    // Data polyline and markers.
    let path: Vec<String> = pts
        .iter()
        .map(|&(x, y)| {
            let (px, py) = to_px(x, y);
            format!("{px:.1},{py:.1}")
        })
        .collect();
    svg.push_str(&format!(
        "<polyline points=\"{}\" fill=\"none\" stroke=\"#1f77b4\" stroke-width=\"1.5\"/>\n",
        path.join(" ")
    ));
    for &(x, y) in &pts {
        let (px, py) = to_px(x, y);
        svg.push_str(&format!(
            "<circle cx=\"{px:.1}\" cy=\"{py:.1}\" r=\"3\" fill=\"#1f77b4\"/>\n"
        ));
    }
    svg.push_str("</svg>\n");
    Ok(svg)
}
