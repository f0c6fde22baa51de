//! Static SVG plots of one state entry over time: truth dashed, estimate
//! solid, and optionally the particle density as shaded cells behind them.
//! Output depends only on the inputs.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::model::Trajectory;

use super::io::ParticleRow;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 360.0;
const MARGIN_LEFT: f64 = 56.0;
const MARGIN_RIGHT: f64 = 16.0;
const MARGIN_TOP: f64 = 28.0;
const MARGIN_BOTTOM: f64 = 40.0;
const DENSITY_BINS: usize = 40;

#[derive(Clone, Debug, Default)]
pub struct PlotInput<'a> {
    pub trajectory: Option<&'a Trajectory>,
    pub estimates: &'a [Vec<f64>],
    pub particles: Option<&'a [ParticleRow]>,
    pub label: &'a str,
}

struct Frame {
    t_max: f64,
    y_lo: f64,
    y_hi: f64,
}

impl Frame {
    fn x(&self, t: f64) -> f64 {
        let span = (self.t_max - 1.0).max(1.0);
        MARGIN_LEFT + (t - 1.0) / span * (WIDTH - MARGIN_LEFT - MARGIN_RIGHT)
    }

    fn y(&self, v: f64) -> f64 {
        let h = HEIGHT - MARGIN_TOP - MARGIN_BOTTOM;
        MARGIN_TOP + (self.y_hi - v) / (self.y_hi - self.y_lo) * h
    }
}

fn polyline(frame: &Frame, values: &[f64], style: &str) -> String {
    let mut points = String::new();
    for (k, v) in values.iter().enumerate() {
        if k > 0 {
            points.push(' ');
        }
        let _ = write!(points, "{:.2},{:.2}", frame.x(k as f64 + 1.0), frame.y(*v));
    }
    format!("<polyline fill=\"none\" {style} points=\"{points}\"/>\n")
}

/// Renders entry `index` (1-based).
pub fn render_svg(input: &PlotInput, index: usize) -> Result<String> {
    let n = input.estimates.first().map_or(0, Vec::len);
    if index == 0 || index > n {
        return Err(Error::Contract(format!("index {index} not available; choose one of 1..={n}")));
    }
    let i = index - 1;
    let est: Vec<f64> = input.estimates.iter().map(|e| e[i]).collect();
    let truth: Option<Vec<f64>> = input
        .trajectory
        .map(|tr| tr.steps.iter().map(|s| s.state[i]).collect());
    let particles: Vec<&ParticleRow> = input
        .particles
        .map(|rows| rows.iter().filter(|r| r.index == index).collect())
        .unwrap_or_default();

    let mut lo = 0.0f64;
    let mut hi = 0.0f64;
    for v in est.iter().chain(truth.iter().flatten()).chain(particles.iter().map(|r| &r.value)) {
        lo = lo.min(*v);
        hi = hi.max(*v);
    }
    let pad = ((hi - lo) * 0.08).max(0.05);
    let frame = Frame {
        t_max: est.len().max(truth.as_ref().map_or(0, Vec::len)) as f64,
        y_lo: lo - pad,
        y_hi: hi + pad,
    };

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" viewBox=\"0 0 {WIDTH} {HEIGHT}\" font-family=\"sans-serif\" font-size=\"12\">"
    );
    let _ = writeln!(svg, "<rect width=\"{WIDTH}\" height=\"{HEIGHT}\" fill=\"white\"/>");

    if !particles.is_empty() {
        let bin_h = (frame.y_hi - frame.y_lo) / DENSITY_BINS as f64;
        let t_count = frame.t_max as usize;
        let mut mass = vec![vec![0.0f64; DENSITY_BINS]; t_count + 1];
        for r in &particles {
            if r.t == 0 || r.t > t_count {
                continue;
            }
            let b = (((r.value - frame.y_lo) / bin_h) as usize).min(DENSITY_BINS - 1);
            mass[r.t][b] += r.weight;
        }
        let col_w = (frame.x(2.0) - frame.x(1.0)).max(2.0);
        for (t, bins) in mass.iter().enumerate().skip(1) {
            let peak = bins.iter().cloned().fold(0.0, f64::max);
            if peak <= 0.0 {
                continue;
            }
            for (b, m) in bins.iter().enumerate() {
                if *m <= 0.0 {
                    continue;
                }
                let top = frame.y(frame.y_lo + (b + 1) as f64 * bin_h);
                let bottom = frame.y(frame.y_lo + b as f64 * bin_h);
                let _ = writeln!(
                    svg,
                    "<rect x=\"{:.2}\" y=\"{:.2}\" width=\"{:.2}\" height=\"{:.2}\" fill=\"#4a7ab5\" fill-opacity=\"{:.3}\"/>",
                    frame.x(t as f64) - col_w / 2.0,
                    top,
                    col_w,
                    bottom - top,
                    0.6 * m / peak
                );
            }
        }
    }

    // Axes, zero line and ticks.
    let x0 = frame.x(1.0);
    let x1 = frame.x(frame.t_max);
    let _ = writeln!(
        svg,
        "<line x1=\"{x0:.2}\" y1=\"{:.2}\" x2=\"{x1:.2}\" y2=\"{:.2}\" stroke=\"#bbbbbb\"/>",
        frame.y(0.0),
        frame.y(0.0)
    );
    let _ = writeln!(
        svg,
        "<rect x=\"{MARGIN_LEFT}\" y=\"{MARGIN_TOP}\" width=\"{:.2}\" height=\"{:.2}\" fill=\"none\" stroke=\"black\"/>",
        WIDTH - MARGIN_LEFT - MARGIN_RIGHT,
        HEIGHT - MARGIN_TOP - MARGIN_BOTTOM
    );
    for k in 0..=4 {
        let v = frame.y_lo + (frame.y_hi - frame.y_lo) * k as f64 / 4.0;
        let _ = writeln!(
            svg,
            "<text x=\"{:.2}\" y=\"{:.2}\" text-anchor=\"end\">{v:.2}</text>",
            MARGIN_LEFT - 6.0,
            frame.y(v) + 4.0
        );
    }
    let step = ((frame.t_max / 5.0).ceil() as usize).max(1);
    for t in (1..=frame.t_max as usize).step_by(step) {
        let _ = writeln!(
            svg,
            "<text x=\"{:.2}\" y=\"{:.2}\" text-anchor=\"middle\">{t}</text>",
            frame.x(t as f64),
            HEIGHT - MARGIN_BOTTOM + 16.0
        );
    }
    let _ = writeln!(
        svg,
        "<text x=\"{:.2}\" y=\"{:.2}\" text-anchor=\"middle\">t</text>",
        (x0 + x1) / 2.0,
        HEIGHT - 6.0
    );
    let _ = writeln!(
        svg,
        "<text x=\"{MARGIN_LEFT}\" y=\"18\">x{index}(t){}</text>",
        if input.label.is_empty() { String::new() } else { format!(" ({})", input.label) }
    );

    if let Some(truth) = &truth {
        svg.push_str(&polyline(&frame, truth, "stroke=\"black\" stroke-width=\"1.5\" stroke-dasharray=\"6 4\""));
    }
    svg.push_str(&polyline(&frame, &est, "stroke=\"#c0392b\" stroke-width=\"1.5\""));
    svg.push_str("</svg>\n");
    Ok(svg)
}
