//! Minimal self-contained SVG line charts for convergence histories.
//!
//! No plotting dependency: the output is a log-y chart with decade
//! gridlines, one color per alpha. Solid lines are the error, dashed lines
//! the eigentransformed error (when present), dotted gray the theoretical
//! decay `err_0 · (α/(1−α))^k` anchored at the initial error.

use std::fmt::Write as _;

use crate::runner::ConvergenceRun;

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 480.0;
const MARGIN_L: f64 = 70.0;
const MARGIN_R: f64 = 20.0;
const MARGIN_T: f64 = 20.0;
const MARGIN_B: f64 = 45.0;

const PALETTE: [&str; 4] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd"];

struct Frame {
    x_max: f64,
    log_min: f64,
    log_max: f64,
}

impl Frame {
    fn x(&self, iteration: f64) -> f64 {
        MARGIN_L + (WIDTH - MARGIN_L - MARGIN_R) * iteration / self.x_max.max(1.0)
    }

    fn y(&self, value: f64) -> f64 {
        let t = (value.log10() - self.log_min) / (self.log_max - self.log_min);
        HEIGHT - MARGIN_B - (HEIGHT - MARGIN_T - MARGIN_B) * t.clamp(0.0, 1.0)
    }
}

fn polyline(out: &mut String, frame: &Frame, points: &[(f64, f64)], color: &str, dash: &str) {
    if points.len() < 2 {
        return;
    }
    let coords: Vec<String> = points
        .iter()
        .map(|&(x, y)| format!("{:.1},{:.1}", frame.x(x), frame.y(y)))
        .collect();
    let dash_attr = if dash.is_empty() { String::new() } else { format!(" stroke-dasharray=\"{dash}\"") };
    let _ = writeln!(
        out,
        "<polyline fill=\"none\" stroke=\"{color}\" stroke-width=\"1.5\"{dash_attr} points=\"{}\"/>",
        coords.join(" ")
    );
}

/// Render the runs as one chart. Returns the full SVG document.
pub fn convergence_chart(runs: &[ConvergenceRun]) -> String {
    // Gather every positive value to size the log axis; fall back to a
    // fixed window when there is nothing to draw.
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    let mut x_max = 1.0f64;
    for run in runs {
        for record in &run.history.records {
            x_max = x_max.max(record.iteration as f64);
            for value in [record.error_inf, record.transformed_error_inf].into_iter().flatten() {
                if value > 0.0 && value.is_finite() {
                    lo = lo.min(value);
                    hi = hi.max(value);
                }
            }
        }
    }
    if !lo.is_finite() || !hi.is_finite() {
        lo = 1e-16;
        hi = 1.0;
    }
    let frame = Frame {
        x_max,
        log_min: lo.log10().floor() - 0.2,
        log_max: hi.log10().ceil() + 0.2,
    };

    let mut out = String::new();
    let _ = writeln!(
        out,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" \
         viewBox=\"0 0 {WIDTH} {HEIGHT}\" font-family=\"sans-serif\" font-size=\"12\">"
    );
    let _ = writeln!(out, "<rect width=\"{WIDTH}\" height=\"{HEIGHT}\" fill=\"white\"/>");

    // Decade gridlines with 1e±k labels.
    let first_decade = frame.log_min.ceil() as i32;
    let last_decade = frame.log_max.floor() as i32;
    for decade in first_decade..=last_decade {
        let y = frame.y(10f64.powi(decade));
        let _ = writeln!(
            out,
            "<line x1=\"{MARGIN_L}\" y1=\"{y:.1}\" x2=\"{:.1}\" y2=\"{y:.1}\" stroke=\"#dddddd\"/>",
            WIDTH - MARGIN_R
        );
        let _ = writeln!(
            out,
            "<text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"end\">1e{decade}</text>",
            MARGIN_L - 6.0,
            y + 4.0
        );
    }
    // Axes and x label.
    let _ = writeln!(
        out,
        "<line x1=\"{MARGIN_L}\" y1=\"{MARGIN_T}\" x2=\"{MARGIN_L}\" y2=\"{:.1}\" stroke=\"black\"/>",
        HEIGHT - MARGIN_B
    );
    let _ = writeln!(
        out,
        "<line x1=\"{MARGIN_L}\" y1=\"{:.1}\" x2=\"{:.1}\" y2=\"{:.1}\" stroke=\"black\"/>",
        HEIGHT - MARGIN_B,
        WIDTH - MARGIN_R,
        HEIGHT - MARGIN_B
    );
    let _ = writeln!(
        out,
        "<text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"middle\">iteration</text>",
        (MARGIN_L + WIDTH - MARGIN_R) / 2.0,
        HEIGHT - 12.0
    );
    let ticks = (x_max as usize).max(1).div_ceil(10).max(1);
    for iteration in (0..=x_max as usize).step_by(ticks) {
        let x = frame.x(iteration as f64);
        let _ = writeln!(
            out,
            "<text x=\"{x:.1}\" y=\"{:.1}\" text-anchor=\"middle\">{iteration}</text>",
            HEIGHT - MARGIN_B + 16.0
        );
    }

    for (index, run) in runs.iter().enumerate() {
        let color = PALETTE[index % PALETTE.len()];
        let series = |f: fn(&pint_core::solver::IterationRecord) -> Option<f64>| {
            run.history
                .records
                .iter()
                .filter_map(|r| f(r).filter(|v| *v > 0.0).map(|v| (r.iteration as f64, v)))
                .collect::<Vec<_>>()
        };
        polyline(&mut out, &frame, &series(|r| r.error_inf), color, "");
        polyline(&mut out, &frame, &series(|r| r.transformed_error_inf), color, "6 3");

        // Theoretical decay anchored at the initial error.
        if let Some(err0) = run.history.records.first().and_then(|r| r.error_inf) {
            let rate = run.alpha / (1.0 - run.alpha);
            if err0 > 0.0 && rate > 0.0 && rate < 1.0 {
                let points: Vec<(f64, f64)> = run
                    .history
                    .records
                    .iter()
                    .map(|r| (r.iteration as f64, err0 * rate.powi(r.iteration as i32)))
                    .take_while(|&(_, v)| v >= lo)
                    .collect();
                polyline(&mut out, &frame, &points, "#888888", "2 3");
            }
        }

        let _ = writeln!(
            out,
            "<text x=\"{:.1}\" y=\"{:.1}\" fill=\"{color}\">alpha = {}</text>",
            WIDTH - MARGIN_R - 130.0,
            MARGIN_T + 16.0 * (index as f64 + 1.0),
            run.alpha
        );
    }
    out.push_str("</svg>\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use pint_core::solver::{IterationHistory, IterationRecord, StopReason};

    fn fake_run(alpha: f64, errors: &[f64]) -> ConvergenceRun {
        let records = errors
            .iter()
            .enumerate()
            .map(|(k, &e)| IterationRecord {
                iteration: k,
                residual_inf: e,
                error_inf: Some(e),
                transformed_error_inf: Some(e * 0.5),
            })
            .collect();
        ConvergenceRun {
            alpha,
            history: IterationHistory { records, stop: StopReason::MaxIterations },
        }
    }

    #[test]
    fn chart_is_a_complete_svg_document_with_all_series() {
        let runs =
            vec![fake_run(0.1, &[1.0, 0.1, 0.01, 1e-3]), fake_run(0.01, &[1.0, 1e-2, 1e-4])];
        let svg = convergence_chart(&runs);
        assert!(svg.starts_with("<svg"));
        assert!(svg.trim_end().ends_with("</svg>"));
        // err + transformed per alpha, plus two bound lines and gridlines.
        assert!(svg.matches("#1f77b4").count() >= 2);
        assert!(svg.matches("#d62728").count() >= 2);
        assert!(svg.contains("alpha = 0.1"));
        assert!(svg.contains("1e-3"));
    }

    #[test]
    fn empty_history_still_renders() {
        let svg = convergence_chart(&[fake_run(0.5, &[])]);
        assert!(svg.contains("</svg>"));
    }
}
