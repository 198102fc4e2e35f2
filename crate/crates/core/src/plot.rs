//! Standalone SVG diagnostics for curves, segmentations, schedules and
//! refinement traces.
//!
//! Output is a pure function of the input: fixed canvas, fixed palette,
//! coordinates printed with two decimals.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::model::{ProgressCurve, SegmentationResult, SyntheticTruth, WarpSchedule};

pub const WIDTH: f64 = 960.0;
pub const HEIGHT: f64 = 540.0;

const LEFT: f64 = 70.0;
const RIGHT: f64 = 930.0;
const TOP: f64 = 30.0;
const BOTTOM: f64 = 480.0;

const PALETTE: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf", "#8c564b", "#e377c2",
];
const TRUTH_COLOR: &str = "#222222";
const SEGMENT_COLOR: &str = "#555555";

fn color(i: usize) -> &'static str {
    PALETTE[i % PALETTE.len()]
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

/// Maps data coordinates onto the plot rectangle.
struct Frame {
    x_min: f64,
    x_max: f64,
    y_min: f64,
    y_max: f64,
}

impl Frame {
    fn x(&self, v: f64) -> f64 {
        LEFT + (v - self.x_min) / (self.x_max - self.x_min) * (RIGHT - LEFT)
    }

    fn y(&self, v: f64) -> f64 {
        BOTTOM - (v - self.y_min) / (self.y_max - self.y_min) * (BOTTOM - TOP)
    }
}

struct Canvas {
    frame: Frame,
    body: String,
    legend: Vec<(String, &'static str, bool)>,
}

impl Canvas {
    fn new(frame: Frame, title: &str, x_label: &str, y_label: &str) -> Self {
        let mut c = Canvas {
            frame,
            body: String::new(),
            legend: Vec::new(),
        };
        c.axes(title, x_label, y_label);
        c
    }

    fn axes(&mut self, title: &str, x_label: &str, y_label: &str) {
        let b = &mut self.body;
        let _ = writeln!(
            b,
            r##"<rect x="{LEFT:.2}" y="{TOP:.2}" width="{:.2}" height="{:.2}" fill="none" stroke="#000000"/>"##,
            RIGHT - LEFT,
            BOTTOM - TOP
        );
        for i in 0..=4 {
            let f = i as f64 / 4.0;
            let xv = self.frame.x_min + f * (self.frame.x_max - self.frame.x_min);
            let yv = self.frame.y_min + f * (self.frame.y_max - self.frame.y_min);
            let (px, py) = (self.frame.x(xv), self.frame.y(yv));
            let _ = writeln!(
                b,
                r##"<line x1="{px:.2}" y1="{BOTTOM:.2}" x2="{px:.2}" y2="{:.2}" stroke="#000000"/>"##,
                BOTTOM + 6.0
            );
            let _ = writeln!(
                b,
                r#"<text x="{px:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
                BOTTOM + 22.0,
                tick_label(xv)
            );
            let _ = writeln!(
                b,
                r##"<line x1="{:.2}" y1="{py:.2}" x2="{LEFT:.2}" y2="{py:.2}" stroke="#000000"/>"##,
                LEFT - 6.0
            );
            let _ = writeln!(
                b,
                r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"#,
                LEFT - 10.0,
                py + 4.0,
                tick_label(yv)
            );
        }
        let _ = writeln!(
            b,
            r#"<text x="{:.2}" y="20.00" text-anchor="middle">{}</text>"#,
            (LEFT + RIGHT) / 2.0,
            escape(title)
        );
        let _ = writeln!(
            b,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
            (LEFT + RIGHT) / 2.0,
            HEIGHT - 20.0,
            escape(x_label)
        );
        let _ = writeln!(
            b,
            r#"<text x="18.00" y="{:.2}" text-anchor="middle" transform="rotate(-90 18.00 {:.2})">{}</text>"#,
            (TOP + BOTTOM) / 2.0,
            (TOP + BOTTOM) / 2.0,
            escape(y_label)
        );
    }

    fn polyline(&mut self, points: impl Iterator<Item = (f64, f64)>, stroke: &'static str, dotted: bool) {
        let mut coords = String::new();
        for (i, (x, y)) in points.enumerate() {
            if i > 0 {
                coords.push(' ');
            }
            let _ = write!(coords, "{:.2},{:.2}", self.frame.x(x), self.frame.y(y));
        }
        let style = if dotted { r#" stroke-dasharray="2 4""# } else { "" };
        let _ = writeln!(
            self.body,
            r#"<polyline points="{coords}" fill="none" stroke="{stroke}" stroke-width="2"{style}/>"#
        );
    }

    fn dashed_segment(&mut self, from: (f64, f64), to: (f64, f64)) {
        let f = &self.frame;
        let _ = writeln!(
            self.body,
            r#"<line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="{SEGMENT_COLOR}" stroke-width="1.5" stroke-dasharray="6 4"/>"#,
            f.x(from.0),
            f.y(from.1),
            f.x(to.0),
            f.y(to.1)
        );
    }

    fn finish(mut self) -> String {
        for (i, (label, stroke, dotted)) in self.legend.iter().enumerate() {
            let y = TOP + 16.0 + 18.0 * i as f64;
            let style = if *dotted { r#" stroke-dasharray="2 4""# } else { "" };
            let _ = writeln!(
                self.body,
                r#"<line x1="{:.2}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="{stroke}" stroke-width="2"{style}/>"#,
                LEFT + 12.0,
                LEFT + 36.0
            );
            let _ = writeln!(
                self.body,
                r#"<text x="{:.2}" y="{:.2}">{}</text>"#,
                LEFT + 42.0,
                y + 4.0,
                escape(label)
            );
        }
        format!(
            concat!(
                r#"<?xml version="1.0" encoding="UTF-8"?>"#,
                "\n",
                r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{w}" height="{h}" viewBox="0 0 {w} {h}" font-family="sans-serif" font-size="12">"#,
                "\n",
                r##"<rect x="0" y="0" width="{w}" height="{h}" fill="#ffffff"/>"##,
                "\n{body}</svg>\n"
            ),
            w = WIDTH,
            h = HEIGHT,
            body = self.body
        )
    }
}

fn tick_label(v: f64) -> String {
    let s = format!("{v:.2}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" {
        "0".to_owned()
    } else {
        s.to_owned()
    }
}

fn value_range(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = values.fold((0.0f64, 1.0f64), |(lo, hi), v| (lo.min(v), hi.max(v)));
    (lo, hi)
}

/// Progress curves against normalized time, with an optional dotted ground
/// truth and one dashed line per segment fit.
pub fn plot_spf(
    curves: &[(&str, &ProgressCurve)],
    truth: Option<&SyntheticTruth>,
    segmentation: Option<&SegmentationResult>,
) -> Result<String> {
    let t = match curves.first() {
        Some((_, c)) => c.len(),
        None => return Err(Error::domain("nothing to plot")),
    };
    if curves.iter().any(|(_, c)| c.len() != t) {
        return Err(Error::domain("curves in one plot must have the same length"));
    }
    let truth_values = match truth {
        Some(tr) if tr.frame_count() != t => {
            return Err(Error::domain("ground truth length differs from the curves"))
        }
        Some(tr) => Some(
            tr.normalized()
                .ok_or_else(|| Error::domain("ground truth is constant"))?,
        ),
        None => None,
    };
    if segmentation.is_some_and(|s| s.frame_count() != t) {
        return Err(Error::domain("segmentation length differs from the curves"));
    }
    let last = (t - 1) as f64;
    let seg_ends = segmentation
        .into_iter()
        .flat_map(|s| s.segments().iter())
        .flat_map(|s| [s.value_at(s.start as f64), s.value_at(s.end as f64)]);
    let (y_min, y_max) = value_range(seg_ends);
    let frame = Frame {
        x_min: 0.0,
        x_max: 1.0,
        y_min,
        y_max,
    };
    let mut canvas = Canvas::new(frame, "Semantic progress", "normalized time", "progress");
    if let Some(values) = &truth_values {
        canvas.polyline(
            values.iter().enumerate().map(|(k, &v)| (k as f64 / last, v)),
            TRUTH_COLOR,
            true,
        );
        canvas.legend.push(("ground truth".to_owned(), TRUTH_COLOR, true));
    }
    for (i, (label, curve)) in curves.iter().enumerate() {
        canvas.polyline(
            curve.values().iter().enumerate().map(|(k, &v)| (k as f64 / last, v)),
            color(i),
            false,
        );
        canvas.legend.push(((*label).to_owned(), color(i), false));
    }
    if let Some(seg) = segmentation {
        for s in seg.segments() {
            let (a, b) = (s.start as f64, s.end as f64);
            canvas.dashed_segment((a / last, s.value_at(a)), (b / last, s.value_at(b)));
        }
    }
    Ok(canvas.finish())
}

/// Band positions at one timestep of the schedule, drawn over the warp itself.
pub fn plot_schedule(schedule: &WarpSchedule, step: usize) -> Result<String> {
    let positions = schedule
        .steps()
        .get(step)
        .ok_or_else(|| {
            Error::domain(format!(
                "step {step} out of range for {} timesteps",
                schedule.steps().len()
            ))
        })?;
    let last = (schedule.frame_count() - 1) as f64;
    let frame = Frame {
        x_min: 0.0,
        x_max: last,
        y_min: 0.0,
        y_max: last,
    };
    let title = format!("Warped positions at normalized timestep {}", tick_label(positions.t_norm));
    let mut canvas = Canvas::new(frame, &title, "output frame", "source position");
    canvas.polyline(
        schedule.tau().iter().enumerate().map(|(k, &v)| (k as f64, v)),
        TRUTH_COLOR,
        true,
    );
    canvas.legend.push(("warp".to_owned(), TRUTH_COLOR, true));
    for (b, band) in positions.positions.iter().enumerate() {
        canvas.polyline(band.iter().enumerate().map(|(k, &v)| (k as f64, v)), color(b), false);
    }
    let bands = schedule.bands();
    for b in [0, bands.band_count() - 1] {
        canvas
            .legend
            .push((format!("band {b} (strength {:.3})", bands.alpha(b)), color(b), false));
        if bands.band_count() == 1 {
            break;
        }
    }
    Ok(canvas.finish())
}

/// Linearity score per refinement pass.
pub fn plot_trace(scores: &[f64]) -> Result<String> {
    if scores.is_empty() {
        return Err(Error::domain("nothing to plot"));
    }
    if scores.iter().any(|v| !v.is_finite()) {
        return Err(Error::domain("trace values must be finite"));
    }
    let frame = Frame {
        x_min: 0.0,
        x_max: (scores.len() - 1).max(1) as f64,
        y_min: 0.0,
        y_max: 1.0,
    };
    let mut canvas = Canvas::new(frame, "Refinement trace", "iteration", "linearity score");
    canvas.polyline(scores.iter().enumerate().map(|(i, &v)| (i as f64, v)), color(0), false);
    canvas.legend.push(("linearity score".to_owned(), color(0), false));
    Ok(canvas.finish())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::PacingTarget;
    use crate::segment::segmented_least_squares;
    use crate::warp::{build_schedule, ScheduleConfig};

    fn polylines(svg: &str) -> Vec<&str> {
        svg.lines().filter(|l| l.starts_with("<polyline")).collect()
    }

    #[test]
    fn linear_curve_spans_corners() {
        let c = ProgressCurve::linear(5).unwrap();
        let svg = plot_spf(&[("fit", &c)], None, None).unwrap();
        let lines = polylines(&svg);
        assert_eq!(lines.len(), 1);
        assert!(lines[0].contains(r#"points="70.00,480.00 "#));
        assert!(lines[0].contains(r#" 930.00,30.00""#));
        assert!(svg.contains(r#"viewBox="0 0 960 540""#));
    }

    #[test]
    fn segment_overlay_count() {
        let v: Vec<f64> = (0..20).map(|k| if k <= 9 { 0.0 } else { (k - 9) as f64 / 10.0 }).collect();
        let c = ProgressCurve::new(v.clone()).unwrap();
        let seg = segmented_least_squares(&v, 1e-4).unwrap();
        let svg = plot_spf(&[("fit", &c)], None, Some(&seg)).unwrap();
        let dashed = svg.lines().filter(|l| l.starts_with("<line") && l.contains(r#"stroke-dasharray="6 4""#));
        assert_eq!(dashed.count(), seg.segment_count());
    }

    #[test]
    fn rejects_mismatched_inputs() {
        let a = ProgressCurve::linear(5).unwrap();
        let b = ProgressCurve::linear(6).unwrap();
        assert!(plot_spf(&[("a", &a), ("b", &b)], None, None).is_err());
        assert!(plot_spf(&[], None, None).is_err());
        let truth = SyntheticTruth::new(vec![0.0, 1.0], None).unwrap();
        assert!(plot_spf(&[("a", &a)], Some(&truth), None).is_err());
    }

    #[test]
    fn labels_are_escaped() {
        let c = ProgressCurve::linear(3).unwrap();
        let svg = plot_spf(&[("a<b & c", &c)], None, None).unwrap();
        assert!(svg.contains("a&lt;b &amp; c"));
    }

    #[test]
    fn schedule_polyline_count() {
        let cfg = ScheduleConfig {
            band_count: 6,
            alpha_low: 0.77,
            alpha_high: 0.2,
            kappa: 4.0,
            timesteps: vec![1.0],
            compression: None,
        };
        let curve = ProgressCurve::new((0..9).map(|k| (k as f64 / 8.0).powi(2)).collect()).unwrap();
        let s = build_schedule(&curve, &PacingTarget::Linear, &cfg).unwrap();
        let svg = plot_schedule(&s, 0).unwrap();
        assert_eq!(polylines(&svg).len(), 7);
        assert!(plot_schedule(&s, 1).is_err());
    }

    #[test]
    fn trace_plot() {
        let svg = plot_trace(&[0.5, 0.9, 0.99]).unwrap();
        assert_eq!(polylines(&svg).len(), 1);
        assert!(plot_trace(&[]).is_err());
    }

    #[test]
    fn tick_labels() {
        assert_eq!(tick_label(0.25), "0.25");
        assert_eq!(tick_label(1.0), "1");
        assert_eq!(tick_label(20.0), "20");
        assert_eq!(tick_label(-0.0), "0");
    }
}
