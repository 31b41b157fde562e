//! Static SVG documents for the outliergram, raw curves and the functional
//! boxplot. Output is a pure function of the inputs: no timestamps, and every
//! coordinate is printed with six significant digits.

use std::fmt::Write as _;

use crate::depth::ParabolaCoefficients;
use crate::error::{Error, Result};
use crate::fbplot::FunctionalBoxplotResult;
use crate::outliergram::OutlierReport;
use crate::sample::FunctionalSample;

#[derive(Debug, Clone, PartialEq)]
pub struct PlotSpec {
    pub width: f64,
    pub height: f64,
    pub margin: f64,
    pub point_radius: f64,
    pub base_color: String,
    pub outlier_color: String,
    pub boundary_color: String,
    /// Fixed y range; computed from the data when `None`.
    pub y_range: Option<(f64, f64)>,
    pub title: Option<String>,
}

impl Default for PlotSpec {
    fn default() -> Self {
        Self {
            width: 640.0,
            height: 480.0,
            margin: 56.0,
            point_radius: 3.5,
            base_color: "#8c8c8c".into(),
            outlier_color: "#d62728".into(),
            boundary_color: "#1f3b73".into(),
            y_range: None,
            title: None,
        }
    }
}

/// Rounds to six significant digits and drops trailing zeros.
pub fn fmt6(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return "0".into();
    }
    let magnitude = x.abs().log10().floor() as i32;
    let decimals = 5 - magnitude;
    let text = if decimals > 0 {
        format!("{:.*}", decimals as usize, x)
    } else {
        let scale = 10f64.powi(-decimals);
        format!("{:.0}", (x / scale).round() * scale)
    };
    let text = if text.contains('.') {
        text.trim_end_matches('0').trim_end_matches('.').to_owned()
    } else {
        text
    };
    if text == "-0" {
        "0".into()
    } else {
        text
    }
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

/// Maps data coordinates onto the plotting area.
struct Frame {
    spec: PlotSpec,
    x: (f64, f64),
    y: (f64, f64),
    out: String,
}

impl Frame {
    fn new(spec: &PlotSpec, x: (f64, f64), y: (f64, f64)) -> Self {
        let widen = |(lo, hi): (f64, f64)| {
            if hi - lo > 1e-12 {
                (lo, hi)
            } else {
                (lo - 0.5, hi + 0.5)
            }
        };
        let mut out = String::new();
        let _ = writeln!(out, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
        let _ = writeln!(
            out,
            r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{w}" height="{h}" viewBox="0 0 {w} {h}">"#,
            w = fmt6(spec.width),
            h = fmt6(spec.height)
        );
        let _ = writeln!(
            out,
            r#"<rect x="0" y="0" width="{}" height="{}" fill="white"/>"#,
            fmt6(spec.width),
            fmt6(spec.height)
        );
        Self {
            spec: spec.clone(),
            x: widen(x),
            y: widen(y),
            out,
        }
    }

    fn px(&self, x: f64) -> f64 {
        let m = self.spec.margin;
        m + (x - self.x.0) / (self.x.1 - self.x.0) * (self.spec.width - 2.0 * m)
    }

    fn py(&self, y: f64) -> f64 {
        let m = self.spec.margin;
        self.spec.height - m - (y - self.y.0) / (self.y.1 - self.y.0) * (self.spec.height - 2.0 * m)
    }

    fn axes(&mut self, x_label: &str, y_label: &str) {
        let m = self.spec.margin;
        let (w, h) = (self.spec.width, self.spec.height);
        let _ = writeln!(
            self.out,
            r#"<rect class="frame" x="{}" y="{}" width="{}" height="{}" fill="none" stroke="black"/>"#,
            fmt6(m),
            fmt6(m),
            fmt6(w - 2.0 * m),
            fmt6(h - 2.0 * m)
        );
        for k in 0..=4 {
            let fx = self.x.0 + (self.x.1 - self.x.0) * k as f64 / 4.0;
            let fy = self.y.0 + (self.y.1 - self.y.0) * k as f64 / 4.0;
            let (x, y) = (self.px(fx), self.py(fy));
            let _ = writeln!(
                self.out,
                r#"<line x1="{x}" y1="{b}" x2="{x}" y2="{b2}" stroke="black"/><text x="{x}" y="{t}" font-size="11" text-anchor="middle">{v}</text>"#,
                x = fmt6(x),
                b = fmt6(h - m),
                b2 = fmt6(h - m + 5.0),
                t = fmt6(h - m + 18.0),
                v = fmt6(fx)
            );
            let _ = writeln!(
                self.out,
                r#"<line x1="{a}" y1="{y}" x2="{m}" y2="{y}" stroke="black"/><text x="{t}" y="{y}" font-size="11" text-anchor="end" dominant-baseline="middle">{v}</text>"#,
                a = fmt6(m - 5.0),
                m = fmt6(m),
                y = fmt6(y),
                t = fmt6(m - 8.0),
                v = fmt6(fy)
            );
        }
        let _ = writeln!(
            self.out,
            r#"<text x="{}" y="{}" font-size="13" text-anchor="middle">{}</text>"#,
            fmt6(w / 2.0),
            fmt6(h - 12.0),
            escape(x_label)
        );
        let _ = writeln!(
            self.out,
            r#"<text x="16" y="{y}" font-size="13" text-anchor="middle" transform="rotate(-90 16 {y})">{}</text>"#,
            escape(y_label),
            y = fmt6(h / 2.0)
        );
        if let Some(title) = self.spec.title.clone() {
            let _ = writeln!(
                self.out,
                r#"<text x="{}" y="24" font-size="15" text-anchor="middle">{}</text>"#,
                fmt6(w / 2.0),
                escape(&title)
            );
        }
    }

    fn points_attr(&self, xs: &[f64], ys: &[f64]) -> String {
        xs.iter()
            .zip(ys)
            .map(|(&x, &y)| format!("{},{}", fmt6(self.px(x)), fmt6(self.py(y))))
            .collect::<Vec<_>>()
            .join(" ")
    }

    fn polyline(&mut self, class: &str, xs: &[f64], ys: &[f64], color: &str, extra: &str) {
        let pts = self.points_attr(xs, ys);
        let _ = writeln!(
            self.out,
            r#"<polyline class="{class}" points="{pts}" fill="none" stroke="{color}"{extra}/>"#
        );
    }

    fn finish(mut self) -> String {
        self.out.push_str("</svg>\n");
        self.out
    }
}

fn curve_label(sample: Option<&FunctionalSample>, i: usize) -> String {
    sample
        .and_then(|s| s.label(i))
        .map(str::to_owned)
        .unwrap_or_else(|| (i + 1).to_string())
}

/// MBD against MEI with the parabola (solid) and the boundary parabola
/// shifted down by the threshold (dashed). Outliers are labelled; curves
/// flagged after a vertical shift get a hollow circle at the shifted point.
pub fn render_outliergram(
    report: &OutlierReport,
    sample: Option<&FunctionalSample>,
    spec: &PlotSpec,
) -> Result<String> {
    let n = report.records.len();
    if n < FunctionalSample::MIN_CURVES {
        return Err(Error::TooFewCurves {
            required: FunctionalSample::MIN_CURVES,
            actual: n,
        });
    }
    let coeffs = ParabolaCoefficients::new(n);
    let threshold = report.threshold();
    let grid: Vec<f64> = (0..=200).map(|k| k as f64 / 200.0).collect();
    let solid: Vec<f64> = grid.iter().map(|&m| coeffs.value(m)).collect();
    let dashed: Vec<f64> = solid.iter().map(|v| v - threshold).collect();

    let shifted: Vec<(f64, f64)> = report
        .shape_outliers
        .iter()
        .filter_map(|o| Some((o.shifted_mei?, o.shifted_mbd?)))
        .collect();
    let y_range = spec.y_range.unwrap_or_else(|| {
        let ys = report
            .records
            .iter()
            .map(|r| r.mbd)
            .chain(shifted.iter().map(|s| s.1))
            .chain(solid.iter().copied());
        let hi = ys.fold(f64::NEG_INFINITY, f64::max);
        let lo = report
            .records
            .iter()
            .map(|r| r.mbd)
            .fold(0.0f64, f64::min);
        (lo, hi * 1.05)
    });

    let mut frame = Frame::new(spec, (0.0, 1.0), y_range);
    let _ = writeln!(
        frame.out,
        r#"<clipPath id="plot-area"><rect x="{m}" y="{m}" width="{w}" height="{h}"/></clipPath>"#,
        m = fmt6(spec.margin),
        w = fmt6(spec.width - 2.0 * spec.margin),
        h = fmt6(spec.height - 2.0 * spec.margin)
    );
    frame.axes("MEI", "MBD");
    let color = spec.boundary_color.clone();
    frame.polyline("parabola", &grid, &solid, &color, r#" clip-path="url(#plot-area)""#);
    frame.polyline(
        "boundary",
        &grid,
        &dashed,
        &color,
        r#" stroke-dasharray="6,4" clip-path="url(#plot-area)""#,
    );

    let flagged = report.shape_outlier_indices();
    for (i, r) in report.records.iter().enumerate() {
        let fill = if flagged.contains(&i) {
            &spec.outlier_color
        } else {
            &spec.base_color
        };
        let _ = writeln!(
            frame.out,
            r#"<circle class="point" cx="{}" cy="{}" r="{}" fill="{fill}"/>"#,
            fmt6(frame.px(r.mei)),
            fmt6(frame.py(r.mbd)),
            fmt6(spec.point_radius)
        );
    }
    for o in &report.shape_outliers {
        let r = &report.records[o.index];
        let (x, y) = match (o.shifted_mei, o.shifted_mbd) {
            (Some(mei), Some(mbd)) => {
                let _ = writeln!(
                    frame.out,
                    r#"<circle class="shifted" cx="{}" cy="{}" r="{}" fill="none" stroke="{}" stroke-width="1.5"/>"#,
                    fmt6(frame.px(mei)),
                    fmt6(frame.py(mbd)),
                    fmt6(spec.point_radius * 1.6),
                    spec.outlier_color
                );
                (mei, mbd)
            }
            _ => (r.mei, r.mbd),
        };
        let _ = writeln!(
            frame.out,
            r#"<text class="label" x="{}" y="{}" font-size="11" fill="{}">{}</text>"#,
            fmt6(frame.px(x) + spec.point_radius + 2.0),
            fmt6(frame.py(y) - spec.point_radius - 2.0),
            spec.outlier_color,
            escape(&curve_label(sample, o.index))
        );
    }
    Ok(frame.finish())
}

fn value_range(sample: &FunctionalSample, spec: &PlotSpec) -> (f64, f64) {
    spec.y_range.unwrap_or_else(|| {
        let lo = sample.values().iter().copied().fold(f64::INFINITY, f64::min);
        let hi = sample.values().iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let pad = 0.04 * (hi - lo);
        (lo - pad, hi + pad)
    })
}

fn time_range(sample: &FunctionalSample) -> (f64, f64) {
    let t = sample.grid().points();
    (t[0], t[t.len() - 1])
}

/// All curves against time; `highlight` ones are drawn on top in the
/// outlier color.
pub fn render_curves(sample: &FunctionalSample, highlight: &[usize], spec: &PlotSpec) -> String {
    let mut frame = Frame::new(spec, time_range(sample), value_range(sample, spec));
    frame.axes("t", "x(t)");
    let t = sample.grid().points().to_vec();
    for i in (0..sample.n()).filter(|i| !highlight.contains(i)) {
        frame.polyline("curve", &t, sample.curve(i), &spec.base_color, r#" stroke-width="0.8""#);
    }
    for &i in highlight.iter().filter(|&&i| i < sample.n()) {
        frame.polyline("highlight", &t, sample.curve(i), &spec.outlier_color, r#" stroke-width="1.6""#);
    }
    frame.finish()
}

/// Central region shaded, fences dashed, the deepest curve in black and
/// magnitude outliers dashed in the outlier color.
pub fn render_fbplot(sample: &FunctionalSample, fb: &FunctionalBoxplotResult, spec: &PlotSpec) -> String {
    let mut frame = Frame::new(spec, time_range(sample), value_range(sample, spec));
    frame.axes("t", "x(t)");
    let t = sample.grid().points().to_vec();
    let mut ring_t = t.clone();
    ring_t.extend(t.iter().rev());
    let mut ring_v = fb.central_upper.clone();
    ring_v.extend(fb.central_lower.iter().rev());
    let pts = frame.points_attr(&ring_t, &ring_v);
    let _ = writeln!(
        frame.out,
        r#"<polygon class="central" points="{pts}" fill="{}" fill-opacity="0.35" stroke="{}"/>"#,
        spec.boundary_color, spec.boundary_color
    );
    let color = spec.boundary_color.clone();
    frame.polyline("fence", &t, &fb.fence_upper, &color, r#" stroke-dasharray="6,4""#);
    frame.polyline("fence", &t, &fb.fence_lower, &color, r#" stroke-dasharray="6,4""#);
    frame.polyline("median", &t, sample.curve(fb.median_index), "black", r#" stroke-width="2""#);
    for &i in &fb.magnitude_outliers {
        let outlier_color = spec.outlier_color.clone();
        frame.polyline(
            "magnitude-outlier",
            &t,
            sample.curve(i),
            &outlier_color,
            r#" stroke-dasharray="4,3" stroke-width="1.4""#,
        );
    }
    frame.finish()
}
