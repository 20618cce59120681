//! Planar drawings of realizations and knot trajectories.

use std::fmt::Write as _;

use super::IoError;
use crate::framework::{Framework, Realization};
use crate::snap::DeformationPath;

#[derive(Debug, Clone, PartialEq)]
pub struct SvgStyle {
    pub width: f64,
    pub height: f64,
    pub margin: f64,
    pub bar_width: f64,
    pub knot_radius: f64,
    /// Realization `k` is drawn in `palette[k % palette.len()]`.
    pub palette: Vec<String>,
    pub trajectory_color: String,
}

impl Default for SvgStyle {
    fn default() -> Self {
        SvgStyle {
            width: 640.0,
            height: 480.0,
            margin: 24.0,
            bar_width: 2.0,
            knot_radius: 4.0,
            palette: ["#1f3fbf", "#00a0c0", "#c000c0", "#20a020", "#d02020", "#7f3fbf", "#d08000", "#404040"]
                .map(String::from)
                .to_vec(),
            trajectory_color: "#808080".into(),
        }
    }
}

/// Planar path of one knot.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub knot: usize,
    pub points: Vec<[f64; 2]>,
    pub color: Option<String>,
}

/// Trajectories of the listed knots (0-based) along a deformation path.
pub fn knot_trajectories(path: &DeformationPath, knots: &[usize]) -> Vec<Trajectory> {
    knots
        .iter()
        .map(|&k| Trajectory {
            knot: k,
            points: path.samples.iter().map(|s| [s.realization.knot(k)[0], s.realization.knot(k)[1]]).collect(),
            color: None,
        })
        .collect()
}

struct View {
    min: [f64; 2],
    scale: f64,
    margin: f64,
    height: f64,
}

impl View {
    fn map(&self, p: &[f64]) -> (f64, f64) {
        let x = self.margin + (p[0] - self.min[0]) * self.scale;
        let y = self.height - self.margin - (p[1] - self.min[1]) * self.scale;
        (x, y)
    }
}

fn num(v: f64) -> String {
    format!("{:.3}", v)
}

/// SVG drawing: bars as lines, knots as circles, pinned knots as black
/// diamonds, trajectories as polylines. Deterministic for fixed input.
pub fn render_svg(
    fw: &Framework,
    realizations: &[Realization],
    trajectories: &[Trajectory],
    style: &SvgStyle,
) -> Result<String, IoError> {
    if fw.dimension() != 2 {
        return Err(IoError::UnsupportedDimension(fw.dimension()));
    }
    let mut lo = [f64::INFINITY; 2];
    let mut hi = [f64::NEG_INFINITY; 2];
    let mut extend = |p: &[f64]| {
        for a in 0..2 {
            lo[a] = lo[a].min(p[a]);
            hi[a] = hi[a].max(p[a]);
        }
    };
    for r in realizations {
        (0..r.knot_count()).for_each(|k| extend(r.knot(k)));
    }
    for t in trajectories {
        t.points.iter().for_each(|p| extend(p));
    }
    fw.pins().values().for_each(|p| extend(p));
    if !lo[0].is_finite() {
        lo = [0.0; 2];
        hi = [1.0; 2];
    }
    let span = (hi[0] - lo[0]).max(hi[1] - lo[1]).max(1e-9);
    let inner_w = style.width - 2.0 * style.margin;
    let inner_h = style.height - 2.0 * style.margin;
    let scale = (inner_w / (hi[0] - lo[0]).max(span * 1e-3)).min(inner_h / (hi[1] - lo[1]).max(span * 1e-3));
    let view = View { min: lo, scale, margin: style.margin, height: style.height };

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{}" height="{}" viewBox="0 0 {} {}">"#,
        num(style.width),
        num(style.height),
        num(style.width),
        num(style.height)
    );
    let _ = writeln!(s, r#"  <rect width="100%" height="100%" fill="white"/>"#);
    for t in trajectories {
        let pts: Vec<String> = t
            .points
            .iter()
            .map(|p| {
                let (x, y) = view.map(p);
                format!("{},{}", num(x), num(y))
            })
            .collect();
        let color = t.color.as_deref().unwrap_or(&style.trajectory_color);
        let _ = writeln!(
            s,
            r#"  <polyline class="trajectory" data-knot="{}" points="{}" fill="none" stroke="{}" stroke-width="1" stroke-dasharray="4 2"/>"#,
            xml_escape(&fw.knot_ids()[t.knot]),
            pts.join(" "),
            xml_escape(color)
        );
    }
    for (idx, r) in realizations.iter().enumerate() {
        let color = xml_escape(&style.palette[idx % style.palette.len().max(1)]);
        let _ = writeln!(s, r#"  <g class="realization" stroke="{color}" fill="{color}">"#);
        for e in fw.edges() {
            let (x1, y1) = view.map(r.knot(e.i));
            let (x2, y2) = view.map(r.knot(e.j));
            let _ = writeln!(
                s,
                r#"    <line x1="{}" y1="{}" x2="{}" y2="{}" stroke-width="{}"/>"#,
                num(x1),
                num(y1),
                num(x2),
                num(y2),
                num(style.bar_width)
            );
        }
        for k in (0..r.knot_count()).filter(|&k| !fw.is_pinned(k)) {
            let (x, y) = view.map(r.knot(k));
            let _ = writeln!(s, r#"    <circle cx="{}" cy="{}" r="{}"/>"#, num(x), num(y), num(style.knot_radius));
        }
        let _ = writeln!(s, "  </g>");
    }
    for p in fw.pins().values() {
        let (x, y) = view.map(p);
        let d = 1.6 * style.knot_radius;
        let _ = writeln!(
            s,
            r#"  <polygon class="pin" points="{},{} {},{} {},{} {},{}" fill="black"/>"#,
            num(x),
            num(y - d),
            num(x + d),
            num(y),
            num(x),
            num(y + d),
            num(x - d),
            num(y)
        );
    }
    s.push_str("</svg>\n");
    Ok(s)
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}
