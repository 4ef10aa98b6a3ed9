//! Deterministic SVG figures for the dominant polytope, the contact
//! complex of an envelope, and crease candidates.

use std::fmt::Write;

use num::Zero;

use crate::envelope::{CreaseKind, CreaseReport};
use crate::futaki::{theta_function, FutakiContext};
use crate::pl::PLFunction;
use crate::polytope::Polytope;
use crate::rat::{dot, rat_to_f64, vec_scale, QVec, Rat};

const SIZE: f64 = 480.0;
const MARGIN: f64 = 24.0;

struct Frame {
    x0: f64,
    y0: f64,
    scale: f64,
}

impl Frame {
    fn new(p: &Polytope) -> Frame {
        let bb = p.bounding_box();
        let x0 = rat_to_f64(&bb[0].0);
        let x1 = rat_to_f64(&bb[0].1);
        let y0 = rat_to_f64(&bb[1].0);
        let y1 = rat_to_f64(&bb[1].1);
        let span = (x1 - x0).max(y1 - y0).max(1e-9);
        Frame { x0, y0: y1, scale: (SIZE - 2.0 * MARGIN) / span }
    }

    fn map(&self, pt: &QVec) -> (f64, f64) {
        let x = MARGIN + (rat_to_f64(&pt[0]) - self.x0) * self.scale;
        let y = MARGIN + (self.y0 - rat_to_f64(&pt[1])) * self.scale;
        (x, y)
    }
}

fn polygon_path(frame: &Frame, verts: &[QVec]) -> String {
    let mut out = String::new();
    for (i, v) in verts.iter().enumerate() {
        let (x, y) = frame.map(v);
        let _ = write!(out, "{}{x:.2},{y:.2}", if i == 0 { "" } else { " " });
    }
    out
}

fn polygon_elem(frame: &Frame, p: &Polytope, style: &str) -> String {
    format!(
        "  <polygon points=\"{}\" style=\"{}\"/>\n",
        polygon_path(frame, &p.ccw_vertices()),
        style
    )
}

fn segment_elem(frame: &Frame, a: &QVec, b: &QVec, style: &str) -> String {
    let (x1, y1) = frame.map(a);
    let (x2, y2) = frame.map(b);
    format!(
        "  <line x1=\"{x1:.2}\" y1=\"{y1:.2}\" x2=\"{x2:.2}\" y2=\"{y2:.2}\" style=\"{style}\"/>\n"
    )
}

/// Clips the line `{cov . y = offset}` to `p`; returns the segment.
fn clipped_level_line(p: &Polytope, cov: &QVec, offset: &Rat) -> Option<(QVec, QVec)> {
    let n2 = dot(cov, cov);
    if n2.is_zero() {
        return None;
    }
    let base = vec_scale(cov, &(offset / &n2));
    let dir = vec![-cov[1].clone(), cov[0].clone()];
    let (t0, t1) = p.clip_line(&base, &dir)?;
    let a: QVec = base.iter().zip(&dir).map(|(b, d)| b + d * &t0).collect();
    let b: QVec = base.iter().zip(&dir).map(|(b, d)| b + d * &t1).collect();
    Some((a, b))
}

/// Figure for an envelope run: base polytope, dominant part, contact cells,
/// crease candidate lines, and the negativity strip when one is certified.
pub fn crease_figure(
    ctx: &FutakiContext,
    er: &crate::envelope::EnvelopeResult,
    crease: &CreaseReport,
) -> String {
    let frame = Frame::new(&ctx.cp.base);
    let mut body = String::new();
    body.push_str(&polygon_elem(
        &frame,
        &ctx.cp.base,
        "fill:#f6f6f6;stroke:#999999;stroke-width:1",
    ));
    let theta = theta_function(ctx);
    if let Some((axis, w)) = &theta.strip {
        let mut system: Vec<(QVec, Rat)> = ctx
            .cp
            .base
            .halfspaces
            .iter()
            .map(|h| (h.normal_rat(), h.offset.clone()))
            .collect();
        system.push((axis.clone(), w.clone()));
        system.push((axis.iter().map(|c| -c).collect(), w.clone()));
        if let Ok(band) = Polytope::from_halfspaces(2, &system) {
            body.push_str(&polygon_elem(&frame, &band, "fill:#ffe2e2;stroke:none"));
        }
    }
    body.push_str(&polygon_elem(
        &frame,
        &ctx.cp.plus,
        "fill:#e3ecfa;fill-opacity:0.7;stroke:#5470a8;stroke-width:1.5",
    ));
    for cell in &er.contact_complex {
        body.push_str(&polygon_elem(
            &frame,
            cell,
            "fill:none;stroke:#b0b8c4;stroke-width:0.8",
        ));
    }
    for c in &crease.candidates {
        if let Some((a, b)) = clipped_level_line(&ctx.cp.plus, &c.covector, &c.offset) {
            let style = match c.kind {
                CreaseKind::Wall(_) => "stroke:#2e7d32;stroke-width:2",
                CreaseKind::Interior => "stroke:#c62828;stroke-width:2",
            };
            body.push_str(&segment_elem(&frame, &a, &b, style));
        }
    }
    for v in &crease.contact_vertices {
        let (x, y) = frame.map(v);
        let _ = writeln!(
            body,
            "  <circle cx=\"{x:.2}\" cy=\"{y:.2}\" r=\"3\" style=\"fill:#1a237e\"/>"
        );
    }
    format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{SIZE}\" height=\"{SIZE}\" viewBox=\"0 0 {SIZE} {SIZE}\">\n{body}</svg>\n"
    )
}

/// Figure for a bare piecewise linear function on a polygon.
pub fn cells_figure(p: &Polytope, u: &PLFunction) -> String {
    let frame = Frame::new(p);
    let mut body = String::new();
    body.push_str(&polygon_elem(&frame, p, "fill:#f6f6f6;stroke:#999999;stroke-width:1"));
    for (cell, _) in u.cells(p) {
        body.push_str(&polygon_elem(
            &frame,
            &cell,
            "fill:none;stroke:#5470a8;stroke-width:1",
        ));
    }
    format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{SIZE}\" height=\"{SIZE}\" viewBox=\"0 0 {SIZE} {SIZE}\">\n{body}</svg>\n"
    )
}
