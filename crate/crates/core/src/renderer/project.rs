use std::f64::consts::{PI, TAU};

use super::scene::{Node, Paint, PathOp};
use crate::pipeline::Mark;

pub const POINT_RADIUS: f64 = 2.5;
pub const POINT_OPACITY: f64 = 0.7;
pub const LINE_WIDTH: f64 = 1.5;
/// Share of the panel's half-extent used as the polar radius.
pub const POLAR_FILL: f64 = 0.9;

/// Device-space rectangle of a panel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Viewport {
    pub x: f64,
    pub y: f64,
    pub width: f64,
    pub height: f64,
}

impl Viewport {
    pub fn contains(&self, px: f64, py: f64) -> bool {
        let eps = 1e-6;
        px >= self.x - eps
            && px <= self.x + self.width + eps
            && py >= self.y - eps
            && py <= self.y + self.height + eps
    }

    pub fn center(&self) -> (f64, f64) {
        (self.x + self.width / 2.0, self.y + self.height / 2.0)
    }

    pub fn polar_radius(&self) -> f64 {
        self.width.min(self.height) / 2.0 * POLAR_FILL
    }
}

/// How a polar aesthetic maps onto angle or radius.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PolarAxis {
    Continuous { lo: f64, hi: f64 },
    Discrete(usize),
    Implicit,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Projection {
    /// Scaled-space extents mapped onto the viewport, y growing upward.
    Cartesian { x: (f64, f64), y: (f64, f64) },
    Polar { theta: PolarAxis, r: PolarAxis },
}

impl Projection {
    pub fn cartesian(&self, vp: &Viewport, x: f64, y: f64) -> (f64, f64) {
        let Projection::Cartesian { x: (x0, x1), y: (y0, y1) } = *self else {
            unreachable!("cartesian projection expected")
        };
        (
            vp.x + (x - x0) / (x1 - x0) * vp.width,
            vp.y + vp.height - (y - y0) / (y1 - y0) * vp.height,
        )
    }

    fn angle(&self, t: f64) -> f64 {
        match self {
            Projection::Polar { theta, .. } => match *theta {
                PolarAxis::Continuous { lo, hi } => TAU * (t - lo) / (hi - lo),
                PolarAxis::Discrete(n) => TAU * t / n.max(1) as f64,
                PolarAxis::Implicit => 0.0,
            },
            _ => unreachable!(),
        }
    }

    fn radius(&self, vp: &Viewport, v: f64) -> f64 {
        let full = vp.polar_radius();
        match self {
            Projection::Polar { r, .. } => match *r {
                PolarAxis::Continuous { lo, hi } => full * (v - lo) / (hi - lo),
                PolarAxis::Discrete(n) => full * (v + 0.5) / n.max(1) as f64,
                PolarAxis::Implicit => full,
            },
            _ => unreachable!(),
        }
    }

    fn rings(&self) -> f64 {
        match self {
            Projection::Polar { r: PolarAxis::Discrete(n), .. } => (*n).max(1) as f64,
            _ => 1.0,
        }
    }

    /// Data point (theta, r) to device space.
    pub fn polar(&self, vp: &Viewport, t: f64, r: f64) -> (f64, f64) {
        polar_point(vp, self.angle(t), self.radius(vp, r))
    }
}

/// Angle 0 at twelve o'clock, increasing clockwise.
pub fn polar_point(vp: &Viewport, angle: f64, radius: f64) -> (f64, f64) {
    let (cx, cy) = vp.center();
    (cx + radius * angle.sin(), cy - radius * angle.cos())
}

/// Full circle as two half arcs, since one SVG arc cannot close on itself.
fn circle_ops(vp: &Viewport, radius: f64) -> Vec<PathOp> {
    let (x0, y0) = polar_point(vp, 0.0, radius);
    let (x1, y1) = polar_point(vp, PI, radius);
    vec![
        PathOp::Move(x0, y0),
        PathOp::Arc(radius, false, true, x1, y1),
        PathOp::Arc(radius, false, true, x0, y0),
        PathOp::Close,
    ]
}

/// Annular sector between angles `a0..a1` and radii `r0..r1`.
pub fn sector_ops(vp: &Viewport, a0: f64, a1: f64, r0: f64, r1: f64) -> Vec<PathOp> {
    let sweep = a1 - a0;
    if sweep >= TAU - 1e-9 {
        let mut ops = circle_ops(vp, r1);
        if r0 > 0.0 {
            ops.extend(circle_ops(vp, r0));
        }
        return ops;
    }
    let large = sweep > PI;
    let (ox0, oy0) = polar_point(vp, a0, r1);
    let (ox1, oy1) = polar_point(vp, a1, r1);
    let mut ops = vec![PathOp::Move(ox0, oy0), PathOp::Arc(r1, large, true, ox1, oy1)];
    if r0 > 0.0 {
        let (ix1, iy1) = polar_point(vp, a1, r0);
        let (ix0, iy0) = polar_point(vp, a0, r0);
        ops.push(PathOp::Line(ix1, iy1));
        ops.push(PathOp::Arc(r0, large, false, ix0, iy0));
    } else {
        let (cx, cy) = vp.center();
        ops.push(PathOp::Line(cx, cy));
    }
    ops.push(PathOp::Close);
    ops
}

/// Device-space drawing for one mark.
pub fn project(mark: &Mark, projection: &Projection, vp: &Viewport, color: &str) -> Node {
    let polar = matches!(projection, Projection::Polar { .. });
    let at = |x: f64, y: f64| {
        if polar {
            projection.polar(vp, x, y)
        } else {
            projection.cartesian(vp, x, y)
        }
    };
    match *mark {
        Mark::Point { x, y, .. } => {
            let (cx, cy) = at(x, y);
            Node::Circle {
                cx,
                cy,
                r: POINT_RADIUS,
                paint: Paint::fill(color).with_opacity(POINT_OPACITY),
            }
        }
        Mark::Segment { x0, y0, x1, y1, .. } => {
            let (x1d, y1d) = at(x0, y0);
            let (x2d, y2d) = at(x1, y1);
            Node::Line {
                x1: x1d,
                y1: y1d,
                x2: x2d,
                y2: y2d,
                paint: Paint::stroke(color, LINE_WIDTH),
            }
        }
        Mark::Rect { x, width, y0, y1, .. } if !polar => {
            let (left, top) = at(x - width / 2.0, y1);
            let (right, bottom) = at(x + width / 2.0, y0);
            Node::Rect {
                x: left,
                y: top,
                width: right - left,
                height: bottom - top,
                paint: Paint::fill(color),
            }
        }
        Mark::Wedge { theta0, theta1, r0, r1, .. } if polar => {
            let unit = vp.polar_radius() / projection.rings();
            Node::Path {
                ops: sector_ops(vp, theta0, theta1, r0 * unit, r1 * unit),
                paint: Paint {
                    fill: Some(color.to_string()),
                    stroke: Some("#ffffff".to_string()),
                    stroke_width: Some(0.5),
                    opacity: None,
                },
            }
        }
        // The pipeline emits rects only in cartesian graphics and wedges only
        // in polar ones.
        Mark::Rect { .. } | Mark::Wedge { .. } => Node::group("unsupported", Vec::new()),
    }
}
