//! SVG output for executed graphics.
//!
//! Rendering builds a small scene graph per panel and serializes it with a
//! fixed precision. Panels are laid out as a grid with shared axes on the
//! outer edges, facet strips on the top and right, and a color legend.

pub mod config;
pub mod project;
pub mod scene;
pub mod ticks;

use rayon::prelude::*;

use crate::analyzer::Coord;
use crate::ast::Aesthetic;
use crate::pipeline::{Domain, ExecutionResult, Panel};

pub use config::{ConfigError, RenderConfig, DEFAULT_PALETTE};
pub use project::{project, PolarAxis, Projection, Viewport};
pub use scene::{Anchor, Node, Paint, PathOp, Writer};
pub use ticks::{compute_ticks, discrete_ticks, Tick};

/// Share of a continuous domain added on each side.
pub const DOMAIN_PADDING: f64 = 0.05;

const AXIS_TITLE: f64 = 18.0;
const TICK_LABEL_W: f64 = 44.0;
const TICK_LABEL_H: f64 = 16.0;
const TICK_LEN: f64 = 4.0;
const STRIP: f64 = 18.0;
const GAP: f64 = 8.0;
const LEGEND_W: f64 = 120.0;
const LEGEND_ROW: f64 = 16.0;

const FRAME_STROKE: &str = "#c8c8c8";
const GRID_STROKE: &str = "#ebebeb";
const STRIP_FILL: &str = "#e4e4e4";
const TEXT_FILL: &str = "#333333";

/// A resolved axis: device domain in scaled space plus ticks and title.
#[derive(Debug, Clone, PartialEq)]
pub struct Axis {
    pub aesthetic: Aesthetic,
    pub domain: (f64, f64),
    pub ticks: Vec<Tick>,
    pub title: String,
    pub discrete: bool,
}

/// Continuous extent with padding; zero-width extents grow by 0.5 each way.
pub fn padded(min: f64, max: f64) -> (f64, f64) {
    if max - min <= f64::EPSILON * min.abs().max(1.0) {
        (min - 0.5, max + 0.5)
    } else {
        let pad = (max - min) * DOMAIN_PADDING;
        (min - pad, max + pad)
    }
}

/// Axis for a mapped aesthetic; `None` when it is not mapped.
pub fn axis_for(result: &ExecutionResult, aesthetic: Aesthetic) -> Option<Axis> {
    let scale = result.scales.get(&aesthetic)?;
    let domain = result.domains.get(&aesthetic)?;
    Some(match domain {
        Domain::Discrete { categories } => Axis {
            aesthetic,
            domain: (-0.5, categories.len().max(1) as f64 - 0.5),
            ticks: discrete_ticks(categories),
            title: scale.title.clone(),
            discrete: true,
        },
        Domain::Continuous { min, max } => {
            let (lo, hi) = padded(*min, *max);
            Axis {
                aesthetic,
                domain: (lo, hi),
                ticks: compute_ticks(lo, hi, scale.kind),
                title: scale.title.clone(),
                discrete: false,
            }
        }
    })
}

/// Unmapped positions sit at 0 on a single implicit slot.
const IMPLICIT_DOMAIN: (f64, f64) = (-0.5, 0.5);

fn polar_axis(axis: Option<&Axis>) -> PolarAxis {
    match axis {
        None => PolarAxis::Implicit,
        Some(a) if a.discrete => PolarAxis::Discrete(a.ticks.len()),
        Some(a) => PolarAxis::Continuous {
            lo: a.domain.0,
            hi: a.domain.1,
        },
    }
}

/// Panel viewports and the regions around them.
#[derive(Debug, Clone, PartialEq)]
pub struct Layout {
    pub panels: Vec<Viewport>,
    pub plot: Viewport,
    pub rows: usize,
    pub cols: usize,
    pub legend_x: f64,
}

fn layout(result: &ExecutionResult, config: &RenderConfig) -> Layout {
    let grid = &result.grid;
    let (rows, cols) = (grid.rows(), grid.cols());
    let m = config.margin;
    let axes = result.coord == Coord::Cartesian;
    let legend = result.scales.contains_key(&Aesthetic::Color);
    let left = m + if axes { AXIS_TITLE + TICK_LABEL_W } else { 0.0 };
    let bottom = m + if axes { AXIS_TITLE + TICK_LABEL_H } else { 0.0 };
    let top = m + if grid.col_labels.is_empty() { 0.0 } else { STRIP };
    let right = m
        + if grid.row_labels.is_empty() { 0.0 } else { STRIP }
        + if legend { LEGEND_W } else { 0.0 };
    let plot = Viewport {
        x: left,
        y: top,
        width: (config.width - left - right).max(1.0),
        height: (config.height - top - bottom).max(1.0),
    };
    let cell_w = ((plot.width - GAP * (cols - 1) as f64) / cols as f64).max(1.0);
    let cell_h = ((plot.height - GAP * (rows - 1) as f64) / rows as f64).max(1.0);
    let panels = (0..rows * cols)
        .map(|i| Viewport {
            x: plot.x + (i % cols) as f64 * (cell_w + GAP),
            y: plot.y + (i / cols) as f64 * (cell_h + GAP),
            width: cell_w,
            height: cell_h,
        })
        .collect();
    Layout {
        panels,
        plot,
        rows,
        cols,
        legend_x: config.width - m - LEGEND_W + GAP,
    }
}

struct Frame<'a> {
    config: &'a RenderConfig,
    coord: Coord,
    projection: Projection,
    x_axis: Option<Axis>,
    y_axis: Option<Axis>,
}

fn panel_node(panel: &Panel, vp: &Viewport, f: &Frame) -> Node {
    let mut children = vec![Node::Rect {
        x: vp.x,
        y: vp.y,
        width: vp.width,
        height: vp.height,
        paint: Paint {
            fill: Some("#ffffff".into()),
            stroke: Some(FRAME_STROKE.into()),
            stroke_width: Some(1.0),
            opacity: None,
        },
    }];
    match f.coord {
        Coord::Cartesian => {
            let grid_line = |x1, y1, x2, y2| Node::Line {
                x1,
                y1,
                x2,
                y2,
                paint: Paint::stroke(GRID_STROKE, 1.0),
            };
            if let Some(ax) = &f.x_axis {
                for t in &ax.ticks {
                    let (px, _) = f.projection.cartesian(vp, t.position, 0.0);
                    children.push(grid_line(px, vp.y, px, vp.y + vp.height));
                }
            }
            if let Some(ay) = &f.y_axis {
                for t in &ay.ticks {
                    let (_, py) = f.projection.cartesian(vp, 0.0, t.position);
                    children.push(grid_line(vp.x, py, vp.x + vp.width, py));
                }
            }
        }
        Coord::Polar => {
            let (cx, cy) = vp.center();
            children.push(Node::Circle {
                cx,
                cy,
                r: vp.polar_radius(),
                paint: Paint::stroke(GRID_STROKE, 1.0),
            });
        }
    }
    for set in &panel.layers {
        let marks = set
            .marks
            .iter()
            .map(|m| project(m, &f.projection, vp, f.config.color(m.color())))
            .collect();
        children.push(Node::group(&format!("layer layer-{} {}", set.layer, set.geom), marks));
    }
    Node::group("panel", children)
}

fn text_node(x: f64, y: f64, content: &str, anchor: Anchor, rotate: f64) -> Node {
    Node::Text {
        x,
        y,
        content: content.to_string(),
        anchor,
        rotate,
        size: None,
    }
}

fn strips(result: &ExecutionResult, lay: &Layout) -> Vec<Node> {
    let grid = &result.grid;
    let mut nodes = Vec::new();
    for (c, label) in grid.col_labels.iter().enumerate() {
        let vp = lay.panels[c];
        nodes.push(Node::Rect {
            x: vp.x,
            y: vp.y - STRIP,
            width: vp.width,
            height: STRIP,
            paint: Paint::fill(STRIP_FILL),
        });
        nodes.push(text_node(vp.x + vp.width / 2.0, vp.y - 5.0, label, Anchor::Middle, 0.0));
    }
    for (r, label) in grid.row_labels.iter().enumerate() {
        let vp = lay.panels[r * lay.cols + lay.cols - 1];
        let x = vp.x + vp.width;
        nodes.push(Node::Rect {
            x,
            y: vp.y,
            width: STRIP,
            height: vp.height,
            paint: Paint::fill(STRIP_FILL),
        });
        nodes.push(text_node(x + 5.0, vp.y + vp.height / 2.0, label, Anchor::Middle, 90.0));
    }
    nodes
}

fn axes(lay: &Layout, f: &Frame) -> Vec<Node> {
    let mut nodes = Vec::new();
    let tick = |x1, y1, x2, y2| Node::Line {
        x1,
        y1,
        x2,
        y2,
        paint: Paint::stroke(TEXT_FILL, 1.0),
    };
    if let Some(ax) = &f.x_axis {
        for c in 0..lay.cols {
            let vp = lay.panels[(lay.rows - 1) * lay.cols + c];
            let base = vp.y + vp.height;
            for t in &ax.ticks {
                let (px, _) = f.projection.cartesian(&vp, t.position, 0.0);
                nodes.push(tick(px, base, px, base + TICK_LEN));
                nodes.push(text_node(px, base + TICK_LEN + 10.0, &t.label, Anchor::Middle, 0.0));
            }
        }
        let plot = lay.plot;
        nodes.push(Node::Text {
            x: plot.x + plot.width / 2.0,
            y: plot.y + plot.height + TICK_LABEL_H + AXIS_TITLE - 2.0,
            content: ax.title.clone(),
            anchor: Anchor::Middle,
            rotate: 0.0,
            size: Some(f.config.font_size + 1.0),
        });
    }
    if let Some(ay) = &f.y_axis {
        for r in 0..lay.rows {
            let vp = lay.panels[r * lay.cols];
            for t in &ay.ticks {
                let (_, py) = f.projection.cartesian(&vp, 0.0, t.position);
                nodes.push(tick(vp.x - TICK_LEN, py, vp.x, py));
                nodes.push(text_node(vp.x - TICK_LEN - 2.0, py + 4.0, &t.label, Anchor::End, 0.0));
            }
        }
        let plot = lay.plot;
        let x = plot.x - TICK_LABEL_W - AXIS_TITLE / 2.0;
        nodes.push(Node::Text {
            x,
            y: plot.y + plot.height / 2.0,
            content: ay.title.clone(),
            anchor: Anchor::Middle,
            rotate: -90.0,
            size: Some(f.config.font_size + 1.0),
        });
    }
    nodes
}

fn legend(result: &ExecutionResult, lay: &Layout, config: &RenderConfig) -> Option<Node> {
    let scale = result.scales.get(&Aesthetic::Color)?;
    let Some(Domain::Discrete { categories }) = result.domains.get(&Aesthetic::Color) else {
        return None;
    };
    let x = lay.legend_x;
    let mut y = lay.plot.y + 12.0;
    let mut children = vec![Node::Text {
        x,
        y,
        content: scale.title.clone(),
        anchor: Anchor::Start,
        rotate: 0.0,
        size: Some(config.font_size + 1.0),
    }];
    for (i, c) in categories.iter().enumerate() {
        y += LEGEND_ROW;
        children.push(Node::Rect {
            x,
            y: y - 9.0,
            width: 10.0,
            height: 10.0,
            paint: Paint::fill(config.color(Some(i))),
        });
        children.push(text_node(x + 16.0, y, c, Anchor::Start, 0.0));
    }
    Some(Node::group("legend", children))
}

/// Render to a standalone SVG document, drawing panels on the rayon pool.
pub fn render(result: &ExecutionResult, config: &RenderConfig) -> String {
    render_with(result, config, true)
}

/// Single-threaded rendering; output is byte-identical to [`render`].
pub fn render_serial(result: &ExecutionResult, config: &RenderConfig) -> String {
    render_with(result, config, false)
}

fn render_with(result: &ExecutionResult, config: &RenderConfig, parallel: bool) -> String {
    let lay = layout(result, config);
    let cartesian = result.coord == Coord::Cartesian;
    let frame = Frame {
        config,
        coord: result.coord,
        projection: projection_for(result),
        x_axis: axis_for(result, Aesthetic::X).filter(|_| cartesian),
        y_axis: axis_for(result, Aesthetic::Y).filter(|_| cartesian),
    };

    let writer = Writer {
        precision: config.precision,
    };
    let draw = |i: usize| {
        let mut s = String::new();
        writer.write(&mut s, &panel_node(&result.grid.panels[i], &lay.panels[i], &frame));
        s
    };
    let n = result.grid.panels.len();
    let panels: Vec<String> = if parallel {
        (0..n).into_par_iter().map(draw).collect()
    } else {
        (0..n).map(draw).collect()
    };

    let num = crate::pipeline::format_number;
    let mut out = format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"{w}\" height=\"{h}\" \
         viewBox=\"0 0 {w} {h}\" font-family=\"{ff}\" font-size=\"{fs}\" fill=\"{TEXT_FILL}\">\n",
        w = num(config.width),
        h = num(config.height),
        ff = scene::escape(&config.font_family),
        fs = num(config.font_size),
    );
    writer.write(
        &mut out,
        &Node::Rect {
            x: 0.0,
            y: 0.0,
            width: config.width,
            height: config.height,
            paint: Paint::fill("#ffffff"),
        },
    );
    for p in panels {
        out.push_str(&p);
    }
    let mut decorations = strips(result, &lay);
    decorations.extend(axes(&lay, &frame));
    decorations.extend(legend(result, &lay, config));
    for node in &decorations {
        writer.write(&mut out, node);
    }
    out.push_str("</svg>\n");
    out
}

/// Viewports computed for `result`, exposed for geometry checks.
pub fn panel_layout(result: &ExecutionResult, config: &RenderConfig) -> Layout {
    layout(result, config)
}

/// The projection `render` uses for every panel.
pub fn projection_for(result: &ExecutionResult) -> Projection {
    match result.coord {
        Coord::Cartesian => Projection::Cartesian {
            x: axis_for(result, Aesthetic::X).map_or(IMPLICIT_DOMAIN, |a| a.domain),
            y: axis_for(result, Aesthetic::Y).map_or(IMPLICIT_DOMAIN, |a| a.domain),
        },
        Coord::Polar => Projection::Polar {
            theta: polar_axis(axis_for(result, Aesthetic::Theta).as_ref()),
            r: polar_axis(axis_for(result, Aesthetic::R).as_ref()),
        },
    }
}
