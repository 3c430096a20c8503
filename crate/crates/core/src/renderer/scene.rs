use std::fmt::Write;

use super::ticks::format_fixed;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Anchor {
    Start,
    Middle,
    End,
}

impl Anchor {
    fn as_str(self) -> &'static str {
        match self {
            Anchor::Start => "start",
            Anchor::Middle => "middle",
            Anchor::End => "end",
        }
    }
}

/// Fill and stroke of a shape; `None` means `none`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Paint {
    pub fill: Option<String>,
    pub stroke: Option<String>,
    pub stroke_width: Option<f64>,
    pub opacity: Option<f64>,
}

impl Paint {
    pub fn fill(color: &str) -> Self {
        Paint {
            fill: Some(color.to_string()),
            ..Default::default()
        }
    }

    pub fn stroke(color: &str, width: f64) -> Self {
        Paint {
            stroke: Some(color.to_string()),
            stroke_width: Some(width),
            ..Default::default()
        }
    }

    pub fn with_opacity(mut self, opacity: f64) -> Self {
        self.opacity = Some(opacity);
        self
    }
}

/// Path command in device space.
#[derive(Debug, Clone, PartialEq)]
pub enum PathOp {
    Move(f64, f64),
    Line(f64, f64),
    /// Elliptical arc with equal radii: radius, large-arc flag, sweep flag, end.
    Arc(f64, bool, bool, f64, f64),
    Close,
}

/// Scene graph node.
#[derive(Debug, Clone, PartialEq)]
pub enum Node {
    Group {
        class: String,
        children: Vec<Node>,
    },
    Rect {
        x: f64,
        y: f64,
        width: f64,
        height: f64,
        paint: Paint,
    },
    Circle {
        cx: f64,
        cy: f64,
        r: f64,
        paint: Paint,
    },
    Line {
        x1: f64,
        y1: f64,
        x2: f64,
        y2: f64,
        paint: Paint,
    },
    Path {
        ops: Vec<PathOp>,
        paint: Paint,
    },
    Text {
        x: f64,
        y: f64,
        content: String,
        anchor: Anchor,
        /// Degrees, about (x, y).
        rotate: f64,
        size: Option<f64>,
    },
}

impl Node {
    pub fn group(class: &str, children: Vec<Node>) -> Node {
        Node::Group {
            class: class.to_string(),
            children,
        }
    }

    pub fn text(x: f64, y: f64, content: impl Into<String>, anchor: Anchor) -> Node {
        Node::Text {
            x,
            y,
            content: content.into(),
            anchor,
            rotate: 0.0,
            size: None,
        }
    }

    /// Visit every node depth-first, this one included.
    pub fn walk<'a>(&'a self, f: &mut impl FnMut(&'a Node)) {
        f(self);
        if let Node::Group { children, .. } = self {
            for c in children {
                c.walk(f);
            }
        }
    }
}

pub fn escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&#39;"),
            _ => out.push(c),
        }
    }
    out
}

/// Serializes nodes with a fixed number of decimals.
pub struct Writer {
    pub precision: usize,
}

impl Writer {
    fn num(&self, v: f64) -> String {
        format_fixed(v, self.precision)
    }

    fn paint(&self, out: &mut String, p: &Paint) {
        let color = |c: &Option<String>| c.clone().unwrap_or_else(|| "none".to_string());
        write!(out, " fill=\"{}\"", color(&p.fill)).unwrap();
        if p.stroke.is_some() {
            write!(out, " stroke=\"{}\"", color(&p.stroke)).unwrap();
        }
        if let Some(w) = p.stroke_width {
            write!(out, " stroke-width=\"{}\"", self.num(w)).unwrap();
        }
        if let Some(o) = p.opacity {
            write!(out, " opacity=\"{}\"", self.num(o)).unwrap();
        }
    }

    pub fn path_data(&self, ops: &[PathOp]) -> String {
        let mut d = String::new();
        for op in ops {
            if !d.is_empty() {
                d.push(' ');
            }
            match *op {
                PathOp::Move(x, y) => write!(d, "M{},{}", self.num(x), self.num(y)),
                PathOp::Line(x, y) => write!(d, "L{},{}", self.num(x), self.num(y)),
                PathOp::Arc(r, large, sweep, x, y) => write!(
                    d,
                    "A{r},{r} 0 {} {} {},{}",
                    large as u8,
                    sweep as u8,
                    self.num(x),
                    self.num(y),
                    r = self.num(r)
                ),
                PathOp::Close => write!(d, "Z"),
            }
            .unwrap();
        }
        d
    }

    pub fn write(&self, out: &mut String, node: &Node) {
        match node {
            Node::Group { class, children } => {
                writeln!(out, "<g class=\"{}\">", escape(class)).unwrap();
                for c in children {
                    self.write(out, c);
                }
                out.push_str("</g>\n");
            }
            Node::Rect { x, y, width, height, paint } => {
                write!(
                    out,
                    "<rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\"",
                    self.num(*x),
                    self.num(*y),
                    self.num(*width),
                    self.num(*height)
                )
                .unwrap();
                self.paint(out, paint);
                out.push_str("/>\n");
            }
            Node::Circle { cx, cy, r, paint } => {
                write!(
                    out,
                    "<circle cx=\"{}\" cy=\"{}\" r=\"{}\"",
                    self.num(*cx),
                    self.num(*cy),
                    self.num(*r)
                )
                .unwrap();
                self.paint(out, paint);
                out.push_str("/>\n");
            }
            Node::Line { x1, y1, x2, y2, paint } => {
                write!(
                    out,
                    "<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\"",
                    self.num(*x1),
                    self.num(*y1),
                    self.num(*x2),
                    self.num(*y2)
                )
                .unwrap();
                self.paint(out, paint);
                out.push_str("/>\n");
            }
            Node::Path { ops, paint } => {
                write!(out, "<path d=\"{}\"", self.path_data(ops)).unwrap();
                self.paint(out, paint);
                out.push_str(" fill-rule=\"evenodd\"/>\n");
            }
            Node::Text {
                x,
                y,
                content,
                anchor,
                rotate,
                size,
            } => {
                write!(
                    out,
                    "<text x=\"{}\" y=\"{}\" text-anchor=\"{}\"",
                    self.num(*x),
                    self.num(*y),
                    anchor.as_str()
                )
                .unwrap();
                if let Some(s) = size {
                    write!(out, " font-size=\"{}\"", self.num(*s)).unwrap();
                }
                if *rotate != 0.0 {
                    write!(
                        out,
                        " transform=\"rotate({} {} {})\"",
                        self.num(*rotate),
                        self.num(*x),
                        self.num(*y)
                    )
                    .unwrap();
                }
                writeln!(out, ">{}</text>", escape(content)).unwrap();
            }
        }
    }
}
