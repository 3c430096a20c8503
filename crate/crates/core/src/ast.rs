//! Syntax tree for SGL statements.

use std::fmt;

use serde::Serialize;

use crate::diagnostic::Span;

/// Perceivable property of a geom that data can be mapped onto.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Aesthetic {
    X,
    Y,
    Theta,
    R,
    Color,
}

impl Aesthetic {
    pub const ALL: [Aesthetic; 5] = [
        Aesthetic::X,
        Aesthetic::Y,
        Aesthetic::Theta,
        Aesthetic::R,
        Aesthetic::Color,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Aesthetic::X => "x",
            Aesthetic::Y => "y",
            Aesthetic::Theta => "theta",
            Aesthetic::R => "r",
            Aesthetic::Color => "color",
        }
    }

    pub fn lookup(word: &str) -> Option<Aesthetic> {
        Aesthetic::ALL
            .into_iter()
            .find(|a| a.as_str().eq_ignore_ascii_case(word))
    }

    pub fn is_positional(self) -> bool {
        !matches!(self, Aesthetic::Color)
    }

    pub fn is_polar(self) -> bool {
        matches!(self, Aesthetic::Theta | Aesthetic::R)
    }
}

impl fmt::Display for Aesthetic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SglStatement {
    pub layers: Vec<LayerSpec>,
    pub scale_specs: Vec<ScaleSpec>,
    pub facet_spec: Option<FacetSpec>,
    pub title_specs: Vec<TitleSpec>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LayerSpec {
    pub mappings: Vec<AestheticMapping>,
    pub source: DataSource,
    pub source_span: Span,
    pub group_by: Vec<Expr>,
    pub collect_by: Vec<Expr>,
    pub geom_chain: Vec<GeomExpr>,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum DataSource {
    TableRef(String),
    Subquery(String),
}

impl fmt::Display for DataSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DataSource::TableRef(name) => f.write_str(name),
            DataSource::Subquery(sql) => write!(f, "({sql})"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AestheticMapping {
    pub expr: Expr,
    pub aesthetic: Aesthetic,
    pub span: Span,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Func {
    Bin,
    Count,
    Mean,
    Sum,
    Min,
    Max,
}

impl Func {
    pub fn lookup(name: &str) -> Option<Func> {
        [Func::Bin, Func::Count, Func::Mean, Func::Sum, Func::Min, Func::Max]
            .into_iter()
            .find(|f| f.as_str().eq_ignore_ascii_case(name))
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Func::Bin => "bin",
            Func::Count => "count",
            Func::Mean => "mean",
            Func::Sum => "sum",
            Func::Min => "min",
            Func::Max => "max",
        }
    }

    pub fn is_aggregate(self) -> bool {
        !matches!(self, Func::Bin)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ExprKind {
    Column(String),
    Call { func: Func, args: Vec<Expr> },
    Star,
    Number(f64),
    Str(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Expr {
    pub kind: ExprKind,
    pub span: Span,
}

impl Expr {
    pub fn new(kind: ExprKind, span: Span) -> Self {
        Expr { kind, span }
    }

    pub fn column(name: &str) -> Self {
        Expr::new(ExprKind::Column(name.to_string()), Span::default())
    }

    pub fn call(func: Func, arg: Expr) -> Self {
        Expr::new(ExprKind::Call { func, args: vec![arg] }, Span::default())
    }

    pub fn is_aggregate(&self) -> bool {
        matches!(&self.kind, ExprKind::Call { func, .. } if func.is_aggregate())
    }

    /// Case-insensitive identity used to match visualize expressions with
    /// grouping expressions.
    pub fn key(&self) -> String {
        self.to_string().to_ascii_lowercase()
    }

    /// Every column referenced by the expression.
    pub fn columns(&self) -> Vec<&str> {
        match &self.kind {
            ExprKind::Column(name) => vec![name.as_str()],
            ExprKind::Call { args, .. } => args.iter().flat_map(Expr::columns).collect(),
            _ => Vec::new(),
        }
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            ExprKind::Column(name) => f.write_str(name),
            ExprKind::Call { func, args } => {
                write!(f, "{}(", func.as_str())?;
                for (i, arg) in args.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{arg}")?;
                }
                f.write_str(")")
            }
            ExprKind::Star => f.write_str("*"),
            ExprKind::Number(v) => write!(f, "{v}"),
            ExprKind::Str(s) => write!(f, "'{}'", s.replace('\'', "''")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Geom {
    Point,
    Bar,
    Line,
}

impl Geom {
    pub fn as_str(self) -> &'static str {
        match self {
            Geom::Point => "point",
            Geom::Bar => "bar",
            Geom::Line => "line",
        }
    }
}

impl fmt::Display for Geom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Qualifier {
    Regression,
    Jittered,
    Unstacked,
    Stacked,
}

impl Qualifier {
    pub fn as_str(self) -> &'static str {
        match self {
            Qualifier::Regression => "regression",
            Qualifier::Jittered => "jittered",
            Qualifier::Unstacked => "unstacked",
            Qualifier::Stacked => "stacked",
        }
    }
}

impl fmt::Display for Qualifier {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GeomExpr {
    pub qualifier: Option<Qualifier>,
    pub geom: Geom,
    pub span: Span,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Transform {
    Log,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScaleSpec {
    pub transform: Transform,
    pub aesthetic: Aesthetic,
    pub span: Span,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Orientation {
    Horizontal,
    Vertical,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FacetSpec {
    pub exprs: Vec<Expr>,
    /// `None` when no orientation keyword was written; horizontal applies.
    pub orientation: Option<Orientation>,
    pub span: Span,
}

impl FacetSpec {
    pub fn effective_orientation(&self) -> Orientation {
        self.orientation.unwrap_or(Orientation::Horizontal)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TitleSpec {
    pub aesthetic: Aesthetic,
    pub title: String,
    pub span: Span,
}
