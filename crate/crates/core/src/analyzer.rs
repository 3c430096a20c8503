//! Semantic analysis: validates a parsed statement against source schemas and
//! produces the [`ResolvedGraphic`] consumed by the pipeline.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::ast::*;
use crate::datasource::{ColumnType, SchemaProvider, TableSchema};
use crate::diagnostic::{Code, Diagnostic, Span};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Coord {
    Cartesian,
    Polar,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ScaleKind {
    Linear,
    Log10,
    Discrete,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ValueType {
    Numeric,
    Categorical,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScaleDef {
    pub aesthetic: Aesthetic,
    pub kind: ScaleKind,
    pub title: String,
}

/// How a mapping is evaluated relative to the aggregation step.
#[derive(Debug, Clone, PartialEq)]
pub enum MappingRole {
    /// Evaluated per source row; a grouping key when the layer aggregates.
    Plain,
    /// `bin(column)`: scaled, then replaced by its bin midpoint.
    Binned { column: String },
    /// Aggregate over a group; `column` is `None` for `count(*)`.
    Aggregate { func: Func, column: Option<String> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResolvedMapping {
    pub aesthetic: Aesthetic,
    pub expr: Expr,
    pub role: MappingRole,
    pub value_type: ValueType,
}

impl ResolvedMapping {
    pub fn is_aggregate(&self) -> bool {
        matches!(self.role, MappingRole::Aggregate { .. })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Collections {
    Default,
    Explicit(Vec<Expr>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum GeomClass {
    Individual,
    Collective,
}

impl GeomClass {
    pub fn of(geom: Geom) -> Self {
        match geom {
            Geom::Point | Geom::Bar => GeomClass::Individual,
            Geom::Line => GeomClass::Collective,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResolvedLayer {
    pub source: DataSource,
    pub source_span: Span,
    pub schema: TableSchema,
    pub mappings: Vec<ResolvedMapping>,
    pub groupings: Vec<Expr>,
    pub collections: Collections,
    pub geom: Geom,
    pub qualifier: Option<Qualifier>,
    pub geom_class: GeomClass,
    pub geom_span: Span,
}

impl ResolvedLayer {
    pub fn mapping(&self, aesthetic: Aesthetic) -> Option<&ResolvedMapping> {
        self.mappings.iter().find(|m| m.aesthetic == aesthetic)
    }

    /// True when the layer produces a post-CTA dataset through grouping.
    pub fn aggregates(&self) -> bool {
        !self.groupings.is_empty() || self.mappings.iter().any(ResolvedMapping::is_aggregate)
    }

    /// Bars stack unless qualified `unstacked`.
    pub fn stacks(&self) -> bool {
        self.geom == Geom::Bar && self.qualifier != Some(Qualifier::Unstacked)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResolvedFacet {
    pub row_expr: Option<Expr>,
    pub col_expr: Option<Expr>,
}

impl ResolvedFacet {
    pub fn exprs(&self) -> impl Iterator<Item = &Expr> {
        self.row_expr.iter().chain(self.col_expr.iter())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResolvedGraphic {
    pub coord: Coord,
    pub scales: BTreeMap<Aesthetic, ScaleDef>,
    pub layers: Vec<ResolvedLayer>,
    pub facet: Option<ResolvedFacet>,
    pub warnings: Vec<Diagnostic>,
}

impl ResolvedGraphic {
    pub fn scale_kind(&self, aesthetic: Aesthetic) -> Option<ScaleKind> {
        self.scales.get(&aesthetic).map(|s| s.kind)
    }
}

fn type_of_column(ty: ColumnType) -> ValueType {
    if ty.is_numeric() {
        ValueType::Numeric
    } else {
        ValueType::Categorical
    }
}

/// Checks that every referenced column exists and returns the value type.
fn type_of(expr: &Expr, schema: &TableSchema) -> Result<ValueType, Diagnostic> {
    let column_type = |name: &str, span: Span| {
        schema.column(name).map(|c| c.ty).ok_or_else(|| {
            Diagnostic::error(
                Code::UnknownColumn,
                span,
                format!("column `{name}` does not exist in {}", describe_source(schema)),
            )
        })
    };
    match &expr.kind {
        ExprKind::Column(name) => Ok(type_of_column(column_type(name, expr.span)?)),
        ExprKind::Number(_) => Ok(ValueType::Numeric),
        ExprKind::Str(_) => Ok(ValueType::Categorical),
        ExprKind::Star => Err(Diagnostic::error(
            Code::InvalidArgument,
            expr.span,
            "`*` is only valid inside count(*)",
        )),
        ExprKind::Call { func, args } => {
            let arg = &args[0];
            let arg_type = match &arg.kind {
                ExprKind::Star => None,
                ExprKind::Column(name) => Some(column_type(name, arg.span)?),
                _ => {
                    return Err(Diagnostic::error(
                        Code::InvalidArgument,
                        arg.span,
                        format!("{}() takes a column", func.as_str()),
                    ))
                }
            };
            match (func, arg_type) {
                (Func::Count, _) => Ok(ValueType::Numeric),
                (_, Some(t)) if t.is_numeric() => Ok(ValueType::Numeric),
                (_, Some(_)) => Err(Diagnostic::error(
                    Code::TypeUnsupported,
                    expr.span,
                    format!("{}() requires a numeric column", func.as_str()),
                )),
                (_, None) => Err(Diagnostic::error(
                    Code::InvalidArgument,
                    arg.span,
                    format!("`*` is only valid in count(*), not {}(*)", func.as_str()),
                )),
            }
        }
    }
}

fn describe_source(schema: &TableSchema) -> String {
    if schema.name == "subquery" {
        "the subquery result".to_string()
    } else {
        format!("table `{}`", schema.name)
    }
}

fn role_of(expr: &Expr) -> MappingRole {
    match &expr.kind {
        ExprKind::Call { func: Func::Bin, args } => MappingRole::Binned {
            column: args[0].to_string(),
        },
        ExprKind::Call { func, args } => MappingRole::Aggregate {
            func: *func,
            column: match &args[0].kind {
                ExprKind::Column(name) => Some(name.clone()),
                _ => None,
            },
        },
        _ => MappingRole::Plain,
    }
}

/// Checks a grouping/collection/facet expression: columns exist, no aggregates.
fn check_key_expr(expr: &Expr, schema: &TableSchema, clause: &str) -> Result<(), Diagnostic> {
    if expr.is_aggregate() {
        return Err(Diagnostic::error(
            Code::TypeUnsupported,
            expr.span,
            format!("aggregate `{expr}` cannot appear in {clause}"),
        ));
    }
    type_of(expr, schema).map(|_| ())
}

/// Validate `stmt` and resolve it into a graphic. All detected problems are
/// reported, ordered by the layer and clause in which they occur.
pub fn analyze<P: SchemaProvider + ?Sized>(
    stmt: &SglStatement,
    schemas: &P,
) -> Result<ResolvedGraphic, Vec<Diagnostic>> {
    let mut errors = Vec::new();
    let mut layers = Vec::new();

    for spec in &stmt.layers {
        let schema = match schemas.schema_of(&spec.source, spec.source_span) {
            Ok(s) => s,
            Err(e) => {
                errors.push(e);
                continue;
            }
        };
        match resolve_layer(spec, &schema, stmt.facet_spec.as_ref()) {
            Ok(mut resolved) => layers.append(&mut resolved),
            Err(mut errs) => errors.append(&mut errs),
        }
    }
    if !errors.is_empty() {
        return Err(errors);
    }

    let coord = match infer_coord(&layers) {
        Ok(c) => c,
        Err(e) => return Err(vec![e]),
    };

    if let Err(mut errs) = check_cross_layer(&layers, coord) {
        errors.append(&mut errs);
    }
    let facet = match resolve_facet(stmt.facet_spec.as_ref()) {
        Ok(f) => f,
        Err(e) => {
            errors.push(e);
            None
        }
    };
    let scales = match resolve_scales(&layers, &stmt.scale_specs, &stmt.title_specs) {
        Ok(s) => s,
        Err(mut errs) => {
            errors.append(&mut errs);
            BTreeMap::new()
        }
    };
    if !errors.is_empty() {
        return Err(errors);
    }

    Ok(ResolvedGraphic {
        coord,
        scales,
        layers,
        facet,
        warnings: Vec::new(),
    })
}

fn resolve_layer(
    spec: &LayerSpec,
    schema: &TableSchema,
    facet: Option<&FacetSpec>,
) -> Result<Vec<ResolvedLayer>, Vec<Diagnostic>> {
    let mut errors = Vec::new();
    let mut mappings = Vec::new();
    for m in &spec.mappings {
        match type_of(&m.expr, schema) {
            Ok(value_type) => mappings.push(ResolvedMapping {
                aesthetic: m.aesthetic,
                expr: m.expr.clone(),
                role: role_of(&m.expr),
                value_type,
            }),
            Err(e) => errors.push(e),
        }
    }
    for e in &spec.group_by {
        if let Err(d) = check_key_expr(e, schema, "group by") {
            errors.push(d);
        }
    }
    for e in &spec.collect_by {
        if let Err(d) = check_key_expr(e, schema, "collect by") {
            errors.push(d);
        }
    }
    if let Some(f) = facet {
        for e in &f.exprs {
            if let Err(d) = check_key_expr(e, schema, "facet by") {
                errors.push(d);
            }
        }
    }
    if !errors.is_empty() {
        return Err(errors);
    }

    let aggregated = mappings.iter().any(ResolvedMapping::is_aggregate);
    if aggregated || !spec.group_by.is_empty() {
        let group_keys: Vec<String> = spec.group_by.iter().map(Expr::key).collect();
        for m in mappings.iter().filter(|m| !m.is_aggregate()) {
            if !group_keys.contains(&m.expr.key()) {
                errors.push(Diagnostic::error(
                    Code::GroupByIncomplete,
                    m.expr.span,
                    format!(
                        "`{}` is not aggregated and must also be included in the group by clause",
                        m.expr
                    ),
                ));
            }
        }
        for e in &spec.collect_by {
            if !group_keys.contains(&e.key()) {
                errors.push(Diagnostic::error(
                    Code::GroupByIncomplete,
                    e.span,
                    format!("collection `{e}` must be a grouping expression when the layer aggregates"),
                ));
            }
        }
    }

    let mut out = Vec::new();
    for g in &spec.geom_chain {
        if let Some(q) = g.qualifier {
            let legal = match q {
                Qualifier::Regression => g.geom == Geom::Line,
                Qualifier::Jittered => g.geom == Geom::Point,
                Qualifier::Unstacked | Qualifier::Stacked => g.geom == Geom::Bar,
            };
            if !legal {
                errors.push(Diagnostic::error(
                    Code::BadQualifier,
                    g.span,
                    format!("qualifier `{q}` cannot be applied to {} geoms", g.geom),
                ));
                continue;
            }
        }
        out.push(ResolvedLayer {
            source: spec.source.clone(),
            source_span: spec.source_span,
            schema: schema.clone(),
            mappings: mappings.clone(),
            groupings: spec.group_by.clone(),
            collections: if spec.collect_by.is_empty() {
                Collections::Default
            } else {
                Collections::Explicit(spec.collect_by.clone())
            },
            geom: g.geom,
            qualifier: g.qualifier,
            geom_class: GeomClass::of(g.geom),
            geom_span: g.span,
        });
    }
    if errors.is_empty() {
        Ok(out)
    } else {
        Err(errors)
    }
}

/// Polar iff any layer maps `theta` or `r`; mixing with `x`/`y` is an error.
pub fn infer_coord(layers: &[ResolvedLayer]) -> Result<Coord, Diagnostic> {
    let mut cartesian: Option<&ResolvedMapping> = None;
    let mut polar: Option<&ResolvedMapping> = None;
    for m in layers.iter().flat_map(|l| &l.mappings) {
        match m.aesthetic {
            Aesthetic::X | Aesthetic::Y => {
                cartesian.get_or_insert(m);
            }
            Aesthetic::Theta | Aesthetic::R => {
                polar.get_or_insert(m);
            }
            Aesthetic::Color => {}
        }
    }
    match (cartesian, polar) {
        (Some(c), Some(p)) => {
            let later = if p.expr.span.offset >= c.expr.span.offset { p } else { c };
            Err(Diagnostic::error(
                Code::CoordMix,
                later.expr.span,
                format!(
                    "a graphic has a single coordinate system: `{}` cannot be combined with {}",
                    later.aesthetic,
                    if later.aesthetic.is_polar() { "x/y mappings" } else { "theta/r mappings" }
                ),
            ))
        }
        (Some(_), None) => Ok(Coord::Cartesian),
        (None, Some(_)) => Ok(Coord::Polar),
        (None, None) => Err(Diagnostic::error(
            Code::NoPosition,
            layers.first().map(|l| l.geom_span).unwrap_or_default(),
            "no positional aesthetic (x, y, theta or r) is mapped in any layer",
        )),
    }
}

fn check_cross_layer(layers: &[ResolvedLayer], coord: Coord) -> Result<(), Vec<Diagnostic>> {
    let mut errors = Vec::new();
    let mut seen: BTreeMap<Aesthetic, ValueType> = BTreeMap::new();
    for layer in layers {
        for m in &layer.mappings {
            match seen.get(&m.aesthetic) {
                Some(t) if *t != m.value_type => {
                    let msg = format!(
                        "aesthetic `{}` is mapped to a {} value here but to a {} value in another layer",
                        m.aesthetic,
                        type_name(m.value_type),
                        type_name(*t)
                    );
                    if !errors.iter().any(|d: &Diagnostic| d.message == msg) {
                        errors.push(Diagnostic::error(Code::TypeConflict, m.expr.span, msg));
                    }
                }
                Some(_) => {}
                None => {
                    seen.insert(m.aesthetic, m.value_type);
                }
            }
            if m.aesthetic == Aesthetic::Color && m.value_type == ValueType::Numeric {
                errors.push(Diagnostic::error(
                    Code::TypeUnsupported,
                    m.expr.span,
                    "color must be mapped to a categorical value; continuous color scales are not supported",
                ));
            }
        }
        if let Err(e) = check_geom_requirements(layer, coord) {
            errors.push(e);
        }
    }
    if errors.is_empty() {
        Ok(())
    } else {
        Err(errors)
    }
}

fn type_name(t: ValueType) -> &'static str {
    match t {
        ValueType::Numeric => "numeric",
        ValueType::Categorical => "categorical",
    }
}

fn check_geom_requirements(layer: &ResolvedLayer, coord: Coord) -> Result<(), Diagnostic> {
    let (pos_a, pos_b) = match coord {
        Coord::Cartesian => (Aesthetic::X, Aesthetic::Y),
        Coord::Polar => (Aesthetic::Theta, Aesthetic::R),
    };
    let missing = |a: Aesthetic, what: &str| {
        Diagnostic::error(
            Code::MissingAesthetic,
            layer.geom_span,
            format!("{} geoms require a numeric `{a}` mapping {what}", layer.geom),
        )
    };
    let categorical = |m: &ResolvedMapping, what: &str| {
        Diagnostic::error(
            Code::TypeUnsupported,
            m.expr.span,
            format!("`{}` must be {what} for {} geoms", m.aesthetic, layer.geom),
        )
    };

    if layer.geom == Geom::Bar {
        // Bars measure along y (cartesian) or theta (polar).
        let value_aes = pos_b_for_bars(coord);
        match layer.mapping(value_aes) {
            None => return Err(missing(value_aes, "for bar lengths")),
            Some(m) if m.value_type != ValueType::Numeric => return Err(categorical(m, "numeric")),
            _ => {}
        }
        if coord == Coord::Polar {
            if let Some(m) = layer.mapping(Aesthetic::R) {
                if m.value_type != ValueType::Categorical {
                    return Err(categorical(m, "categorical (one ring per value)"));
                }
            }
        }
    }
    if layer.qualifier == Some(Qualifier::Regression) {
        for a in [pos_a, pos_b] {
            match layer.mapping(a) {
                None => return Err(missing(a, "to fit a regression")),
                Some(m) if m.value_type != ValueType::Numeric => {
                    return Err(categorical(m, "numeric to fit a regression"))
                }
                _ => {}
            }
        }
    }
    Ok(())
}

fn pos_b_for_bars(coord: Coord) -> Aesthetic {
    match coord {
        Coord::Cartesian => Aesthetic::Y,
        Coord::Polar => Aesthetic::Theta,
    }
}

fn resolve_facet(spec: Option<&FacetSpec>) -> Result<Option<ResolvedFacet>, Diagnostic> {
    let Some(spec) = spec else { return Ok(None) };
    match spec.exprs.as_slice() {
        [one] => Ok(Some(match spec.effective_orientation() {
            Orientation::Horizontal => ResolvedFacet {
                row_expr: None,
                col_expr: Some(one.clone()),
            },
            Orientation::Vertical => ResolvedFacet {
                row_expr: Some(one.clone()),
                col_expr: None,
            },
        })),
        [rows, cols] if spec.orientation.is_none() => Ok(Some(ResolvedFacet {
            row_expr: Some(rows.clone()),
            col_expr: Some(cols.clone()),
        })),
        [_, _] => Err(Diagnostic::error(
            Code::FacetArity,
            spec.span,
            "an orientation keyword is only valid with a single facet expression",
        )),
        _ => Err(Diagnostic::error(
            Code::FacetArity,
            spec.exprs.get(2).map(|e| e.span).unwrap_or(spec.span),
            format!("facet by accepts at most two expressions, found {}", spec.exprs.len()),
        )),
    }
}

/// One scale per mapped aesthetic, shared by every layer.
pub fn resolve_scales(
    layers: &[ResolvedLayer],
    scale_specs: &[ScaleSpec],
    title_specs: &[TitleSpec],
) -> Result<BTreeMap<Aesthetic, ScaleDef>, Vec<Diagnostic>> {
    let mut errors = Vec::new();
    let mut scales = BTreeMap::new();
    for m in layers.iter().flat_map(|l| &l.mappings) {
        scales.entry(m.aesthetic).or_insert_with(|| ScaleDef {
            aesthetic: m.aesthetic,
            kind: match m.value_type {
                ValueType::Numeric => ScaleKind::Linear,
                ValueType::Categorical => ScaleKind::Discrete,
            },
            title: m.expr.to_string(),
        });
    }

    let mut logged = Vec::new();
    for spec in scale_specs {
        if logged.contains(&spec.aesthetic) {
            errors.push(Diagnostic::error(
                Code::DuplicateScale,
                spec.span,
                format!("aesthetic `{}` already has a scale", spec.aesthetic),
            ));
            continue;
        }
        logged.push(spec.aesthetic);
        match scales.get_mut(&spec.aesthetic) {
            None => errors.push(Diagnostic::error(
                Code::ScaleOnDiscrete,
                spec.span,
                format!("`{}` is not mapped in any layer, so it has no scale to transform", spec.aesthetic),
            )),
            Some(s) if s.kind == ScaleKind::Discrete => errors.push(Diagnostic::error(
                Code::ScaleOnDiscrete,
                spec.span,
                format!("log scale cannot be applied to categorical aesthetic `{}`", spec.aesthetic),
            )),
            Some(s) => s.kind = ScaleKind::Log10,
        }
    }

    for t in title_specs {
        match scales.get_mut(&t.aesthetic) {
            Some(s) => s.title = t.title.clone(),
            None => errors.push(Diagnostic::error(
                Code::TitleUnmapped,
                t.span,
                format!("title given for unmapped aesthetic `{}`", t.aesthetic),
            )),
        }
    }

    if errors.is_empty() {
        Ok(scales)
    } else {
        Err(errors)
    }
}
