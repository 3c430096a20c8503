//! Execution of a resolved graphic.
//!
//! Each layer runs the same fixed sequence: fetch, map aesthetics, drop nulls,
//! scale, bin, partition into facet panels, aggregate, apply the geom
//! qualifier, assemble collections and stack. The result is a grid of panels
//! holding one [`MarkSet`] per layer, in scaled data space.

pub mod aggregate;
pub mod bin;
pub mod collect;
pub mod facet;
pub mod qualify;
pub mod scale;
pub mod stack;
mod value;

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::f64::consts::TAU;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::analyzer::{Collections, Coord, MappingRole, ResolvedGraphic, ResolvedLayer, ScaleDef, ScaleKind};
use crate::ast::{Aesthetic, DataSource, Expr, ExprKind, Func, Geom, Qualifier};
use crate::datasource::{ColumnData, ColumnTable, Database};
use crate::diagnostic::{Code, Diagnostic, Span};

pub use bin::BinDef;
pub use facet::FacetLayout;
pub use value::{format_number, Value};

/// Tunables for execution.
#[derive(Debug, Clone, PartialEq)]
pub struct EngineConfig {
    pub bin_count: usize,
    pub facet_cap: usize,
    pub seed: u64,
    pub jitter_fraction: f64,
    /// Process layers on the rayon pool. Output is identical either way.
    pub parallel: bool,
}

impl Default for EngineConfig {
    fn default() -> Self {
        EngineConfig {
            bin_count: 10,
            facet_cap: 64,
            seed: 0,
            jitter_fraction: 0.4,
            parallel: true,
        }
    }
}

/// Band width of bars on discrete or implicit positions, in category units.
pub const DISCRETE_BAR_WIDTH: f64 = 0.8;
/// Fraction of the bin width (or position spacing) a continuous bar fills.
pub const CONTINUOUS_BAR_FILL: f64 = 0.95;

/// Render-ready geometry. In polar graphics `x` carries theta and `y`
/// carries r for points and segments; wedge angles are radians and wedge
/// radii are ring units (ring `k` spans `[k, k + 1]`).
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum Mark {
    Point {
        x: f64,
        y: f64,
        color: Option<usize>,
    },
    Segment {
        x0: f64,
        y0: f64,
        x1: f64,
        y1: f64,
        color: Option<usize>,
        group: usize,
    },
    Rect {
        x: f64,
        width: f64,
        y0: f64,
        y1: f64,
        color: Option<usize>,
    },
    Wedge {
        theta0: f64,
        theta1: f64,
        r0: f64,
        r1: f64,
        color: Option<usize>,
    },
}

impl Mark {
    pub fn color(&self) -> Option<usize> {
        match self {
            Mark::Point { color, .. }
            | Mark::Segment { color, .. }
            | Mark::Rect { color, .. }
            | Mark::Wedge { color, .. } => *color,
        }
    }

    fn coords(&self) -> Vec<f64> {
        match *self {
            Mark::Point { x, y, .. } => vec![x, y],
            Mark::Segment { x0, y0, x1, y1, .. } => vec![x0, y0, x1, y1],
            Mark::Rect { x, width, y0, y1, .. } => vec![x, width, y0, y1],
            Mark::Wedge { theta0, theta1, r0, r1, .. } => vec![theta0, theta1, r0, r1],
        }
    }

    pub fn is_finite(&self) -> bool {
        self.coords().iter().all(|c| c.is_finite())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MarkSet {
    pub layer: usize,
    pub geom: Geom,
    pub marks: Vec<Mark>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Panel {
    pub row: usize,
    pub col: usize,
    pub layers: Vec<MarkSet>,
}

/// Panels in row-major order. Empty label lists mean the dimension is not
/// faceted and has a single unlabeled entry.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PanelGrid {
    pub row_labels: Vec<String>,
    pub col_labels: Vec<String>,
    pub panels: Vec<Panel>,
}

impl PanelGrid {
    pub fn rows(&self) -> usize {
        self.row_labels.len().max(1)
    }

    pub fn cols(&self) -> usize {
        self.col_labels.len().max(1)
    }

    pub fn panel(&self, row: usize, col: usize) -> &Panel {
        &self.panels[row * self.cols() + col]
    }

    pub fn mark_count(&self) -> usize {
        self.panels
            .iter()
            .flat_map(|p| &p.layers)
            .map(|m| m.marks.len())
            .sum()
    }
}

/// Extent of a scale after execution, in scaled space.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Domain {
    Continuous { min: f64, max: f64 },
    Discrete { categories: Vec<String> },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExecutionResult {
    pub coord: Coord,
    pub scales: BTreeMap<Aesthetic, ScaleDef>,
    pub domains: BTreeMap<Aesthetic, Domain>,
    pub grid: PanelGrid,
    /// Bin definitions per layer, keyed by the binned aesthetic.
    pub bins: Vec<BTreeMap<Aesthetic, BinDef>>,
    #[serde(skip)]
    pub warnings: Vec<Diagnostic>,
}

/// Source-row values of an expression; `None` marks a null cell.
fn column_values(
    expr: &Expr,
    table: &ColumnTable,
    numeric: bool,
) -> Result<Vec<Option<Value>>, Diagnostic> {
    let n = table.row_count();
    match &expr.kind {
        ExprKind::Column(name) => {
            let col = table.column(name).ok_or_else(|| {
                Diagnostic::error(
                    Code::UnknownColumn,
                    expr.span,
                    format!("column `{name}` is missing from the fetched data"),
                )
            })?;
            Ok((0..n)
                .map(|r| match &col.data {
                    ColumnData::Text(v) => v[r].as_ref().and_then(|s| {
                        if numeric {
                            s.trim().parse::<f64>().ok().map(Value::Num)
                        } else {
                            Some(Value::Text(s.clone()))
                        }
                    }),
                    data => data.number(r).map(|x| {
                        if numeric {
                            Value::Num(x)
                        } else {
                            Value::Text(format_number(x))
                        }
                    }),
                })
                .collect())
        }
        ExprKind::Call { func: Func::Bin, args } => column_values(&args[0], table, true),
        ExprKind::Number(x) => Ok(vec![Some(Value::Num(*x)); n]),
        ExprKind::Str(s) => Ok(vec![Some(Value::Text(s.clone())); n]),
        ExprKind::Call { .. } | ExprKind::Star => {
            unreachable!("aggregates are evaluated per group")
        }
    }
}

fn is_binned(expr: &Expr) -> bool {
    matches!(expr.kind, ExprKind::Call { func: Func::Bin, .. })
}

struct AggColumn {
    aesthetic: Aesthetic,
    func: Func,
    values: Option<Vec<Option<f64>>>,
    scale: ScaleKind,
}

/// One layer's rows after mapping, null removal, scaling and binning.
struct Frame {
    len: usize,
    /// Row-level columns: non-aggregate mappings first, then auxiliary keys.
    cols: Vec<Vec<Value>>,
    mapping_col: BTreeMap<Aesthetic, usize>,
    key_col: HashMap<String, usize>,
    aggs: Vec<AggColumn>,
    bins: BTreeMap<Aesthetic, BinDef>,
    warnings: Vec<Diagnostic>,
}

impl Frame {
    fn key_values(&self, expr: &Expr, row: usize) -> Value {
        self.cols[self.key_col[&expr.key()]][row].clone()
    }
}

fn prepare_layer(
    layer: &ResolvedLayer,
    graphic: &ResolvedGraphic,
    table: &ColumnTable,
    config: &EngineConfig,
) -> Result<Frame, Diagnostic> {
    let n = table.row_count();
    let mut raw: Vec<Vec<Option<Value>>> = Vec::new();
    let mut col_scale: Vec<ScaleKind> = Vec::new();
    let mut col_binned: Vec<(Option<Aesthetic>, Span, bool)> = Vec::new();
    let mut mapping_col = BTreeMap::new();
    let mut key_col = HashMap::new();
    let mut aggs = Vec::new();

    for m in &layer.mappings {
        let kind = graphic.scale_kind(m.aesthetic).unwrap_or(ScaleKind::Linear);
        match &m.role {
            MappingRole::Aggregate { func, column } => {
                let values = match column {
                    None => None,
                    Some(_) => {
                        let ExprKind::Call { args, .. } = &m.expr.kind else { unreachable!() };
                        let vals = column_values(&args[0], table, true)?;
                        Some(vals.into_iter().map(|v| v.and_then(|v| v.as_num())).collect())
                    }
                };
                aggs.push(AggColumn {
                    aesthetic: m.aesthetic,
                    func: *func,
                    values,
                    scale: kind,
                });
            }
            MappingRole::Plain | MappingRole::Binned { .. } => {
                let numeric = m.value_type == crate::analyzer::ValueType::Numeric;
                raw.push(column_values(&m.expr, table, numeric)?);
                col_scale.push(kind);
                col_binned.push((Some(m.aesthetic), m.expr.span, is_binned(&m.expr)));
                mapping_col.insert(m.aesthetic, raw.len() - 1);
                key_col.entry(m.expr.key()).or_insert(raw.len() - 1);
            }
        }
    }
    let aux = layer
        .groupings
        .iter()
        .chain(match &layer.collections {
            Collections::Explicit(e) => e.as_slice(),
            Collections::Default => &[],
        })
        .chain(graphic.facet.iter().flat_map(|f| f.exprs()));
    for e in aux {
        if key_col.contains_key(&e.key()) {
            continue;
        }
        let numeric = is_binned(e)
            || layer
                .schema
                .column(e.columns().first().copied().unwrap_or(""))
                .is_some_and(|c| c.ty.is_numeric())
            || matches!(e.kind, ExprKind::Number(_));
        raw.push(column_values(e, table, numeric)?);
        col_scale.push(ScaleKind::Linear);
        col_binned.push((None, e.span, is_binned(e)));
        key_col.insert(e.key(), raw.len() - 1);
    }

    // Null removal, then scaling. Rows are dropped across the whole frame.
    let mut warnings = Vec::new();
    let mut keep: Vec<bool> = (0..n).map(|r| raw.iter().all(|c| c[r].is_some())).collect();
    let nulls = keep.iter().filter(|k| !**k).count();
    if nulls > 0 {
        warnings.push(Diagnostic::warning(
            Code::NullDropped,
            layer.source_span,
            format!("{nulls} row(s) with null values in mapped or grouping columns were dropped"),
        ));
    }
    let mut nonpositive = 0;
    for r in 0..n {
        if !keep[r] {
            continue;
        }
        let mut ok = true;
        for (c, kind) in raw.iter_mut().zip(&col_scale) {
            if let Some(Value::Num(v)) = &mut c[r] {
                match scale::scale_value(*v, *kind) {
                    Some(s) => *v = s,
                    None => ok = false,
                }
            }
        }
        for agg in aggs.iter_mut() {
            if agg.func == Func::Count {
                continue;
            }
            if let Some(values) = &mut agg.values {
                if let Some(v) = values[r] {
                    match scale::scale_value(v, agg.scale) {
                        Some(s) => values[r] = Some(s),
                        None => ok = false,
                    }
                }
            }
        }
        if !ok {
            keep[r] = false;
            nonpositive += 1;
        }
    }
    if nonpositive > 0 {
        warnings.push(Diagnostic::warning(
            Code::NonpositiveLog,
            layer.source_span,
            format!("{nonpositive} row(s) with values <= 0 were dropped by a log scale"),
        ));
    }

    let kept: Vec<usize> = (0..n).filter(|&r| keep[r]).collect();
    let mut cols: Vec<Vec<Value>> = raw
        .into_iter()
        .map(|c| kept.iter().map(|&r| c[r].clone().expect("nulls removed")).collect())
        .collect();
    let aggs: Vec<AggColumn> = aggs
        .into_iter()
        .map(|mut a| {
            a.values = a.values.map(|v| kept.iter().map(|&r| v[r]).collect());
            a
        })
        .collect();

    // Column-level transforms run after scaling, over the whole layer.
    let mut bins = BTreeMap::new();
    for (c, (aesthetic, span, binned)) in col_binned.iter().enumerate() {
        if !binned {
            continue;
        }
        let values: Vec<f64> = cols[c].iter().filter_map(Value::as_num).collect();
        let (def, idx) = bin::bin(&values, config.bin_count).map_err(|d| {
            Diagnostic::error(
                d.code,
                *span,
                "no rows remain to bin after removing nulls and log-dropped values",
            )
        })?;
        cols[c] = idx.iter().map(|&i| Value::Num(def.midpoint(i))).collect();
        if let Some(a) = aesthetic {
            bins.insert(*a, def);
        }
    }

    Ok(Frame {
        len: kept.len(),
        cols,
        mapping_col,
        key_col,
        aggs,
        bins,
        warnings,
    })
}

/// A post-CTA record: positional values, color and collection key.
#[derive(Debug, Clone)]
struct Record {
    pos: [Option<f64>; 2],
    color: Option<usize>,
    collect: Vec<Value>,
}

struct Globals<'a> {
    coord: Coord,
    scales: &'a BTreeMap<Aesthetic, ScaleDef>,
    layout: &'a FacetLayout,
    row_expr: Option<&'a Expr>,
    col_expr: Option<&'a Expr>,
    categories: &'a BTreeMap<Aesthetic, Vec<String>>,
    config: &'a EngineConfig,
}

impl Globals<'_> {
    fn is_discrete(&self, aesthetic: Aesthetic) -> bool {
        self.scales
            .get(&aesthetic)
            .is_none_or(|s| s.kind == ScaleKind::Discrete)
    }

    fn encode(&self, value: &Value, aesthetic: Aesthetic) -> f64 {
        match value {
            Value::Num(n) => *n,
            Value::Text(s) => self.categories[&aesthetic]
                .binary_search(s)
                .expect("category registered") as f64,
        }
    }
}

fn positional(coord: Coord) -> [Aesthetic; 2] {
    match coord {
        Coord::Cartesian => [Aesthetic::X, Aesthetic::Y],
        Coord::Polar => [Aesthetic::Theta, Aesthetic::R],
    }
}

/// Partition rows into panels, aggregate when the layer groups, and emit
/// post-CTA records per panel.
fn records_by_panel(layer: &ResolvedLayer, frame: &Frame, g: &Globals) -> Vec<Vec<Record>> {
    let mut panel_rows: Vec<Vec<usize>> = vec![Vec::new(); g.layout.panel_count()];
    for r in 0..frame.len {
        let row_v = g.row_expr.map(|e| frame.key_values(e, r));
        let col_v = g.col_expr.map(|e| frame.key_values(e, r));
        panel_rows[g.layout.panel_of(row_v.as_ref(), col_v.as_ref())].push(r);
    }

    let [pa, pb] = positional(g.coord);
    let collect_exprs: &[Expr] = match &layer.collections {
        Collections::Explicit(e) => e,
        Collections::Default => &[],
    };
    let make = |rep: usize, agg_values: &BTreeMap<Aesthetic, f64>| -> Record {
        let pos = [pa, pb].map(|a| {
            agg_values.get(&a).copied().or_else(|| {
                frame
                    .mapping_col
                    .get(&a)
                    .map(|&c| g.encode(&frame.cols[c][rep], a))
            })
        });
        let color = frame
            .mapping_col
            .get(&Aesthetic::Color)
            .map(|&c| g.encode(&frame.cols[c][rep], Aesthetic::Color) as usize);
        let collect = match collect_exprs.is_empty() {
            false => collect_exprs.iter().map(|e| frame.key_values(e, rep)).collect(),
            true => color.iter().map(|&c| Value::Num(c as f64)).collect(),
        };
        Record { pos, color, collect }
    };

    panel_rows
        .iter()
        .map(|rows| {
            if !layer.aggregates() {
                return rows.iter().map(|&r| make(r, &BTreeMap::new())).collect();
            }
            aggregate::group_rows(rows, |r| {
                layer.groupings.iter().map(|e| frame.key_values(e, r)).collect()
            })
            .iter()
            .filter_map(|grp| {
                let mut agg_values = BTreeMap::new();
                for a in &frame.aggs {
                    let v = aggregate::aggregate(a.func, a.values.as_deref(), &grp.rows)?;
                    // Counts only exist after grouping, so they are scaled here.
                    let v = match a.func {
                        Func::Count => scale::scale_value(v, a.scale)?,
                        _ => v,
                    };
                    agg_values.insert(a.aesthetic, v);
                }
                Some(make(grp.rows[0], &agg_values))
            })
            .collect()
        })
        .collect()
}

/// Marks of one layer in every panel.
fn layer_marks(
    index: usize,
    layer: &ResolvedLayer,
    frame: &Frame,
    g: &Globals,
) -> Result<Vec<MarkSet>, Diagnostic> {
    let panels = records_by_panel(layer, frame, g);
    let [pa, _] = positional(g.coord);
    let all_x: Vec<f64> = panels.iter().flatten().filter_map(|r| r.pos[0]).collect();
    let x_discrete = g.is_discrete(pa);
    let mut rng = ChaCha8Rng::seed_from_u64(g.config.seed);
    rng.set_stream(index as u64);

    let bar_width = if x_discrete {
        DISCRETE_BAR_WIDTH
    } else if let Some(def) = frame.bins.get(&pa).filter(|d| !d.is_degenerate()) {
        def.width() * CONTINUOUS_BAR_FILL
    } else {
        qualify::min_spacing(&all_x).map_or(DISCRETE_BAR_WIDTH, |s| s * CONTINUOUS_BAR_FILL)
    };
    let jitter_w = qualify::jitter_width(&all_x, x_discrete, g.config.jitter_fraction);

    panels
        .into_iter()
        .map(|records| {
            let x = |r: &Record| r.pos[0].unwrap_or(0.0);
            let y = |r: &Record| r.pos[1].unwrap_or(0.0);
            let marks = match (layer.geom, layer.qualifier) {
                (Geom::Point, q) => {
                    let mut xs: Vec<f64> = records.iter().map(x).collect();
                    if q == Some(Qualifier::Jittered) {
                        qualify::jitter(&mut xs, jitter_w, &mut rng);
                    }
                    records
                        .iter()
                        .zip(xs)
                        .map(|(r, jx)| Mark::Point {
                            x: jx,
                            y: y(r),
                            color: r.color,
                        })
                        .collect()
                }
                (Geom::Line, q) => {
                    let idx: Vec<usize> = (0..records.len()).collect();
                    let collections =
                        collect::collect(&idx, |i| records[i].collect.clone(), |i| x(&records[i]));
                    let mut marks = Vec::new();
                    for (group, rows) in collections.iter().enumerate() {
                        let color = records[rows[0]].color;
                        if q == Some(Qualifier::Regression) {
                            let xs: Vec<f64> = rows.iter().map(|&i| x(&records[i])).collect();
                            let ys: Vec<f64> = rows.iter().map(|&i| y(&records[i])).collect();
                            let fit = qualify::ols(&xs, &ys).ok_or_else(|| {
                                Diagnostic::error(
                                    Code::RegressionUnderdetermined,
                                    layer.geom_span,
                                    "regression needs at least two distinct x values in each collection",
                                )
                            })?;
                            // Rows are x-sorted, so the ends span the collection.
                            let (x0, x1) = (xs[0], xs[xs.len() - 1]);
                            marks.push(Mark::Segment {
                                x0,
                                y0: fit.at(x0),
                                x1,
                                y1: fit.at(x1),
                                color,
                                group,
                            });
                        } else {
                            for w in rows.windows(2) {
                                let (a, b) = (&records[w[0]], &records[w[1]]);
                                marks.push(Mark::Segment {
                                    x0: x(a),
                                    y0: y(a),
                                    x1: x(b),
                                    y1: y(b),
                                    color: a.color,
                                    group,
                                });
                            }
                        }
                    }
                    marks
                }
                (Geom::Bar, _) => bar_marks(layer, &records, bar_width, g)?,
            };
            Ok(MarkSet {
                layer: index,
                geom: layer.geom,
                marks,
            })
        })
        .collect()
}

fn bar_marks(
    layer: &ResolvedLayer,
    records: &[Record],
    width: f64,
    g: &Globals,
) -> Result<Vec<Mark>, Diagnostic> {
    // Cartesian bars sit at x and measure y; polar bars sit on an r ring and
    // measure theta.
    let bars: Vec<stack::BarInput> = records
        .iter()
        .map(|r| match g.coord {
            Coord::Cartesian => stack::BarInput {
                slot: r.pos[0].unwrap_or(0.0),
                color: r.color,
                value: r.pos[1].unwrap_or(0.0),
            },
            Coord::Polar => stack::BarInput {
                slot: r.pos[1].unwrap_or(0.0),
                color: r.color,
                value: r.pos[0].unwrap_or(0.0),
            },
        })
        .collect();
    let negative = |i: usize| {
        Diagnostic::error(
            Code::NegativeStack,
            layer.geom_span,
            format!("bar length {} is negative and cannot be stacked", bars[i].value),
        )
    };
    let extents = if layer.stacks() {
        stack::stack(&bars).map_err(|e| negative(e.0))?
    } else {
        bars.iter().map(|b| (b.value.min(0.0), b.value.max(0.0))).collect()
    };
    Ok(match g.coord {
        Coord::Cartesian => bars
            .iter()
            .zip(extents)
            .map(|(b, (y0, y1))| Mark::Rect {
                x: b.slot,
                width,
                y0,
                y1,
                color: b.color,
            })
            .collect(),
        Coord::Polar => {
            if let Some(i) = bars.iter().position(|b| b.value < 0.0) {
                return Err(negative(i));
            }
            let angles = stack::to_angles(&bars, &extents);
            bars.iter()
                .zip(angles)
                .map(|(b, (theta0, theta1))| Mark::Wedge {
                    theta0,
                    theta1,
                    r0: b.slot,
                    r1: b.slot + 1.0,
                    color: b.color,
                })
                .collect()
        }
    })
}

fn extend(range: &mut Option<(f64, f64)>, v: f64) {
    let r = range.get_or_insert((v, v));
    r.0 = r.0.min(v);
    r.1 = r.1.max(v);
}

fn compute_domains(
    coord: Coord,
    scales: &BTreeMap<Aesthetic, ScaleDef>,
    categories: &BTreeMap<Aesthetic, Vec<String>>,
    grid: &PanelGrid,
) -> BTreeMap<Aesthetic, Domain> {
    let [pa, pb] = positional(coord);
    let mut ranges: BTreeMap<Aesthetic, Option<(f64, f64)>> = BTreeMap::new();
    for mark in grid.panels.iter().flat_map(|p| &p.layers).flat_map(|m| &m.marks) {
        let (a, b): (Vec<f64>, Vec<f64>) = match *mark {
            Mark::Point { x, y, .. } => (vec![x], vec![y]),
            Mark::Segment { x0, y0, x1, y1, .. } => (vec![x0, x1], vec![y0, y1]),
            Mark::Rect { x, width, y0, y1, .. } => (vec![x - width / 2.0, x + width / 2.0], vec![y0, y1]),
            Mark::Wedge { .. } => (vec![0.0, TAU], vec![]),
        };
        for v in a {
            extend(ranges.entry(pa).or_default(), v);
        }
        for v in b {
            extend(ranges.entry(pb).or_default(), v);
        }
    }
    scales
        .iter()
        .map(|(&a, s)| {
            let d = if s.kind == ScaleKind::Discrete {
                Domain::Discrete {
                    categories: categories.get(&a).cloned().unwrap_or_default(),
                }
            } else {
                let (min, max) = ranges.get(&a).copied().flatten().unwrap_or((0.0, 1.0));
                Domain::Continuous { min, max }
            };
            (a, d)
        })
        .collect()
}

fn map_layers<T: Send, F>(parallel: bool, n: usize, f: F) -> Vec<T>
where
    F: Fn(usize) -> T + Sync + Send,
{
    if parallel {
        (0..n).into_par_iter().map(f).collect()
    } else {
        (0..n).map(f).collect()
    }
}

/// Run every layer of `graphic` against `db`.
pub fn execute(
    graphic: &ResolvedGraphic,
    db: &Database,
    config: &EngineConfig,
) -> Result<ExecutionResult, Diagnostic> {
    // Each distinct source is fetched once; layers from one chain share it.
    let mut sources: Vec<(&DataSource, ColumnTable)> = Vec::new();
    let mut source_of = Vec::with_capacity(graphic.layers.len());
    for layer in &graphic.layers {
        match sources.iter().position(|(s, _)| **s == layer.source) {
            Some(i) => source_of.push(i),
            None => {
                sources.push((&layer.source, db.fetch(&layer.source, layer.source_span)?));
                source_of.push(sources.len() - 1);
            }
        }
    }

    let frames: Vec<Frame> = map_layers(config.parallel, graphic.layers.len(), |i| {
        prepare_layer(&graphic.layers[i], graphic, &sources[source_of[i]].1, config)
    })
    .into_iter()
    .collect::<Result<_, _>>()?;

    let (row_expr, col_expr) = graphic
        .facet
        .as_ref()
        .map_or((None, None), |f| (f.row_expr.as_ref(), f.col_expr.as_ref()));
    let facet_values = |e: Option<&Expr>| {
        e.map(|e| {
            frames
                .iter()
                .flat_map(|f| f.cols[f.key_col[&e.key()]].iter().cloned())
                .collect::<Vec<_>>()
        })
    };
    let facet_span = row_expr.or(col_expr).map_or(Span::default(), |e| e.span);
    let layout = facet::facet_partition(
        facet_values(row_expr),
        facet_values(col_expr),
        config.facet_cap,
        facet_span,
    )?;

    let mut categories: BTreeMap<Aesthetic, Vec<String>> = BTreeMap::new();
    for (&a, s) in &graphic.scales {
        if s.kind != ScaleKind::Discrete {
            continue;
        }
        let set: BTreeSet<String> = frames
            .iter()
            .filter_map(|f| f.mapping_col.get(&a).map(|&c| &f.cols[c]))
            .flatten()
            .map(Value::to_string)
            .collect();
        categories.insert(a, set.into_iter().collect());
    }

    let globals = Globals {
        coord: graphic.coord,
        scales: &graphic.scales,
        layout: &layout,
        row_expr,
        col_expr,
        categories: &categories,
        config,
    };
    let per_layer: Vec<Vec<MarkSet>> = map_layers(config.parallel, graphic.layers.len(), |i| {
        layer_marks(i, &graphic.layers[i], &frames[i], &globals)
    })
    .into_iter()
    .collect::<Result<_, _>>()?;

    let panels = (0..layout.panel_count())
        .map(|p| Panel {
            row: p / layout.col_count(),
            col: p % layout.col_count(),
            layers: per_layer.iter().map(|sets| sets[p].clone()).collect(),
        })
        .collect();
    let grid = PanelGrid {
        row_labels: layout.row_labels(),
        col_labels: layout.col_labels(),
        panels,
    };

    let mut warnings: Vec<Diagnostic> = graphic.warnings.clone();
    for w in frames.iter().flat_map(|f| &f.warnings) {
        if !warnings.iter().any(|x| x == w && x.line == w.line && x.col == w.col) {
            warnings.push(w.clone());
        }
    }

    Ok(ExecutionResult {
        coord: graphic.coord,
        domains: compute_domains(graphic.coord, &graphic.scales, &categories, &grid),
        scales: graphic.scales.clone(),
        bins: frames.into_iter().map(|f| f.bins).collect(),
        grid,
        warnings,
    })
}
