use super::Value;
use crate::diagnostic::{Code, Diagnostic, Span};

/// Panel arrangement: sorted distinct row and column values. An absent facet
/// dimension has a single unlabeled entry.
#[derive(Debug, Clone, PartialEq)]
pub struct FacetLayout {
    pub rows: Option<Vec<Value>>,
    pub cols: Option<Vec<Value>>,
}

impl FacetLayout {
    pub fn single() -> Self {
        FacetLayout { rows: None, cols: None }
    }

    pub fn row_count(&self) -> usize {
        self.rows.as_ref().map_or(1, Vec::len).max(1)
    }

    pub fn col_count(&self) -> usize {
        self.cols.as_ref().map_or(1, Vec::len).max(1)
    }

    pub fn panel_count(&self) -> usize {
        self.row_count() * self.col_count()
    }

    /// Row-major panel index for a row's facet values.
    pub fn panel_of(&self, row: Option<&Value>, col: Option<&Value>) -> usize {
        let find = |labels: &Option<Vec<Value>>, v: Option<&Value>| match (labels, v) {
            (Some(l), Some(v)) => l.binary_search(v).unwrap_or(0),
            _ => 0,
        };
        find(&self.rows, row) * self.col_count() + find(&self.cols, col)
    }

    pub fn row_labels(&self) -> Vec<String> {
        labels(&self.rows)
    }

    pub fn col_labels(&self) -> Vec<String> {
        labels(&self.cols)
    }
}

fn labels(values: &Option<Vec<Value>>) -> Vec<String> {
    values
        .as_ref()
        .map(|v| v.iter().map(Value::to_string).collect())
        .unwrap_or_default()
}

/// Build the panel grid from every value each facet expression takes; the
/// grid is the full Cartesian product, including empty panels.
pub fn facet_partition(
    row_values: Option<Vec<Value>>,
    col_values: Option<Vec<Value>>,
    cap: usize,
    span: Span,
) -> Result<FacetLayout, Diagnostic> {
    let distinct = |v: Option<Vec<Value>>| {
        v.map(|mut v| {
            v.sort();
            v.dedup();
            v
        })
    };
    let layout = FacetLayout {
        rows: distinct(row_values),
        cols: distinct(col_values),
    };
    if layout.panel_count() > cap {
        return Err(Diagnostic::error(
            Code::FacetCardinality,
            span,
            format!(
                "faceting produces {} panels, more than the limit of {cap}",
                layout.panel_count()
            ),
        ));
    }
    Ok(layout)
}
