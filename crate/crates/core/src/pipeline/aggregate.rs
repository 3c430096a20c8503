use std::collections::BTreeMap;

use super::Value;
use crate::ast::Func;

/// Rows sharing one grouping tuple.
#[derive(Debug, Clone, PartialEq)]
pub struct Group {
    pub key: Vec<Value>,
    pub rows: Vec<usize>,
}

/// Partition `rows` by their key tuple; groups come out in ascending key order
/// and each keeps its rows in input order.
pub fn group_rows(rows: &[usize], key_of: impl Fn(usize) -> Vec<Value>) -> Vec<Group> {
    let mut groups: BTreeMap<Vec<Value>, Vec<usize>> = BTreeMap::new();
    for &r in rows {
        groups.entry(key_of(r)).or_default().push(r);
    }
    groups
        .into_iter()
        .map(|(key, rows)| Group { key, rows })
        .collect()
}

/// Aggregate `column` over `rows`. `column` is `None` for `count(*)`.
/// Returns `None` when a value-based aggregate sees no non-null input.
pub fn aggregate(func: Func, column: Option<&[Option<f64>]>, rows: &[usize]) -> Option<f64> {
    let Some(column) = column else {
        return Some(rows.len() as f64);
    };
    let values = rows.iter().filter_map(|&r| column[r]);
    match func {
        Func::Count => Some(values.count() as f64),
        Func::Sum => {
            let v: Vec<f64> = values.collect();
            (!v.is_empty()).then(|| v.iter().sum())
        }
        Func::Mean => {
            let v: Vec<f64> = values.collect();
            (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
        }
        Func::Min => values.reduce(f64::min),
        Func::Max => values.reduce(f64::max),
        Func::Bin => unreachable!("bin is not an aggregate"),
    }
}
