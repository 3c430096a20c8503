use super::aggregate::group_rows;
use super::Value;

/// Split `rows` into collections by key tuple (ascending), each ordered by
/// ascending x with ties kept in input order.
pub fn collect(
    rows: &[usize],
    key_of: impl Fn(usize) -> Vec<Value>,
    x_of: impl Fn(usize) -> f64,
) -> Vec<Vec<usize>> {
    group_rows(rows, key_of)
        .into_iter()
        .map(|g| {
            let mut rows = g.rows;
            rows.sort_by(|&a, &b| x_of(a).total_cmp(&x_of(b)));
            rows
        })
        .collect()
}
