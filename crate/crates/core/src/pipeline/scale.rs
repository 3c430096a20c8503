use crate::analyzer::ScaleKind;

/// Transform a single value into scaled space. `None` means the value has no
/// image under the scale (non-positive under log) and its row must be dropped.
pub fn scale_value(v: f64, kind: ScaleKind) -> Option<f64> {
    match kind {
        ScaleKind::Linear | ScaleKind::Discrete => Some(v),
        ScaleKind::Log10 if v > 0.0 => Some(v.log10()),
        ScaleKind::Log10 => None,
    }
}

/// Apply a scale to a column. Dropped positions are `None`.
pub fn apply_scale(values: &[f64], kind: ScaleKind) -> Vec<Option<f64>> {
    values.iter().map(|&v| scale_value(v, kind)).collect()
}
