use std::collections::BTreeMap;
use std::f64::consts::TAU;

/// A bar before stacking: its position slot, color order and length.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BarInput {
    pub slot: f64,
    pub color: Option<usize>,
    pub value: f64,
}

/// Negative bar length at this input index.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NegativeStack(pub usize);

/// Stack bars sharing a slot from 0 in ascending color order. Returns the
/// `[lo, hi]` extent of each input bar, in input order.
pub fn stack(bars: &[BarInput]) -> Result<Vec<(f64, f64)>, NegativeStack> {
    if let Some(i) = bars.iter().position(|b| b.value < 0.0) {
        return Err(NegativeStack(i));
    }
    let mut slots: BTreeMap<u64, Vec<usize>> = BTreeMap::new();
    for (i, b) in bars.iter().enumerate() {
        slots.entry(b.slot.to_bits()).or_default().push(i);
    }
    let mut out = vec![(0.0, 0.0); bars.len()];
    for mut members in slots.into_values() {
        members.sort_by_key(|&i| bars[i].color);
        let mut acc = 0.0;
        for i in members {
            out[i] = (acc, acc + bars[i].value);
            acc += bars[i].value;
        }
    }
    Ok(out)
}

/// Rescale stacked extents so every slot's total spans a full turn.
pub fn to_angles(bars: &[BarInput], extents: &[(f64, f64)]) -> Vec<(f64, f64)> {
    let mut totals: BTreeMap<u64, f64> = BTreeMap::new();
    for (b, (_, hi)) in bars.iter().zip(extents) {
        let t = totals.entry(b.slot.to_bits()).or_insert(0.0);
        *t = t.max(*hi);
    }
    bars.iter()
        .zip(extents)
        .map(|(b, &(lo, hi))| {
            let total = totals[&b.slot.to_bits()];
            if total > 0.0 {
                (TAU * lo / total, TAU * hi / total)
            } else {
                (0.0, 0.0)
            }
        })
        .collect()
}
