use serde::Serialize;

use crate::diagnostic::{Code, Diagnostic, Span};

/// Equal-width bins over `[edges[0], edges[n]]`, right-open except the last.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BinDef {
    pub edges: Vec<f64>,
}

impl BinDef {
    pub fn equal_width(min: f64, max: f64, count: usize) -> Self {
        if min == max {
            return BinDef { edges: vec![min, max] };
        }
        let count = count.max(1);
        let step = (max - min) / count as f64;
        let mut edges: Vec<f64> = (0..count).map(|i| min + step * i as f64).collect();
        edges.push(max);
        BinDef { edges }
    }

    pub fn count(&self) -> usize {
        self.edges.len() - 1
    }

    pub fn is_degenerate(&self) -> bool {
        self.edges[0] == self.edges[self.count()]
    }

    pub fn width(&self) -> f64 {
        (self.edges[self.count()] - self.edges[0]) / self.count() as f64
    }

    pub fn midpoint(&self, i: usize) -> f64 {
        (self.edges[i] + self.edges[i + 1]) / 2.0
    }

    pub fn midpoints(&self) -> Vec<f64> {
        (0..self.count()).map(|i| self.midpoint(i)).collect()
    }

    /// Bin holding `v`, which must lie within the outer edges.
    pub fn index_of(&self, v: f64) -> usize {
        let n = self.count();
        if self.is_degenerate() {
            return 0;
        }
        let mut i = (((v - self.edges[0]) / self.width()).floor().max(0.0) as usize).min(n - 1);
        // Correct for rounding so membership agrees with the stored edges.
        while i > 0 && v < self.edges[i] {
            i -= 1;
        }
        while i < n - 1 && v >= self.edges[i + 1] {
            i += 1;
        }
        i
    }
}

/// Bin `values` into `bin_count` equal-width bins over their range.
pub fn bin(values: &[f64], bin_count: usize) -> Result<(BinDef, Vec<usize>), Diagnostic> {
    if values.is_empty() {
        return Err(Diagnostic::error(
            Code::EmptyInput,
            Span::default(),
            "cannot bin an empty column",
        ));
    }
    let (min, max) = values
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    let def = BinDef::equal_width(min, max, bin_count);
    let idx = values.iter().map(|&v| def.index_of(v)).collect();
    Ok((def, idx))
}
