use crate::analyzer::ScaleKind;
use crate::pipeline::format_number;

pub const MIN_TICKS: usize = 4;
pub const MAX_TICKS: usize = 7;

#[derive(Debug, Clone, PartialEq)]
pub struct Tick {
    /// Position in scaled space.
    pub position: f64,
    pub label: String,
}

fn tick_range(lo: f64, hi: f64, step: f64) -> (i64, i64) {
    let eps = 1e-9;
    ((lo / step - eps).ceil() as i64, (hi / step + eps).floor() as i64)
}

fn count(lo: f64, hi: f64, step: f64) -> usize {
    let (a, b) = tick_range(lo, hi, step);
    (b - a + 1).max(0) as usize
}

/// Smallest step of the form m × 10^k, m in `mults`, giving between
/// `MIN_TICKS` and `MAX_TICKS` ticks inside `[lo, hi]`.
fn nice_step(lo: f64, hi: f64, mults: &[f64]) -> Option<f64> {
    let base = (hi - lo).log10().floor() as i32;
    (base - 2..=base + 1)
        .flat_map(|e| mults.iter().map(move |m| m * 10f64.powi(e)))
        .find(|&s| count(lo, hi, s) <= MAX_TICKS)
        .filter(|&s| count(lo, hi, s) >= MIN_TICKS)
}

fn decimals(step: f64) -> usize {
    // Enough digits to tell adjacent ticks apart, e.g. 2 for a 0.25 step.
    (0..=12)
        .find(|&d| {
            let scaled = step * 10f64.powi(d);
            (scaled - scaled.round()).abs() < 1e-6 * scaled.max(1.0)
        })
        .unwrap_or(12) as usize
}

/// Fixed-point label with negative zero normalized.
pub fn format_fixed(v: f64, digits: usize) -> String {
    let s = format!("{v:.digits$}");
    if s.starts_with('-') && s[1..].chars().all(|c| c == '0' || c == '.') {
        s[1..].to_string()
    } else {
        s
    }
}

fn linear_ticks(lo: f64, hi: f64) -> Vec<Tick> {
    let step = nice_step(lo, hi, &[1.0, 2.0, 5.0])
        .or_else(|| nice_step(lo, hi, &[1.0, 2.0, 2.5, 5.0]))
        .unwrap_or((hi - lo) / (MIN_TICKS - 1) as f64);
    let digits = decimals(step);
    let (a, b) = tick_range(lo, hi, step);
    (a..=b)
        .map(|k| {
            let position = k as f64 * step;
            Tick {
                position,
                label: format_fixed(position, digits),
            }
        })
        .collect()
}

/// Label for m × 10^k in original units.
fn log_label(m: u32, k: i64) -> String {
    if (-6..=15).contains(&k) {
        let v = m as f64 * 10f64.powi(k as i32);
        if k >= 0 {
            format_number(v)
        } else {
            format_fixed(v, (-k) as usize)
        }
    } else if m == 1 {
        format!("1e{k}")
    } else {
        format!("{m}e{k}")
    }
}

/// Label for 10^k in original units.
pub fn power_label(k: i64) -> String {
    log_label(1, k)
}

/// Ticks at powers of ten, thinned to at most `MAX_TICKS`. Narrow domains
/// holding fewer than two powers fall back to 1-2-5 and then 1..9 mantissas.
fn log_ticks(lo: f64, hi: f64) -> Vec<Tick> {
    let (a, b) = (lo.ceil() as i64, hi.floor() as i64);
    if b > a {
        let stride = ((b - a) as usize / MAX_TICKS + 1) as i64;
        return (a..=b)
            .filter(|k| k.rem_euclid(stride) == 0)
            .map(|k| Tick {
                position: k as f64,
                label: power_label(k),
            })
            .collect();
    }
    let eps = 1e-12;
    for mantissas in [&[1u32, 2, 5][..], &[1, 2, 3, 4, 5, 6, 7, 8, 9]] {
        let ticks: Vec<Tick> = (lo.floor() as i64..=hi.ceil() as i64)
            .flat_map(|k| mantissas.iter().map(move |&m| (m, k)))
            .map(|(m, k)| (m, k, (m as f64).log10() + k as f64))
            .filter(|&(_, _, p)| p >= lo - eps && p <= hi + eps)
            .map(|(m, k, position)| Tick {
                position,
                label: log_label(m, k),
            })
            .collect();
        if ticks.len() >= 2 {
            return ticks;
        }
    }
    // Less than one mantissa step wide: linear ticks in original units.
    linear_ticks(10f64.powf(lo), 10f64.powf(hi))
        .into_iter()
        .filter(|t| t.position > 0.0)
        .map(|t| Tick {
            position: t.position.log10(),
            ..t
        })
        .collect()
}

/// Ticks for a continuous domain `[lo, hi]` in scaled space.
pub fn compute_ticks(lo: f64, hi: f64, kind: ScaleKind) -> Vec<Tick> {
    debug_assert!(lo < hi);
    match kind {
        ScaleKind::Log10 => log_ticks(lo, hi),
        _ => linear_ticks(lo, hi),
    }
}

/// One centered tick per category.
pub fn discrete_ticks(categories: &[String]) -> Vec<Tick> {
    categories
        .iter()
        .enumerate()
        .map(|(i, c)| Tick {
            position: i as f64,
            label: c.clone(),
        })
        .collect()
}
