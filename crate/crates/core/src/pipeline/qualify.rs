use rand::Rng;

/// Least-squares line `y = intercept + slope * x`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Fit {
    pub slope: f64,
    pub intercept: f64,
}

impl Fit {
    pub fn at(&self, x: f64) -> f64 {
        self.intercept + self.slope * x
    }
}

/// Ordinary least squares of `ys` on `xs`; `None` with fewer than two
/// distinct x values.
pub fn ols(xs: &[f64], ys: &[f64]) -> Option<Fit> {
    debug_assert_eq!(xs.len(), ys.len());
    let first = *xs.first()?;
    if xs.iter().all(|&x| x == first) {
        return None;
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let (sxy, sxx) = xs.iter().zip(ys).fold((0.0, 0.0), |(sxy, sxx), (&x, &y)| {
        let dx = x - mx;
        (sxy + dx * (y - my), sxx + dx * dx)
    });
    let slope = sxy / sxx;
    Some(Fit {
        slope,
        intercept: my - slope * mx,
    })
}

/// Smallest gap between distinct values, if there are at least two.
pub fn min_spacing(values: &[f64]) -> Option<f64> {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    v.dedup();
    v.windows(2).map(|w| w[1] - w[0]).reduce(f64::min)
}

/// Jitter band width: `fraction` of the closest spacing between positions,
/// or of one category unit on discrete axes.
pub fn jitter_width(xs: &[f64], discrete: bool, fraction: f64) -> f64 {
    if discrete {
        fraction
    } else {
        min_spacing(xs).map_or(0.0, |s| fraction * s)
    }
}

/// Offset each position by a uniform draw from `[-w/2, w/2]`.
pub fn jitter<R: Rng>(xs: &mut [f64], width: f64, rng: &mut R) {
    if width <= 0.0 {
        return;
    }
    let half = width / 2.0;
    for x in xs {
        *x += rng.random_range(-half..=half);
    }
}
