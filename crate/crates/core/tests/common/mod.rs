//! Fixtures and brute-force oracles shared by integration tests.
#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use sgl_core::pipeline::Mark;
use sgl_core::*;

pub fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures")
}

pub fn db_with(cars: &str, trees: &str) -> Database {
    let db = Database::open_in_memory().unwrap();
    db.load_csv_path(&fixtures().join(cars), "cars", ReplacePolicy::Replace).unwrap();
    db.load_csv_path(&fixtures().join(trees), "trees", ReplacePolicy::Replace).unwrap();
    db
}

pub fn full_db() -> Database {
    db_with("cars.csv", "trees.csv")
}

pub fn sample_db() -> Database {
    db_with("cars_sample.csv", "trees_sample.csv")
}

fn sgl_files(dir: &str) -> Vec<(String, String)> {
    let mut files: Vec<_> = std::fs::read_dir(fixtures().join(dir))
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|e| e == "sgl"))
        .map(|p| (p.file_stem().unwrap().to_string_lossy().into_owned(), std::fs::read_to_string(&p).unwrap()))
        .collect();
    files.sort();
    files
}

pub fn corpus() -> Vec<(String, String)> {
    sgl_files("corpus")
}

pub fn corpus_statement(stem: &str) -> String {
    std::fs::read_to_string(fixtures().join("corpus").join(format!("{stem}.sgl"))).unwrap()
}

/// Invalid statements with the diagnostic named in their `-- expect:` header.
pub struct Invalid {
    pub name: String,
    pub text: String,
    pub code: String,
    pub line: usize,
    pub col: usize,
}

pub fn invalid_corpus() -> Vec<Invalid> {
    sgl_files("invalid")
        .into_iter()
        .map(|(name, text)| {
            let header = text.lines().next().unwrap();
            let rest = header.strip_prefix("-- expect: ").expect("expect header");
            let (code, pos) = rest.split_once(' ').unwrap();
            let (line, col) = pos.split_once(':').unwrap();
            Invalid {
                code: code.to_string(),
                line: line.parse().unwrap(),
                col: col.parse().unwrap(),
                name,
                text,
            }
        })
        .collect()
}

pub fn run(db: &Database, sgl: &str, seed: u64) -> Result<RunOutput, Vec<Diagnostic>> {
    let mut options = RunOptions::default();
    options.engine.seed = seed;
    run_statement(db, sgl, &options)
}

pub fn marks(out: &ExecutionResult) -> Vec<&Mark> {
    out.grid
        .panels
        .iter()
        .flat_map(|p| &p.layers)
        .flat_map(|l| &l.marks)
        .collect()
}

/// `|a - b| <= tol * max(1, |b|)`.
pub fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * b.abs().max(1.0)
}

// ---- oracles ----

/// Closed-form least squares: slope = Sxy / Sxx, intercept = ȳ − slope·x̄.
pub fn ols(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}

/// Count of values per bin, by direct comparison with the edges: bins are
/// right-open except the last.
pub fn histogram(values: &[f64], edges: &[f64]) -> Vec<usize> {
    let n = edges.len() - 1;
    (0..n)
        .map(|i| {
            values
                .iter()
                .filter(|&&v| v >= edges[i] && (v < edges[i + 1] || (i == n - 1 && v <= edges[n])))
                .count()
        })
        .collect()
}

/// Closed-form equal-width edges over `[min, max]`.
pub fn expected_edges(values: &[f64], count: usize) -> Vec<f64> {
    let min = values.iter().cloned().fold(f64::INFINITY, f64::min);
    let max = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    (0..=count).map(|i| min + (max - min) * i as f64 / count as f64).collect()
}

/// Mean and count of `ys` per key, iterating rows in order.
pub fn grouped(keys: &[String], ys: &[f64]) -> BTreeMap<String, (f64, usize)> {
    let mut acc: BTreeMap<String, (f64, usize)> = BTreeMap::new();
    for (k, y) in keys.iter().zip(ys) {
        let e = acc.entry(k.clone()).or_default();
        e.0 += y;
        e.1 += 1;
    }
    acc.into_iter().map(|(k, (s, n))| (k, (s / n as f64, n))).collect()
}

// ---- random tables ----

pub struct RandomTable {
    pub xs: Vec<Option<f64>>,
    pub ys: Vec<Option<f64>>,
    pub gs: Vec<Option<String>>,
}

impl RandomTable {
    pub fn generate<R: rand::Rng>(rng: &mut R, max_rows: usize) -> Self {
        let rows = rng.random_range(2..=max_rows);
        let spread = [1.0, 10.0, 1000.0][rng.random_range(0..3)];
        let integral = rng.random_bool(0.5);
        let null_rate = [0.0, 0.1][rng.random_range(0..2)];
        let num = |rng: &mut R| {
            if rng.random_bool(null_rate) {
                None
            } else if integral {
                Some(rng.random_range(0..20) as f64 * spread / 10.0)
            } else {
                Some(rng.random_range(0.01..1.0) * spread)
            }
        };
        let mut xs: Vec<_> = (0..rows).map(|_| num(rng)).collect();
        let mut ys: Vec<_> = (0..rows).map(|_| num(rng)).collect();
        let mut gs: Vec<_> = (0..rows)
            .map(|_| (!rng.random_bool(null_rate)).then(|| ["a", "b", "c", "d"][rng.random_range(0..4)].to_string()))
            .collect();
        // A complete first row keeps every column's inferred type stable.
        xs[0] = xs[0].or(Some(spread / 2.0));
        ys[0] = ys[0].or(Some(spread / 3.0));
        gs[0] = gs[0].take().or(Some("a".to_string()));
        RandomTable { xs, ys, gs }
    }

    pub fn csv(&self) -> String {
        let cell = |v: &Option<f64>| v.map(|v| format!("{v:?}")).unwrap_or_default();
        let mut out = String::from("x,y,g\n");
        for i in 0..self.xs.len() {
            out += &format!(
                "{},{},{}\n",
                cell(&self.xs[i]),
                cell(&self.ys[i]),
                self.gs[i].clone().unwrap_or_default()
            );
        }
        out
    }

    pub fn load(&self) -> Database {
        let db = Database::open_in_memory().unwrap();
        db.load_csv(self.csv().as_bytes(), "t", ReplacePolicy::Replace).unwrap();
        db
    }

    /// Rows where every listed column is present.
    pub fn complete(&self, need_x: bool, need_y: bool, need_g: bool) -> Vec<usize> {
        (0..self.xs.len())
            .filter(|&i| {
                (!need_x || self.xs[i].is_some()) && (!need_y || self.ys[i].is_some()) && (!need_g || self.gs[i].is_some())
            })
            .collect()
    }
}

// ---- oracle checks over a random table ----

pub const MEAN_TOL: f64 = 1e-12;
pub const OLS_TOL: f64 = 1e-9;
pub const EDGE_TOL: f64 = 1e-9;

fn execute_str(db: &Database, sgl: &str) -> Result<ExecutionResult, Vec<Diagnostic>> {
    run(db, sgl, 0).map(|o| o.result)
}

fn rect_heights(result: &ExecutionResult) -> Vec<(f64, f64)> {
    marks(result)
        .into_iter()
        .filter_map(|m| match *m {
            Mark::Rect { x, y0, y1, .. } => Some((x, y1 - y0)),
            _ => None,
        })
        .collect()
}

/// Histogram counts against the brute-force bin membership, optionally
/// after log10 scaling.
pub fn check_histogram(t: &RandomTable, log: bool) -> Result<(), String> {
    let db = t.load();
    let scale = if log { " scale by log(x)" } else { "" };
    let sgl = format!("visualize bin(x) as x, count(*) as y from t group by bin(x) using bars{scale};");
    let values: Vec<f64> = t
        .xs
        .iter()
        .flatten()
        .filter(|v| !log || **v > 0.0)
        .map(|v| if log { v.log10() } else { *v })
        .collect();
    let result = match execute_str(&db, &sgl) {
        Ok(r) => r,
        Err(d) if values.is_empty() && d[0].code == Code::EmptyInput => return Ok(()),
        Err(d) => return Err(format!("{sgl}: {d:?}")),
    };
    let edges = &result.bins[0][&Aesthetic::X].edges;
    let distinct = values.iter().any(|v| *v != values[0]);
    if distinct {
        let expected = expected_edges(&values, EngineConfig::default().bin_count);
        if edges.len() != expected.len() || edges.iter().zip(&expected).any(|(a, b)| !close(*a, *b, EDGE_TOL)) {
            return Err(format!("edges {edges:?} != {expected:?}"));
        }
    }
    let counts = histogram(&values, edges);
    let mut want: Vec<(usize, f64)> = counts
        .iter()
        .enumerate()
        .filter(|(_, c)| **c > 0)
        .map(|(i, c)| (i, *c as f64))
        .collect();
    let mut got: Vec<(usize, f64)> = rect_heights(&result)
        .into_iter()
        .map(|(x, h)| {
            let i = (0..edges.len() - 1)
                .min_by(|&a, &b| {
                    let da = (x - (edges[a] + edges[a + 1]) / 2.0).abs();
                    let db = (x - (edges[b] + edges[b + 1]) / 2.0).abs();
                    da.total_cmp(&db)
                })
                .unwrap();
            (i, h)
        })
        .collect();
    want.sort_by_key(|w| w.0);
    got.sort_by_key(|g| g.0);
    if got != want {
        return Err(format!("{sgl}: bars {got:?}, oracle {want:?}"));
    }
    Ok(())
}

/// Grouped mean and count against row iteration.
pub fn check_grouped(t: &RandomTable) -> Result<(), String> {
    let db = t.load();
    // Categories come from every row with a key; mean skips null arguments.
    let rows = t.complete(false, false, true);
    let categories: BTreeSet<&str> = rows.iter().map(|&i| t.gs[i].as_deref().unwrap()).collect();
    for (func, need_y) in [("mean(y)", true), ("count(*)", false)] {
        let sgl = format!("visualize g as x, {func} as y from t group by g using points;");
        let used: Vec<usize> = rows.iter().copied().filter(|&i| !need_y || t.ys[i].is_some()).collect();
        let keys: Vec<String> = used.iter().map(|&i| t.gs[i].clone().unwrap()).collect();
        let ys: Vec<f64> = used.iter().map(|&i| t.ys[i].unwrap_or(0.0)).collect();
        let oracle = grouped(&keys, &ys);
        let result = execute_str(&db, &sgl).map_err(|d| format!("{sgl}: {d:?}"))?;
        let points: Vec<(f64, f64)> = marks(&result)
            .into_iter()
            .filter_map(|m| match *m {
                Mark::Point { x, y, .. } => Some((x, y)),
                _ => None,
            })
            .collect();
        if points.len() != oracle.len() {
            return Err(format!("{sgl}: {} points for {} groups", points.len(), oracle.len()));
        }
        for (i, key) in categories.iter().enumerate() {
            let point = points.iter().find(|p| p.0 == i as f64);
            let (point, (mean, count)) = match (point, oracle.get(*key)) {
                (None, None) => continue,
                (Some(p), Some(o)) => (p, o),
                (p, _) => return Err(format!("{sgl}: group {key} point {p:?} disagrees with oracle")),
            };
            let y = point.1;
            let ok = if need_y { close(y, *mean, MEAN_TOL) } else { y == *count as f64 };
            if !ok {
                return Err(format!("{sgl}: group {key} got {y}, oracle mean {mean} count {count}"));
            }
        }
    }
    Ok(())
}

/// Regression segment against closed-form least squares.
pub fn check_regression(t: &RandomTable) -> Result<(), String> {
    let db = t.load();
    let sgl = "visualize x as x, y as y from t using regression line;";
    let rows = t.complete(true, true, false);
    let xs: Vec<f64> = rows.iter().map(|&i| t.xs[i].unwrap()).collect();
    let ys: Vec<f64> = rows.iter().map(|&i| t.ys[i].unwrap()).collect();
    let distinct = xs.iter().any(|x| *x != xs[0]);
    let result = match execute_str(&db, sgl) {
        Err(d) if !distinct && d[0].code == Code::RegressionUnderdetermined => return Ok(()),
        Err(d) => return Err(format!("{d:?}")),
        Ok(_) if !distinct => return Err("expected an underdetermined fit".into()),
        Ok(r) => r,
    };
    let segs: Vec<(f64, f64, f64, f64)> = marks(&result)
        .into_iter()
        .filter_map(|m| match *m {
            Mark::Segment { x0, y0, x1, y1, .. } => Some((x0, y0, x1, y1)),
            _ => None,
        })
        .collect();
    let [(x0, y0, x1, y1)] = segs[..] else {
        return Err(format!("expected one segment, got {segs:?}"));
    };
    let (slope, intercept) = ols(&xs, &ys);
    let lo = xs.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let fitted_slope = (y1 - y0) / (x1 - x0);
    let fitted_intercept = y0 - fitted_slope * x0;
    if x0 != lo || x1 != hi || !close(fitted_slope, slope, OLS_TOL) || !close(fitted_intercept, intercept, OLS_TOL) {
        return Err(format!(
            "segment ({x0}, {y0})-({x1}, {y1}) gives {fitted_slope}x + {fitted_intercept}; oracle {slope}x + {intercept}"
        ));
    }
    Ok(())
}
