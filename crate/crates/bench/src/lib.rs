//! Shared fixtures for the benchmarks.

use std::fmt::Write;
use std::path::PathBuf;

use sgl_core::{Database, ReplacePolicy};

pub fn fixtures_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../core/fixtures")
}

/// Database holding the full cars and trees tables.
pub fn fixture_db() -> Database {
    let db = Database::open_in_memory().expect("in-memory database");
    for name in ["cars", "trees"] {
        db.load_csv_path(&fixtures_dir().join(format!("{name}.csv")), name, ReplacePolicy::Replace)
            .expect("fixture loads");
    }
    db
}

/// Corpus statements as (file stem, text), sorted by name.
pub fn corpus() -> Vec<(String, String)> {
    let mut entries: Vec<_> = std::fs::read_dir(fixtures_dir().join("corpus"))
        .expect("corpus directory")
        .map(|e| e.expect("corpus entry").path())
        .filter(|p| p.extension().is_some_and(|e| e == "sgl"))
        .map(|p| {
            let name = p.file_stem().unwrap().to_string_lossy().into_owned();
            (name, std::fs::read_to_string(&p).expect("corpus file"))
        })
        .collect();
    entries.sort();
    entries
}

/// Table `samples(x, y, g)` with `n` deterministic rows and five groups.
pub fn synthetic_db(n: usize) -> Database {
    let mut csv = String::from("x,y,g\n");
    let mut state = 0x2545_f491_4f6c_dd1du64;
    for i in 0..n {
        state ^= state << 13;
        state ^= state >> 7;
        state ^= state << 17;
        let noise = (state % 10_000) as f64 / 1000.0;
        writeln!(csv, "{i},{:.3},g{}", i as f64 * 0.5 + noise, i % 5).unwrap();
    }
    let db = Database::open_in_memory().expect("in-memory database");
    db.load_csv(csv.as_bytes(), "samples", ReplacePolicy::Replace)
        .expect("synthetic table loads");
    db
}
