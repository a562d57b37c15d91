//! Replays the checked-in fuzz corpus through the parsers.

use std::fs;
use std::path::Path;

fn seeds(target: &str) -> Vec<String> {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fuzz/corpus").join(target);
    let mut out: Vec<String> = fs::read_dir(&dir)
        .unwrap_or_else(|e| panic!("{}: {e}", dir.display()))
        .map(|entry| fs::read_to_string(entry.unwrap().path()).unwrap())
        .collect();
    out.sort();
    out
}

#[test]
fn config_seeds() {
    let seeds = seeds("config_parser");
    assert!(!seeds.is_empty());
    let ok = seeds.iter().filter(|s| rydsim::runner::parse_config(s).is_ok()).count();
    assert!(ok > 0 && ok < seeds.len());
}

#[test]
fn grid_seeds() {
    let seeds = seeds("grid_parser");
    let parsed: Vec<_> = seeds.iter().map(|s| rydsim::runner::parse_grid(s)).collect();
    assert!(parsed.iter().any(Result::is_ok) && parsed.iter().any(Result::is_err));
}
