#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(grid) = rydsim::runner::parse_grid(text) {
            assert!(grid.len() <= rydsim::runner::MAX_GRID_POINTS);
            assert!(grid.iter().all(|v| v.is_finite()));
        }
    }
});
