#![no_main]

use irk_cli::parse::{parse_count_list, parse_grid_list, MIN_GRID};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(s) = std::str::from_utf8(data) else { return };
    if let Ok(g) = parse_grid_list(s) {
        assert!(!g.is_empty() && g[0] >= MIN_GRID);
        assert!(g.windows(2).all(|w| w[0] < w[1]));
    }
    if let Ok(c) = parse_count_list(s) {
        assert!(c.iter().all(|&k| k >= 1));
    }
});
