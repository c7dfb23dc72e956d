#![no_main]

use irk_cli::parse::{parse_family, parse_gamma_mode, parse_problem};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(s) = std::str::from_utf8(data) else { return };
    if let Ok(f) = parse_family(s) {
        assert_eq!(parse_family(f.name()).unwrap(), f);
    }
    if let Ok(p) = parse_problem(s) {
        assert_eq!(parse_problem(p.name()).unwrap(), p);
    }
    if let Ok(g) = parse_gamma_mode(s) {
        assert_eq!(parse_gamma_mode(g.name()).unwrap(), g);
    }
});
