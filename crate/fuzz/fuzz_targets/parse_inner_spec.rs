#![no_main]

use irk_cli::parse::parse_inner_spec;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(s) = std::str::from_utf8(data) else { return };
    if let Ok(kind) = parse_inner_spec(s) {
        // the canonical spelling parses back to the same value
        assert_eq!(parse_inner_spec(&kind.to_string()).unwrap(), kind);
    }
});
