#![no_main]

use irk_cli::parse::parse_config_header;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(s) = std::str::from_utf8(data) else { return };
    if let Ok(argv) = parse_config_header(s) {
        assert!(!argv.is_empty());
    }
});
