#![no_main]

use irk_cli::Cli;
use clap::Parser;
use libfuzzer_sys::fuzz_target;

// Argument parsing and config echo only; running the commands is too slow to fuzz.
fuzz_target!(|data: &[u8]| {
    let Ok(s) = std::str::from_utf8(data) else { return };
    let argv = std::iter::once("irk").chain(s.split('\n'));
    if let Ok(cli) = Cli::try_parse_from(argv) {
        let _ = irk_cli::config_pairs(&cli.command);
    }
});
