#![no_main]

use libfuzzer_sys::fuzz_target;
use tikfar_cli::config::parse_run_config;

fuzz_target!(|text: &str| {
    let _ = parse_run_config(text);
});
