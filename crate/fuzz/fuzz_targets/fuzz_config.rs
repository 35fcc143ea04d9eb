//! Fuzz the experiment-config parser and resolver: arbitrary bytes must
//! never panic, only return structured errors.

#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(raw) = multiscale_harness::config::parse_config(text) {
        let _ = multiscale_harness::config::resolve(&raw);
    }
});
