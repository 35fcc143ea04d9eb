//! Fuzz the value-trace parser: arbitrary bytes must never panic, and any
//! accepted trace must re-serialize to a bit-identical round trip.

#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(rows) = multiscale::trace::parse_trace(text) {
        let rewritten = multiscale::trace::write_trace(&rows);
        let back = multiscale::trace::parse_trace(&rewritten).expect("round trip must parse");
        assert_eq!(rows, back);
    }
});
