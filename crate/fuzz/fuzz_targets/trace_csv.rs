#![no_main]

use libfuzzer_sys::fuzz_target;
use lipbandit::harness::trace_io::{parse_summary, parse_trace_csv};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(rows) = parse_trace_csv(text) {
        assert!(rows.iter().enumerate().all(|(i, r)| r.t == i as u64 + 1));
    }
    let _ = parse_summary(text);
});
