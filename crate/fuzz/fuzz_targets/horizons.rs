#![no_main]

use libfuzzer_sys::fuzz_target;
use lipbandit::experiment::parse_horizons;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(hs) = parse_horizons(text) {
        assert!(hs.windows(2).all(|w| w[0] < w[1]));
        assert!(hs.iter().all(|&h| h >= 3));
    }
});
