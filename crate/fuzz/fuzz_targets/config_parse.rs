#![no_main]

use libfuzzer_sys::fuzz_target;
use lipbandit::config::ExperimentConfig;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(cfg) = ExperimentConfig::parse(text) {
        let again = ExperimentConfig::parse(&cfg.to_text()).expect("canonical text parses");
        assert_eq!(again.to_text(), cfg.to_text());
    }
});
