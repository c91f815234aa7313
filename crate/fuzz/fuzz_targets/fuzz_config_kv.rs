#![no_main]
use libfuzzer_sys::fuzz_target;
use participate::harness::{ExperimentConfig, ExperimentId};

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        let mut config = ExperimentConfig::new(ExperimentId::IpdNone, "/tmp/fuzz-out");
        if config.apply_config_text(text).is_ok() {
            // An accepted config snapshot must reload cleanly.
            let snapshot = config.snapshot_text();
            let mut reloaded = ExperimentConfig::new(ExperimentId::IpdNone, "/tmp/fuzz-out");
            reloaded.apply_config_text(&snapshot).expect("snapshot reloads");
        }
    }
});
