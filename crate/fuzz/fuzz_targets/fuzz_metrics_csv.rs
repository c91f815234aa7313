#![no_main]
use libfuzzer_sys::fuzz_target;
use participate::harness::metrics::parse_metrics_csv;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(rows) = parse_metrics_csv(text) {
            for row in &rows {
                assert!(row.value.is_finite());
                assert!(!row.agent.is_empty() && !row.metric.is_empty());
            }
        }
    }
});
