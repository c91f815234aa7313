#![no_main]
use libfuzzer_sys::fuzz_target;
use participate::snapshot::Snapshot;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(snapshot) = Snapshot::parse(text) {
            // Accepted snapshots must round-trip exactly.
            let reparsed = Snapshot::parse(&snapshot.to_text()).expect("serialized form parses");
            assert_eq!(snapshot, reparsed);
        }
    }
});
