#![no_main]
use libfuzzer_sys::fuzz_target;
use participate::cleanup::Grid;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(grid) = Grid::parse(text) {
            // Accepted layouts round-trip through dump and parse.
            let dumped = grid.to_text();
            let reparsed = Grid::parse(&dumped).expect("dumped grid parses");
            assert_eq!(reparsed.to_text(), dumped);
        }
    }
});
