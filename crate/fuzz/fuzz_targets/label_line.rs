#![no_main]

use jsgate_core::store::{parse_snapshot, LabelEntry};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    let (entries, _skipped) = parse_snapshot(text);
    for e in entries {
        let back =
            LabelEntry::from_snapshot_line(&e.to_snapshot_line()).expect("written line parses");
        assert_eq!(back, e);
    }
});
