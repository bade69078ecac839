#![no_main]

use jsgate_core::features::{parse_feature_row, write_feature_rows};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    let Ok(row) = parse_feature_row(text) else {
        return;
    };
    let mut out = Vec::new();
    write_feature_rows(&mut out, std::slice::from_ref(&row)).unwrap();
    let line = String::from_utf8(out).unwrap();
    assert_eq!(
        parse_feature_row(line.trim_end()).expect("written row parses"),
        row
    );
});
