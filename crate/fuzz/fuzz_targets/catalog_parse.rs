#![no_main]

use std::path::Path;

use jsgate_core::catalog::Vocabulary;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    let Ok(vocab) = Vocabulary::parse(text, Path::new("fuzz")) else {
        return;
    };
    let again = Vocabulary::parse(&vocab.to_catalog_text(), Path::new("fuzz"))
        .expect("written catalog parses");
    assert_eq!(again.names(), vocab.names());
    assert_eq!(again.version(), vocab.version());
});
