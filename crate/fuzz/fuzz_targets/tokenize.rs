#![no_main]

use jsgate_core::lexer::{tokenize, tokenize_bytes};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let tokens = tokenize_bytes(data);
    // Valid UTF-8 takes the borrowed path; both must agree.
    if let Ok(s) = std::str::from_utf8(data) {
        let borrowed: Vec<String> = tokenize(s).into_iter().map(|t| t.into_owned()).collect();
        assert_eq!(borrowed, tokens);
    }
    for t in &tokens {
        assert!(!t.is_empty());
    }
});
