#![no_main]

use jsgate_net::parse_page_list;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let text = String::from_utf8_lossy(data);
    if let Ok(pages) = parse_page_list(&text) {
        for p in pages {
            assert!(matches!(p.scheme(), "http" | "https"));
        }
    }
});
