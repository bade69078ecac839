#![no_main]

use jsgate_core::html::{extract_script_urls, scan};
use libfuzzer_sys::fuzz_target;
use url::Url;

fuzz_target!(|data: &[u8]| {
    let html = String::from_utf8_lossy(data);
    let _ = scan(&html);
    let base = Url::parse("https://page.example/dir/index.html").unwrap();
    for u in extract_script_urls(&html, &base) {
        assert!(matches!(u.scheme(), "http" | "https"));
    }
});
