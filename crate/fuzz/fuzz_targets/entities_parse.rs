#![no_main]

use jsgate_core::entities::EntityRepository;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    let Ok(repo) = EntityRepository::parse(text) else {
        return;
    };
    // Every configured suffix resolves to an entity (maybe an earlier
    // claimant), and so does any subdomain of it.
    for e in repo.entities() {
        for d in &e.domains {
            assert!(repo.match_host(d).is_some(), "{d}");
            assert!(repo.match_host(&format!("sub.{d}")).is_some(), "sub.{d}");
        }
    }
});
