#![no_main]

use jsgate_core::store::{decide_criticality, Criticality, Policy};
use jsgate_core::Label;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    let Ok(policy) = Policy::parse(text) else {
        return;
    };
    assert_eq!(
        Policy::parse(&policy.to_json()).expect("written policy parses"),
        policy
    );
    for page in policy.per_page_overrides.keys() {
        assert_eq!(
            decide_criticality(Label::Unassigned, &policy, Some(page)),
            Criticality::Critical
        );
    }
});
