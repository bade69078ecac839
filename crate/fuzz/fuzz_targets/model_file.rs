#![no_main]

use jsgate_core::classifier::ModelParameters;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    let Ok(model) = ModelParameters::from_json(text) else {
        return;
    };
    let json = model.to_json().expect("loaded model serializes");
    let again = ModelParameters::from_json(&json).expect("written model loads");
    assert_eq!(again.fingerprint(), model.fingerprint());
});
