#![no_main]

use citylogic::PredicateRegistry;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|text: &str| {
    if let Ok(reg) = PredicateRegistry::from_json(text) {
        assert_eq!(PredicateRegistry::from_json(&reg.to_json()).unwrap(), reg);
    }
});
