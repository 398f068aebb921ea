#![no_main]

use std::sync::{Arc, OnceLock};

use citylogic::rules::{parse_rules, render_rules};
use citylogic::{presets, PredicateRegistry};
use libfuzzer_sys::fuzz_target;

fn registry() -> Arc<PredicateRegistry> {
    static REG: OnceLock<Arc<PredicateRegistry>> = OnceLock::new();
    REG.get_or_init(|| Arc::new(presets::registry().unwrap())).clone()
}

fuzz_target!(|text: &str| {
    if let Ok(rules) = parse_rules(text, registry()) {
        // Accepted programs never have a background head, and print back to themselves.
        assert!(rules.clauses.iter().all(|c| citylogic::rules::Action::from_name(&c.head.predicate).is_some()));
        assert_eq!(parse_rules(&render_rules(&rules), registry()).unwrap(), rules);
    }
});
