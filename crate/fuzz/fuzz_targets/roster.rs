#![no_main]

use citylogic::world::Roster;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|text: &str| {
    let _ = Roster::from_json(text);
});
