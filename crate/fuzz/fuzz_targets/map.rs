#![no_main]

use citylogic::world::StaticMap;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|text: &str| {
    if let Ok(map) = StaticMap::from_json(text) {
        assert_eq!(StaticMap::from_json(&map.to_json()).unwrap(), map);
    }
});
