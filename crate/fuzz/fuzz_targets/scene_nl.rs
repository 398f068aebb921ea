#![no_main]

use citylogic::vap::{parse_scene_nl, serialize_scene_nl};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|text: &str| {
    if let Ok((scene, q)) = parse_scene_nl(text) {
        let again = serialize_scene_nl(&scene, q).unwrap();
        assert_eq!(parse_scene_nl(&again).unwrap(), (scene, q));
    }
});
