#![no_main]

use citylogic::spf::server::{decode_request, Request};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|line: &str| {
    if let Ok(Request::Step { action }) = decode_request(line) {
        assert!((0..4).contains(&action));
    }
});
