#![no_main]

use citylogic::render::{decode_ppm, encode_ppm};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|bytes: &[u8]| {
    if let Ok(img) = decode_ppm(bytes) {
        assert_eq!(img.pixels.len(), img.width as usize * img.height as usize * 3);
        assert_eq!(decode_ppm(&encode_ppm(&img)).unwrap(), img);
    }
});
