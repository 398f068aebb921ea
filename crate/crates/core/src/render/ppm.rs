use super::{RenderError, RgbImage};

/// Binary PPM with the shortest header: `P6 <w> <h> 255\n`.
pub fn encode_ppm(img: &RgbImage) -> Vec<u8> {
    let mut out = format!("P6 {} {} 255\n", img.width, img.height).into_bytes();
    out.extend_from_slice(&img.pixels);
    out
}

/// Reads a binary PPM with maxval 255. Header fields may be separated by
/// any whitespace and `#` comments.
pub fn decode_ppm(bytes: &[u8]) -> Result<RgbImage, RenderError> {
    let bad = |m: &str| RenderError::Ppm(m.to_string());
    if bytes.len() < 2 || &bytes[..2] != b"P6" {
        return Err(bad("missing P6 magic"));
    }
    let mut pos = 2;
    let mut fields = [0u32; 3];
    for f in &mut fields {
        loop {
            match bytes.get(pos) {
                Some(b) if b.is_ascii_whitespace() => pos += 1,
                Some(b'#') => {
                    while bytes.get(pos).is_some_and(|&b| b != b'\n') {
                        pos += 1;
                    }
                }
                Some(_) => break,
                None => return Err(bad("truncated header")),
            }
        }
        let start = pos;
        while bytes.get(pos).is_some_and(u8::is_ascii_digit) {
            pos += 1;
        }
        if start == pos || pos - start > 9 {
            return Err(bad("bad header number"));
        }
        *f = std::str::from_utf8(&bytes[start..pos]).ok().and_then(|s| s.parse().ok()).ok_or_else(|| bad("bad header number"))?;
    }
    let [width, height, maxval] = fields;
    if maxval != 255 {
        return Err(bad("only maxval 255 is supported"));
    }
    if !bytes.get(pos).is_some_and(u8::is_ascii_whitespace) {
        return Err(bad("header must end with one whitespace byte"));
    }
    pos += 1;
    let need = (width as u64) * (height as u64) * 3;
    if (bytes.len() - pos) as u64 != need {
        return Err(bad(&format!("payload is {} bytes, expected {need}", bytes.len() - pos)));
    }
    Ok(RgbImage { width, height, pixels: bytes[pos..].to_vec() })
}
