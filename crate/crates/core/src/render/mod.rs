//! Tile compositor: one icon per semantic layer per cell, agents on top.

mod assets;
mod ppm;

use std::path::{Path, PathBuf};
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use assets::{mix, AgentSem, AssetLibrary, Icon, Sem, PROCEDURAL_VARIANTS};
pub use ppm::{decode_ppm, encode_ppm};

use crate::world::{AgentKind, CityState, Semantic};

#[derive(Debug, Error)]
pub enum RenderError {
    #[error("no icon for semantic `{0}`")]
    MissingAsset(Sem),
    #[error("{}: icon is {width}x{height}, tiles are {tile}x{tile}", path.display())]
    IconSize { path: PathBuf, width: u32, height: u32, tile: u32 },
    #[error("image: {0}")]
    Image(String),
    #[error("ppm: {0}")]
    Ppm(String),
    #[error("unsupported image format `{0}`")]
    Format(String),
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RgbImage {
    pub width: u32,
    pub height: u32,
    pub pixels: Vec<u8>,
}

impl RgbImage {
    pub fn new(width: u32, height: u32) -> Self {
        RgbImage { width, height, pixels: vec![0; (width * height * 3) as usize] }
    }

    pub fn pixel(&self, x: u32, y: u32) -> [u8; 3] {
        let i = ((y * self.width + x) * 3) as usize;
        [self.pixels[i], self.pixels[i + 1], self.pixels[i + 2]]
    }
}

/// Icon drawn at a cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct IconRef {
    pub sem: Sem,
    pub k: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Frame {
    pub image: RgbImage,
    pub tile: u32,
    /// Per cell, row-major, in drawing order.
    pub provenance: Vec<Vec<IconRef>>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct RenderOptions {
    /// Tint the remaining planned path of every agent.
    pub paths: bool,
}

const GROUND: [u8; 3] = [92, 140, 70];

/// Seeded icon pick for `key` (a cell index, or an agent id for agents).
pub fn pick(seed: u64, key: u64, sem: Sem, variants: usize) -> usize {
    (mix(seed ^ mix(key ^ mix(sem.index() as u64 + 1))) % variants.max(1) as u64) as usize
}

pub fn render_frame(state: &CityState, assets: &AssetLibrary, seed: u64) -> Result<Frame, RenderError> {
    render_frame_with(state, assets, seed, RenderOptions::default())
}

/// Draw order: walking streets, traffic streets, crossings, buildings,
/// path overlay, cars, pedestrians.
pub fn render_frame_with(
    state: &CityState,
    assets: &AssetLibrary,
    seed: u64,
    opts: RenderOptions,
) -> Result<Frame, RenderError> {
    assets.check()?;
    let map = &state.world.map;
    let tile = assets.tile;
    let (w, h) = (map.width() as u32, map.height() as u32);
    let mut image = RgbImage::new(w * tile, h * tile);
    for px in image.pixels.chunks_exact_mut(3) {
        px.copy_from_slice(&GROUND);
    }
    let mut provenance = vec![Vec::new(); map.width() * map.height()];
    for s in Semantic::ALL {
        let sem = Sem::Static(s);
        for cell in map.cells().filter(|&c| map.has(c, s)) {
            let idx = map.idx(cell);
            let k = pick(seed, idx as u64, sem, assets.variants(sem));
            blit(&mut image, assets.icon(sem, k).ok_or(RenderError::MissingAsset(sem))?, cell.x as u32, cell.y as u32);
            provenance[idx].push(IconRef { sem, k });
        }
    }
    if opts.paths {
        for a in &state.agents {
            let tint = if a.kind == AgentKind::Car { [255, 90, 90] } else { [90, 150, 255] };
            for c in a.path.iter().skip(1) {
                dot(&mut image, tile, c.x as u32, c.y as u32, tint);
            }
        }
    }
    let mut order: Vec<_> = state.agents.iter().collect();
    order.sort_by_key(|a| (a.kind != AgentKind::Car, a.id));
    for a in order {
        let sem = Sem::Agent(AgentSem::of(a));
        let k = pick(seed, a.id as u64, sem, assets.variants(sem));
        blit(&mut image, assets.icon(sem, k).ok_or(RenderError::MissingAsset(sem))?, a.pos.x as u32, a.pos.y as u32);
        provenance[map.idx(a.pos)].push(IconRef { sem, k });
    }
    Ok(Frame { image, tile, provenance })
}

pub fn render_frames(states: &[CityState], assets: &AssetLibrary, seed: u64) -> Result<Vec<Frame>, RenderError> {
    states.par_iter().map(|s| render_frame(s, assets, seed)).collect()
}

fn blit(img: &mut RgbImage, icon: &Icon, cx: u32, cy: u32) {
    let n = icon.size;
    for y in 0..n {
        for x in 0..n {
            let [r, g, b, a] = icon.pixel(x, y);
            if a == 0 {
                continue;
            }
            let i = (((cy * n + y) * img.width + cx * n + x) * 3) as usize;
            let dst = &mut img.pixels[i..i + 3];
            for (d, s) in dst.iter_mut().zip([r, g, b]) {
                *d = ((s as u32 * a as u32 + *d as u32 * (255 - a as u32)) / 255) as u8;
            }
        }
    }
}

fn dot(img: &mut RgbImage, tile: u32, cx: u32, cy: u32, color: [u8; 3]) {
    let r = (tile / 8).max(1);
    let (x0, y0) = (cx * tile + tile / 2 - r, cy * tile + tile / 2 - r);
    for y in y0..y0 + 2 * r {
        for x in x0..x0 + 2 * r {
            let i = ((y * img.width + x) * 3) as usize;
            img.pixels[i..i + 3].copy_from_slice(&color);
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ImageFormat {
    Ppm,
    Png,
}

impl ImageFormat {
    pub fn extension(self) -> &'static str {
        match self {
            ImageFormat::Ppm => "ppm",
            ImageFormat::Png => "png",
        }
    }
}

impl FromStr for ImageFormat {
    type Err = RenderError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "ppm" => Ok(ImageFormat::Ppm),
            "png" => Ok(ImageFormat::Png),
            _ => Err(RenderError::Format(s.to_string())),
        }
    }
}

pub fn encode_png(img: &RgbImage) -> Result<Vec<u8>, RenderError> {
    let buf = image::RgbImage::from_raw(img.width, img.height, img.pixels.clone())
        .ok_or_else(|| RenderError::Image("pixel buffer size mismatch".into()))?;
    let mut out = std::io::Cursor::new(Vec::new());
    buf.write_to(&mut out, image::ImageFormat::Png).map_err(|e| RenderError::Image(e.to_string()))?;
    Ok(out.into_inner())
}

pub fn write_image(img: &RgbImage, path: &Path, format: ImageFormat) -> Result<(), RenderError> {
    let bytes = match format {
        ImageFormat::Ppm => encode_ppm(img),
        ImageFormat::Png => encode_png(img)?,
    };
    std::fs::write(path, bytes).map_err(|source| RenderError::Io { path: path.to_path_buf(), source })
}

pub fn read_ppm(path: &Path) -> Result<RgbImage, RenderError> {
    let bytes = std::fs::read(path).map_err(|source| RenderError::Io { path: path.to_path_buf(), source })?;
    decode_ppm(&bytes)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn formats_parse() {
        assert_eq!("PNG".parse::<ImageFormat>().unwrap(), ImageFormat::Png);
        assert!(matches!("gif".parse::<ImageFormat>(), Err(RenderError::Format(_))));
    }

    #[test]
    fn procedural_library_is_complete() {
        let lib = AssetLibrary::procedural(32);
        lib.check().unwrap();
        assert_eq!(Sem::all().count(), 17);
        assert_eq!(lib.variants(Sem::Agent(AgentSem::Bus)), PROCEDURAL_VARIANTS as usize);
    }
}
