use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::RenderError;
use crate::world::{Agent, AgentKind, Semantic};

/// Everything that gets an icon: the eight static map layers and the nine
/// agent concepts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Sem {
    Static(Semantic),
    Agent(AgentSem),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AgentSem {
    Pedestrian,
    Car,
    Ambulance,
    Bus,
    Police,
    Tiro,
    Reckless,
    Old,
    Young,
}

impl AgentSem {
    pub const ALL: [AgentSem; 9] = [
        AgentSem::Pedestrian,
        AgentSem::Car,
        AgentSem::Ambulance,
        AgentSem::Bus,
        AgentSem::Police,
        AgentSem::Tiro,
        AgentSem::Reckless,
        AgentSem::Old,
        AgentSem::Young,
    ];

    pub fn name(self) -> &'static str {
        match self {
            AgentSem::Pedestrian => "pedestrian",
            AgentSem::Car => "car",
            AgentSem::Ambulance => "ambulance",
            AgentSem::Bus => "bus",
            AgentSem::Police => "police",
            AgentSem::Tiro => "tiro",
            AgentSem::Reckless => "reckless",
            AgentSem::Old => "old",
            AgentSem::Young => "young",
        }
    }

    pub fn concept(self) -> &'static str {
        match self {
            AgentSem::Pedestrian => "IsPedestrian",
            AgentSem::Car => "IsCar",
            AgentSem::Ambulance => "IsAmbulance",
            AgentSem::Bus => "IsBus",
            AgentSem::Police => "IsPolice",
            AgentSem::Tiro => "IsTiro",
            AgentSem::Reckless => "IsReckless",
            AgentSem::Old => "IsOld",
            AgentSem::Young => "IsYoung",
        }
    }

    /// The most specific concept an agent carries; that one picks its icon.
    pub fn of(agent: &Agent) -> AgentSem {
        let order: &[AgentSem] = match agent.kind {
            AgentKind::Car => {
                &[AgentSem::Ambulance, AgentSem::Police, AgentSem::Bus, AgentSem::Tiro, AgentSem::Reckless]
            }
            AgentKind::Pedestrian => &[AgentSem::Old, AgentSem::Young],
        };
        order.iter().copied().find(|s| agent.has(s.concept())).unwrap_or(match agent.kind {
            AgentKind::Car => AgentSem::Car,
            AgentKind::Pedestrian => AgentSem::Pedestrian,
        })
    }
}

impl Sem {
    pub fn all() -> impl Iterator<Item = Sem> {
        Semantic::ALL.into_iter().map(Sem::Static).chain(AgentSem::ALL.into_iter().map(Sem::Agent))
    }

    /// Asset subdirectory name.
    pub fn name(self) -> &'static str {
        match self {
            Sem::Static(s) => s.name(),
            Sem::Agent(a) => a.name(),
        }
    }

    /// Position in [`Sem::all`].
    pub fn index(self) -> usize {
        match self {
            Sem::Static(s) => s as usize,
            Sem::Agent(a) => Semantic::ALL.len() + a as usize,
        }
    }
}

impl fmt::Display for Sem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Square RGBA tile.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Icon {
    pub size: u32,
    pub rgba: Vec<u8>,
}

impl Icon {
    pub fn pixel(&self, x: u32, y: u32) -> [u8; 4] {
        let i = ((y * self.size + x) * 4) as usize;
        [self.rgba[i], self.rgba[i + 1], self.rgba[i + 2], self.rgba[i + 3]]
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AssetLibrary {
    pub tile: u32,
    icons: BTreeMap<Sem, Vec<Icon>>,
}

pub const PROCEDURAL_VARIANTS: u32 = 4;

impl AssetLibrary {
    /// Placeholder icons drawn from code, `PROCEDURAL_VARIANTS` per semantic.
    pub fn procedural(tile: u32) -> Self {
        let tile = tile.max(4);
        let icons = Sem::all().map(|s| (s, (0..PROCEDURAL_VARIANTS).map(|k| draw(s, k, tile)).collect())).collect();
        AssetLibrary { tile, icons }
    }

    /// Reads `dir/<semantic>/*.png` in file-name order. Semantics without a
    /// directory keep the icons of `base`; with no base they are an error.
    pub fn from_dir(dir: &Path, base: Option<&AssetLibrary>) -> Result<Self, RenderError> {
        let mut icons = BTreeMap::new();
        let mut size = base.map(|b| b.tile);
        for sem in Sem::all() {
            let sub = dir.join(sem.name());
            let mut files: Vec<_> = match std::fs::read_dir(&sub) {
                Ok(rd) => rd
                    .filter_map(|e| e.ok().map(|e| e.path()))
                    .filter(|p| p.extension().is_some_and(|e| e.eq_ignore_ascii_case("png")))
                    .collect(),
                Err(_) => Vec::new(),
            };
            files.sort();
            if files.is_empty() {
                let fallback = base.and_then(|b| b.icons.get(&sem)).ok_or(RenderError::MissingAsset(sem))?;
                icons.insert(sem, fallback.clone());
                continue;
            }
            let mut set = Vec::with_capacity(files.len());
            for f in files {
                let img = image::open(&f).map_err(|e| RenderError::Image(format!("{}: {e}", f.display())))?.to_rgba8();
                let (w, h) = img.dimensions();
                let want = *size.get_or_insert(w);
                if w != h || w != want {
                    return Err(RenderError::IconSize { path: f, width: w, height: h, tile: want });
                }
                set.push(Icon { size: w, rgba: img.into_raw() });
            }
            icons.insert(sem, set);
        }
        let tile = size.ok_or(RenderError::MissingAsset(Sem::Static(Semantic::WalkingStreet)))?;
        Ok(AssetLibrary { tile, icons })
    }

    pub fn variants(&self, sem: Sem) -> usize {
        self.icons.get(&sem).map_or(0, Vec::len)
    }

    pub fn icon(&self, sem: Sem, k: usize) -> Option<&Icon> {
        self.icons.get(&sem).and_then(|v| v.get(k))
    }

    /// Every semantic has at least one icon of the library's tile size.
    pub fn check(&self) -> Result<(), RenderError> {
        for sem in Sem::all() {
            let set = self.icons.get(&sem).filter(|v| !v.is_empty()).ok_or(RenderError::MissingAsset(sem))?;
            if set.iter().any(|i| i.size != self.tile || i.rgba.len() != (i.size * i.size * 4) as usize) {
                return Err(RenderError::Image(format!("icon set `{sem}` has the wrong size")));
            }
        }
        Ok(())
    }
}

/// SplitMix64 finalizer.
pub fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn base_color(sem: Sem) -> [u8; 3] {
    match sem {
        Sem::Static(Semantic::WalkingStreet) => [196, 186, 160],
        Sem::Static(Semantic::TrafficStreet) => [88, 88, 92],
        Sem::Static(Semantic::Crossing) => [120, 120, 124],
        Sem::Static(Semantic::House) => [176, 84, 64],
        Sem::Static(Semantic::Office) => [84, 120, 172],
        Sem::Static(Semantic::Garage) => [130, 130, 110],
        Sem::Static(Semantic::Store) => [212, 164, 60],
        Sem::Static(Semantic::GasStation) => [60, 150, 96],
        Sem::Agent(AgentSem::Pedestrian) => [40, 120, 220],
        Sem::Agent(AgentSem::Car) => [220, 60, 50],
        Sem::Agent(AgentSem::Ambulance) => [245, 245, 245],
        Sem::Agent(AgentSem::Bus) => [250, 200, 30],
        Sem::Agent(AgentSem::Police) => [30, 40, 140],
        Sem::Agent(AgentSem::Tiro) => [120, 200, 80],
        Sem::Agent(AgentSem::Reckless) => [230, 110, 20],
        Sem::Agent(AgentSem::Old) => [150, 90, 200],
        Sem::Agent(AgentSem::Young) => [60, 210, 210],
    }
}

fn shade(c: [u8; 3], d: i32) -> [u8; 3] {
    c.map(|v| (v as i32 + d).clamp(0, 255) as u8)
}

fn draw(sem: Sem, k: u32, n: u32) -> Icon {
    let base = shade(base_color(sem), k as i32 * 9 - 13);
    let mut rgba = vec![0u8; (n * n * 4) as usize];
    let seed = mix(((sem.index() as u64) << 8) | k as u64);
    let c = (n as f32 - 1.0) / 2.0;
    for y in 0..n {
        for x in 0..n {
            let jitter = (mix(seed ^ ((y as u64) << 16 | x as u64)) % 11) as i32 - 5;
            let edge = x == 0 || y == 0 || x == n - 1 || y == n - 1;
            let px: Option<[u8; 3]> = match sem {
                Sem::Static(Semantic::Crossing) => {
                    let stripe = ((x + k) / (n / 8).max(1)).is_multiple_of(2);
                    Some(if stripe { [232, 232, 232] } else { base })
                }
                Sem::Static(Semantic::TrafficStreet) => {
                    let dash = (x as f32 - c).abs() < 1.0 && (y / (n / 4).max(1)).is_multiple_of(2);
                    Some(if dash { [230, 210, 80] } else { shade(base, jitter) })
                }
                Sem::Static(Semantic::WalkingStreet) => Some(shade(base, jitter)),
                Sem::Static(_) => {
                    let window = x % (n / 4).max(2) == 1 && y % (n / 4).max(2) == 1 && !edge;
                    Some(if edge {
                        shade(base, -50)
                    } else if window {
                        [250, 240, 190]
                    } else {
                        shade(base, jitter)
                    })
                }
                Sem::Agent(a) => {
                    let (dx, dy) = (x as f32 - c, y as f32 - c);
                    let inside = match a {
                        AgentSem::Pedestrian | AgentSem::Old | AgentSem::Young => {
                            (dx * dx + dy * dy).sqrt() <= n as f32 * (0.30 + 0.02 * k as f32)
                        }
                        _ => dx.abs() <= n as f32 * 0.42 && dy.abs() <= n as f32 * (0.30 + 0.03 * k as f32),
                    };
                    let roof = dx.abs() <= n as f32 * 0.15 && dy.abs() <= n as f32 * 0.15;
                    inside.then(|| if roof { shade(base, -40) } else { base })
                }
            };
            let i = ((y * n + x) * 4) as usize;
            if let Some(p) = px {
                rgba[i..i + 3].copy_from_slice(&p);
                rgba[i + 3] = 255;
            }
        }
    }
    Icon { size: n, rgba }
}
