use std::path::{Path, PathBuf};
use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::features::features;
use super::nl::Scene;
use super::rosters::{random_roster, RosterSource};
use super::VapError;
use crate::grounding::{Grounder, GroundingVector, Layout};
use crate::mode::Mode;
use crate::presets::{self, Split};
use crate::render::{render_frame, write_image, AssetLibrary, ImageFormat};
use crate::rules::{parse_rules, render_rules};
use crate::seeding::stream;
use crate::sim::{SimConfig, Simulator};
use crate::solver::RuleProgram;
use crate::spf::pool;
use crate::world::Fov;

pub const DATASET_VERSION: u32 = 1;

#[derive(Debug, Clone)]
pub struct ExportConfig {
    pub mode: Mode,
    pub roster: RosterSource,
    pub cities: usize,
    pub steps: u64,
    pub burn_in: u64,
    pub seed: u64,
    /// Pixels per cell.
    pub tile: u32,
    pub images: Option<ImageFormat>,
    /// Icons for `images`; procedural placeholders when absent.
    pub assets: Option<Arc<AssetLibrary>>,
    pub jobs: usize,
}

impl ExportConfig {
    pub fn new(mode: Mode, cities: usize, steps: u64, burn_in: u64, seed: u64) -> Self {
        ExportConfig {
            mode,
            roster: RosterSource::Random,
            cities,
            steps,
            burn_in,
            seed,
            tile: 32,
            images: None,
            assets: None,
            jobs: 1,
        }
    }

    pub fn frames_per_city(&self) -> u64 {
        self.steps.saturating_sub(self.burn_in)
    }
}

/// One agent's window and grounding bits, as the simulator saw them.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FovRecord {
    pub visible: Vec<usize>,
    pub bits: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VapFrame {
    pub id: String,
    pub city: usize,
    pub t: u64,
    /// Seed of the city's simulation.
    pub seed: u64,
    pub image: Option<String>,
    /// `[x, y, w, h, dN, dE, dS, dW, p]` per agent.
    pub features: Vec<[f32; 9]>,
    pub labels: Vec<usize>,
    pub fov: Vec<FovRecord>,
    /// Truth table over all agents, no window limit.
    pub scene: Scene,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Splits {
    pub train: Vec<String>,
    pub val: Vec<String>,
    pub test: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub version: u32,
    pub mode: Mode,
    pub roster: RosterSource,
    pub seed: u64,
    pub cities: usize,
    pub steps: u64,
    pub burn_in: u64,
    pub tile: u32,
    pub slots: usize,
    pub rules: String,
    pub image_format: Option<String>,
    pub frames: usize,
    /// Slow, Normal, Fast, Stop.
    pub class_counts: [usize; 4],
    pub splits: Splits,
    /// Digest over every frame file in city then time order.
    pub frames_hash: String,
}

impl Manifest {
    pub fn hash(&self) -> String {
        hex::encode(Sha256::digest(serde_json::to_vec(self).expect("manifest serializes")))
    }

    pub fn read(dir: &Path) -> Result<Self, VapError> {
        let path = dir.join("manifest.json");
        let text = std::fs::read_to_string(&path).map_err(|source| VapError::Io { path: path.clone(), source })?;
        serde_json::from_str(&text).map_err(|e| VapError::Format(format!("{}: {e}", path.display())))
    }
}

pub fn frame_id(city: usize, t: u64) -> String {
    format!("c{city:04}_t{t:04}")
}

pub fn city_seed(seed: u64, city: usize) -> u64 {
    stream(seed, &format!("vap-city/{city}")).gen()
}

fn city_config(cfg: &ExportConfig, city: usize) -> Result<SimConfig, VapError> {
    let seed = city_seed(cfg.seed, city);
    let mut sim = SimConfig::preset(cfg.mode, Split::Train, seed)?;
    if cfg.roster == RosterSource::Random {
        sim.roster = random_roster(&mut stream(seed, "vap-roster"));
    }
    sim.roster.validate(&sim.registry).map_err(crate::sim::SimError::from)?;
    sim.max_steps = cfg.steps;
    Ok(sim)
}

/// Simulates one city and returns its frames, plus rendered images when
/// the config asks for them.
pub fn generate_city(cfg: &ExportConfig, city: usize) -> Result<Vec<(VapFrame, Option<crate::render::RgbImage>)>, VapError> {
    if cfg.steps <= cfg.burn_in {
        return Err(VapError::Config(format!("steps {} must exceed burn-in {}", cfg.steps, cfg.burn_in)));
    }
    let simcfg = city_config(cfg, city)?;
    let seed = simcfg.seed;
    let sim = Simulator::new(simcfg)?;
    let mut state = sim.cfg.initial_state()?;
    let n = state.agents.len();
    let global = Grounder::for_mode(&sim.cfg.registry, sim.cfg.mode, n, sim.cfg.geometry)?;
    let fallback;
    let assets = match (&cfg.images, &cfg.assets) {
        (None, _) => None,
        (Some(_), Some(a)) => Some(a.as_ref()),
        (Some(_), None) => {
            fallback = AssetLibrary::procedural(cfg.tile);
            Some(&fallback)
        }
    };
    let mut out = Vec::with_capacity(cfg.frames_per_city() as usize);
    for _ in 0..cfg.steps {
        let (next, report) = sim.step(&state, None)?;
        if state.t >= cfg.burn_in {
            let id = frame_id(city, state.t);
            let scene = Scene::from_grounding(&global.ground(&state, &Fov::global(&state))?);
            let image = match assets {
                Some(lib) => Some(render_frame(&state, lib, seed)?.image),
                None => None,
            };
            let frame = VapFrame {
                image: cfg.images.map(|f| format!("images/{id}.{}", f.extension())),
                id,
                city,
                t: state.t,
                seed,
                features: features(&state, cfg.tile).iter().map(|f| f.to_vec()).collect(),
                labels: report.agents.iter().map(|a| a.action.index()).collect(),
                fov: report
                    .agents
                    .iter()
                    .map(|a| FovRecord { visible: a.visible.clone(), bits: a.grounding.to_bits() })
                    .collect(),
                scene,
            };
            out.push((frame, image));
        }
        state = next;
    }
    Ok(out)
}

/// Train, val and test city lists, 70/10/20 after a seeded shuffle.
pub fn split_cities(cities: usize, seed: u64) -> [Vec<usize>; 3] {
    let mut ids: Vec<usize> = (0..cities).collect();
    ids.shuffle(&mut stream(seed, "vap-split"));
    let train = (cities as f64 * 0.7).round() as usize;
    let val = (cities as f64 * 0.1).round() as usize;
    let mut parts = [ids[..train].to_vec(), ids[train..train + val].to_vec(), ids[train + val..].to_vec()];
    for p in &mut parts {
        p.sort_unstable();
    }
    parts
}

struct CitySummary {
    ids: Vec<String>,
    hashes: Vec<[u8; 32]>,
    counts: [usize; 4],
}

fn io(path: &Path) -> impl FnOnce(std::io::Error) -> VapError + '_ {
    move |source| VapError::Io { path: path.to_path_buf(), source }
}

fn write_city(cfg: &ExportConfig, city: usize, out: &Path) -> Result<CitySummary, VapError> {
    let mut s = CitySummary { ids: Vec::new(), hashes: Vec::new(), counts: [0; 4] };
    for (frame, image) in generate_city(cfg, city)? {
        let bytes = serde_json::to_vec(&frame).expect("frame serializes");
        let path = out.join("frames").join(format!("{}.json", frame.id));
        std::fs::write(&path, &bytes).map_err(io(&path))?;
        if let (Some(img), Some(fmt), Some(rel)) = (image, cfg.images, &frame.image) {
            write_image(&img, &out.join(rel), fmt)?;
        }
        for &l in &frame.labels {
            s.counts[l] += 1;
        }
        s.hashes.push(Sha256::digest(&bytes).into());
        s.ids.push(frame.id);
    }
    Ok(s)
}

/// Writes `manifest.json`, `frames/<id>.json`, optional `images/<id>.*`
/// and `splits/{train,val,test}.txt` under `out`.
pub fn export_dataset(cfg: &ExportConfig, out: &Path) -> Result<Manifest, VapError> {
    if cfg.steps <= cfg.burn_in {
        return Err(VapError::Config(format!("steps {} must exceed burn-in {}", cfg.steps, cfg.burn_in)));
    }
    for sub in ["frames", "splits"].into_iter().chain(cfg.images.map(|_| "images")) {
        let p = out.join(sub);
        std::fs::create_dir_all(&p).map_err(io(&p))?;
    }
    let summaries: Vec<CitySummary> = pool(cfg.jobs)
        .install(|| (0..cfg.cities).into_par_iter().map(|c| write_city(cfg, c, out)).collect::<Result<_, _>>())?;
    let mut counts = [0usize; 4];
    let mut digest = Sha256::new();
    for s in &summaries {
        for (k, c) in counts.iter_mut().enumerate() {
            *c += s.counts[k];
        }
        for h in &s.hashes {
            digest.update(h);
        }
    }
    let [train, val, test] = split_cities(cfg.cities, cfg.seed);
    let ids = |cities: &[usize]| -> Vec<String> { cities.iter().flat_map(|&c| summaries[c].ids.clone()).collect() };
    let splits = Splits { train: ids(&train), val: ids(&val), test: ids(&test) };
    for (name, list) in [("train", &splits.train), ("val", &splits.val), ("test", &splits.test)] {
        let p = out.join("splits").join(format!("{name}.txt"));
        let mut text = list.join("\n");
        if !text.is_empty() {
            text.push('\n');
        }
        std::fs::write(&p, text).map_err(io(&p))?;
    }
    let registry = Arc::new(presets::registry()?);
    let manifest = Manifest {
        version: DATASET_VERSION,
        mode: cfg.mode,
        roster: cfg.roster,
        seed: cfg.seed,
        cities: cfg.cities,
        steps: cfg.steps,
        burn_in: cfg.burn_in,
        tile: cfg.tile,
        slots: presets::SLOTS,
        rules: render_rules(&presets::rules(cfg.mode, registry)?),
        image_format: cfg.images.map(|f| f.extension().to_string()),
        frames: summaries.iter().map(|s| s.ids.len()).sum(),
        class_counts: counts,
        splits,
        frames_hash: hex::encode(digest.finalize()),
    };
    let p = out.join("manifest.json");
    std::fs::write(&p, serde_json::to_string_pretty(&manifest).expect("manifest serializes")).map_err(io(&p))?;
    Ok(manifest)
}

pub fn read_frame(path: &Path) -> Result<VapFrame, VapError> {
    let text = std::fs::read_to_string(path).map_err(io(path))?;
    serde_json::from_str(&text).map_err(|e| VapError::Format(format!("{}: {e}", path.display())))
}

pub fn frame_path(dir: &Path, id: &str) -> PathBuf {
    dir.join("frames").join(format!("{id}.json"))
}

/// Recomputes labels from stored window groundings and the manifest's
/// rules, independent of the simulator.
pub struct Rederiver {
    layout: Arc<Layout>,
    program: RuleProgram,
}

impl Rederiver {
    pub fn new(manifest: &Manifest) -> Result<Self, VapError> {
        let registry = Arc::new(presets::registry()?);
        let rules = parse_rules(&manifest.rules, registry.clone())?;
        let layout = Layout::for_mode(&registry, manifest.mode, manifest.slots)?;
        let program = RuleProgram::compile(&rules, &layout)?;
        Ok(Rederiver { layout: Arc::new(layout), program })
    }

    pub fn labels(&self, frame: &VapFrame) -> Result<Vec<usize>, VapError> {
        frame
            .fov
            .iter()
            .map(|f| {
                let g = GroundingVector::from_bits(self.layout.clone(), &f.bits)?;
                Ok(self.program.resolve(&g.values)?.0.action().map_or(usize::MAX, |a| a.index()))
            })
            .collect()
    }

    /// Agents whose stored label differs from the re-derived one.
    pub fn mismatches(&self, frame: &VapFrame) -> Result<usize, VapError> {
        let again = self.labels(frame)?;
        if again.len() != frame.labels.len() {
            return Ok(frame.labels.len().max(again.len()));
        }
        Ok(again.iter().zip(&frame.labels).filter(|(a, b)| a != b).count())
    }
}
