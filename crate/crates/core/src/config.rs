//! Config file sets and the cross-file checks behind `validate`.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::Path;
use std::sync::Arc;

use serde::Serialize;

use crate::grounding::Geometry;
use crate::mode::Mode;
use crate::presets::{self, Split};
use crate::registry::PredicateRegistry;
use crate::rules::{parse_rules, validate_stratification, Action, RuleSet};
use crate::sim::{SimConfig, SimError, PATIENCE};
use crate::world::{CityState, Roster, SpeedTable, StaticMap, World, WorldError};

/// Raw text of every config file one run may touch.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigSet {
    pub registry: String,
    pub map: String,
    pub rules: BTreeMap<Mode, String>,
    pub rosters: BTreeMap<(Mode, Split), String>,
}

fn splits(mode: Mode) -> &'static [Split] {
    if mode.is_spf() {
        &[Split::Train, Split::Test]
    } else {
        &[Split::Train]
    }
}

/// Path of a roster relative to the config root.
pub fn roster_file(mode: Mode, split: Split) -> String {
    match (mode.is_spf(), split) {
        (false, _) => format!("rosters/{}.json", mode.stem()),
        (true, Split::Train) => format!("rosters/{}_train.json", mode.stem()),
        (true, Split::Test) => format!("rosters/{}_test.json", mode.stem()),
    }
}

pub fn rules_file(mode: Mode) -> String {
    format!("rules/{}.rules", mode.stem())
}

pub const REGISTRY_FILE: &str = "registry.json";
pub const MAP_FILE: &str = "maps/demo60.json";

impl ConfigSet {
    /// The files compiled into the library.
    pub fn shipped() -> Self {
        ConfigSet {
            registry: presets::REGISTRY_JSON.to_string(),
            map: presets::DEMO_MAP_JSON.to_string(),
            rules: Mode::ALL.iter().map(|&m| (m, presets::rules_text(m).to_string())).collect(),
            rosters: Mode::ALL
                .iter()
                .flat_map(|&m| splits(m).iter().map(move |&s| ((m, s), presets::roster_text(m, s).to_string())))
                .collect(),
        }
    }

    /// Reads the shipped layout (`registry.json`, `maps/demo60.json`,
    /// `rules/*.rules`, `rosters/*.json`) under `dir`.
    pub fn from_dir(dir: &Path) -> Result<Self, WorldError> {
        let read = |rel: &str| -> Result<String, WorldError> {
            let path = dir.join(rel);
            std::fs::read_to_string(&path).map_err(|source| WorldError::Io { path, source })
        };
        let mut rules = BTreeMap::new();
        let mut rosters = BTreeMap::new();
        for m in Mode::ALL {
            rules.insert(m, read(&rules_file(m))?);
            for &s in splits(m) {
                rosters.insert((m, s), read(&roster_file(m, s))?);
            }
        }
        Ok(ConfigSet { registry: read(REGISTRY_FILE)?, map: read(MAP_FILE)?, rules, rosters })
    }

    fn roster_text(&self, mode: Mode, split: Split) -> Option<&String> {
        let split = if mode.is_spf() { split } else { Split::Train };
        self.rosters.get(&(mode, split))
    }

    pub fn sim_config(&self, mode: Mode, split: Split, seed: u64) -> Result<SimConfig, SimError> {
        let registry = Arc::new(PredicateRegistry::from_json(&self.registry)?);
        let missing = |what: &str| SimError::Config(format!("no {what} for {mode}"));
        let rules = parse_rules(self.rules.get(&mode).ok_or_else(|| missing("rules"))?, registry.clone())?;
        let roster = Roster::from_json(self.roster_text(mode, split).ok_or_else(|| missing("roster"))?)?;
        roster.validate(&registry)?;
        Ok(SimConfig {
            mode,
            registry,
            rules,
            world: Arc::new(World::new(StaticMap::from_json(&self.map)?)),
            roster,
            slots: presets::SLOTS,
            fov_radius: presets::FOV_RADIUS,
            geometry: Geometry::default(),
            speeds: SpeedTable::default(),
            patience: PATIENCE,
            seed,
            max_steps: 1000,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Diagnostic {
    pub file: String,
    pub message: String,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.file, self.message)
    }
}

/// Rule files that must extend another, as (smaller, larger).
pub const MODE_CHAINS: [(Mode, Mode); 3] =
    [(Mode::SpfEasy, Mode::SpfMedium), (Mode::SpfMedium, Mode::SpfHard), (Mode::VapEasy, Mode::VapHard)];

fn cycle_trace(cycle: &[Action]) -> String {
    let mut names: Vec<&str> = cycle.iter().map(|a| a.name()).collect();
    if let Some(first) = names.first().copied() {
        names.push(first);
    }
    names.join(" -> ")
}

/// Every problem found; empty means the set is usable.
pub fn validate(set: &ConfigSet) -> Vec<Diagnostic> {
    let mut out = Vec::new();
    let mut diag = |file: &str, message: String| out.push(Diagnostic { file: file.to_string(), message });

    let registry = match PredicateRegistry::from_json(&set.registry) {
        Ok(r) => Arc::new(r),
        Err(e) => {
            diag(REGISTRY_FILE, e.to_string());
            return out;
        }
    };
    let world = match StaticMap::from_json(&set.map) {
        Ok(m) => {
            let w = World::new(m);
            if !w.roads.is_strongly_connected() {
                diag(MAP_FILE, "road graph is not strongly connected".into());
            }
            Some(Arc::new(w))
        }
        Err(e) => {
            diag(MAP_FILE, e.to_string());
            None
        }
    };

    let mut parsed: BTreeMap<Mode, RuleSet> = BTreeMap::new();
    for (&mode, text) in &set.rules {
        let file = rules_file(mode);
        let rules = match parse_rules(text, registry.clone()) {
            Ok(r) => r,
            Err(e) => {
                diag(&file, e.to_string());
                continue;
            }
        };
        let report = validate_stratification(&rules);
        for c in &report.cycles {
            diag(&file, format!("action dependency cycle: {}", cycle_trace(c)));
        }
        match registry.mode_predicates(mode) {
            Ok(allowed) => {
                let allowed: BTreeSet<&str> = allowed.iter().map(|d| d.name.as_str()).collect();
                for p in rules.predicates() {
                    if Action::from_name(p).is_none() && !allowed.contains(p) {
                        diag(&file, format!("predicate `{p}` is not part of {mode}"));
                    }
                }
            }
            Err(e) => diag(REGISTRY_FILE, e.to_string()),
        }
        parsed.insert(mode, rules);
    }
    for (small, large) in MODE_CHAINS {
        if let (Some(a), Some(b)) = (parsed.get(&small), parsed.get(&large)) {
            if !a.is_subset_of(b) {
                diag(&rules_file(large), format!("does not contain every clause of {small}"));
            }
        }
    }

    let mut rosters: BTreeMap<(Mode, Split), Roster> = BTreeMap::new();
    for (&(mode, split), text) in &set.rosters {
        let file = roster_file(mode, split);
        let roster = match Roster::from_json(text).and_then(|r| r.validate(&registry).map(|_| r)) {
            Ok(r) => r,
            Err(e) => {
                diag(&file, e.to_string());
                continue;
            }
        };
        if let Some(w) = &world {
            if let Err(e) = CityState::new(w.clone(), &roster, &registry, 0) {
                diag(&file, format!("cannot place agents: {e}"));
            }
        }
        rosters.insert((mode, split), roster);
    }
    for mode in Mode::SPF {
        if let (Some(train), Some(test)) = (rosters.get(&(mode, Split::Train)), rosters.get(&(mode, Split::Test))) {
            if test.compositions().is_subset(&train.compositions()) {
                diag(&roster_file(mode, Split::Test), "every concept composition also appears in training".into());
            }
        }
    }
    out
}
