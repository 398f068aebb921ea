//! Shipped configuration files, embedded at build time.

use std::sync::Arc;

use crate::mode::Mode;
use crate::registry::{PredicateRegistry, RegistryError};
use crate::rules::{parse_rules, RuleError, RuleSet};
use crate::spf::RewardConfig;
use crate::world::{Roster, StaticMap, World, WorldError};

pub const REGISTRY_JSON: &str = include_str!("../../../configs/registry.json");
pub const DEMO_MAP_JSON: &str = include_str!("../../../configs/maps/demo60.json");

/// Slots per observation window.
pub const SLOTS: usize = 5;
pub const FOV_RADIUS: i32 = 8;

pub fn rules_text(mode: Mode) -> &'static str {
    match mode {
        Mode::SpfEasy => include_str!("../../../configs/rules/spf_easy.rules"),
        Mode::SpfMedium => include_str!("../../../configs/rules/spf_medium.rules"),
        Mode::SpfHard => include_str!("../../../configs/rules/spf_hard.rules"),
        Mode::SpfExpert => include_str!("../../../configs/rules/spf_expert.rules"),
        Mode::VapEasy => include_str!("../../../configs/rules/vap_easy.rules"),
        Mode::VapHard => include_str!("../../../configs/rules/vap_hard.rules"),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Split {
    Train,
    Test,
}

/// Roster text. The driving modes ship separate train and test rosters;
/// the prediction modes ship one fixed roster used for both.
pub fn roster_text(mode: Mode, split: Split) -> &'static str {
    match (mode, split) {
        (Mode::SpfEasy, Split::Train) => include_str!("../../../configs/rosters/spf_easy_train.json"),
        (Mode::SpfEasy, Split::Test) => include_str!("../../../configs/rosters/spf_easy_test.json"),
        (Mode::SpfMedium, Split::Train) => include_str!("../../../configs/rosters/spf_medium_train.json"),
        (Mode::SpfMedium, Split::Test) => include_str!("../../../configs/rosters/spf_medium_test.json"),
        (Mode::SpfHard, Split::Train) => include_str!("../../../configs/rosters/spf_hard_train.json"),
        (Mode::SpfHard, Split::Test) => include_str!("../../../configs/rosters/spf_hard_test.json"),
        (Mode::SpfExpert, Split::Train) => include_str!("../../../configs/rosters/spf_expert_train.json"),
        (Mode::SpfExpert, Split::Test) => include_str!("../../../configs/rosters/spf_expert_test.json"),
        (Mode::VapEasy, _) => include_str!("../../../configs/rosters/vap_easy.json"),
        (Mode::VapHard, _) => include_str!("../../../configs/rosters/vap_hard.json"),
    }
}

pub fn registry() -> Result<PredicateRegistry, RegistryError> {
    PredicateRegistry::from_json(REGISTRY_JSON)
}

pub fn rules(mode: Mode, registry: Arc<PredicateRegistry>) -> Result<RuleSet, RuleError> {
    parse_rules(rules_text(mode), registry)
}

pub fn roster(mode: Mode, split: Split) -> Result<Roster, WorldError> {
    Roster::from_json(roster_text(mode, split))
}

pub fn demo_world() -> Result<World, WorldError> {
    Ok(World::new(StaticMap::from_json(DEMO_MAP_JSON)?))
}

/// Everything a mode fixes.
#[derive(Debug, Clone, PartialEq)]
pub struct ModePreset {
    pub mode: Mode,
    pub predicates: Vec<String>,
    pub rule_file: String,
    pub reward: Option<RewardConfig>,
    pub slots: usize,
    pub fov_radius: i32,
}

pub fn preset(mode: Mode, registry: &PredicateRegistry) -> Result<ModePreset, RegistryError> {
    Ok(ModePreset {
        mode,
        predicates: registry.mode_predicates(mode)?.iter().map(|d| d.name.clone()).collect(),
        rule_file: format!("configs/rules/{}.rules", mode.stem()),
        reward: mode.is_spf().then(|| RewardConfig::preset(mode)),
        slots: SLOTS,
        fov_radius: FOV_RADIUS,
    })
}
