//! The synchronous step loop: every agent observes the same pre-step
//! state, grounds, resolves, and then all agents move at once.

mod log;

use std::collections::BTreeMap;
use std::sync::Arc;

use serde::Serialize;
use sha2::{Digest, Sha256};
use thiserror::Error;

pub use log::{
    replay, replay_states, run_episode, EgoControl, EpisodeLog, LogHeader, Policy, Pose, ReplayReport, RewardContext,
    StepRecord, LOG_VERSION,
};

use crate::grounding::{Geometry, Grounder, GroundingError, GroundingVector};
use crate::mode::Mode;
use crate::presets::{self, Split};
use crate::registry::{PredicateRegistry, RegistryError};
use crate::rules::{render_rules, Action, RuleError, RuleSet};
use crate::solver::{Derivation, RuleProgram, SolveError};
use crate::world::{crop_fov, resolve_moves, Cell, CityState, Roster, SpeedTable, World, WorldError};

/// The externally controlled agent.
pub const EGO: usize = 0;

#[derive(Debug, Error)]
pub enum SimError {
    #[error(transparent)]
    World(#[from] WorldError),
    #[error(transparent)]
    Grounding(#[from] GroundingError),
    #[error(transparent)]
    Solve(#[from] SolveError),
    #[error(transparent)]
    Rules(#[from] RuleError),
    #[error(transparent)]
    Registry(#[from] RegistryError),
    #[error("invalid config: {0}")]
    Config(String),
    #[error("policy failed at t={t}: {msg}")]
    Policy { t: u64, msg: String },
    #[error("config hash mismatch: log has {logged}, config gives {actual}")]
    HashMismatch { logged: String, actual: String },
    #[error("malformed episode log: {0}")]
    Log(String),
}

#[derive(Debug, Clone)]
pub struct SimConfig {
    pub mode: Mode,
    pub registry: Arc<PredicateRegistry>,
    pub rules: RuleSet,
    pub world: Arc<World>,
    pub roster: Roster,
    pub slots: usize,
    pub fov_radius: i32,
    pub geometry: Geometry,
    pub speeds: SpeedTable,
    /// Idle steps after which a non-ego agent picks a new goal (0 = never).
    pub patience: u32,
    pub seed: u64,
    pub max_steps: u64,
}

/// Default idle budget before a stuck agent reroutes.
pub const PATIENCE: u32 = 30;

#[derive(Serialize)]
struct ConfigView<'a> {
    mode: Mode,
    registry: String,
    rules: String,
    world: &'a str,
    roster: &'a Roster,
    slots: usize,
    fov_radius: i32,
    geometry: &'a Geometry,
    speeds: &'a SpeedTable,
    patience: u32,
    seed: u64,
    max_steps: u64,
}

impl SimConfig {
    /// Shipped registry, rules, demo map and roster for `mode`.
    pub fn preset(mode: Mode, split: Split, seed: u64) -> Result<Self, SimError> {
        let registry = Arc::new(presets::registry()?);
        let rules = presets::rules(mode, registry.clone())?;
        Ok(SimConfig {
            mode,
            registry,
            rules,
            world: Arc::new(presets::demo_world()?),
            roster: presets::roster(mode, split)?,
            slots: presets::SLOTS,
            fov_radius: presets::FOV_RADIUS,
            geometry: Geometry::default(),
            speeds: SpeedTable::default(),
            patience: PATIENCE,
            seed,
            max_steps: 1000,
        })
    }

    pub fn with_seed(&self, seed: u64) -> Self {
        SimConfig { seed, ..self.clone() }
    }

    pub fn config_hash(&self) -> String {
        let view = ConfigView {
            mode: self.mode,
            registry: self.registry.to_json(),
            rules: render_rules(&self.rules),
            world: self.world.digest(),
            roster: &self.roster,
            slots: self.slots,
            fov_radius: self.fov_radius,
            geometry: &self.geometry,
            speeds: &self.speeds,
            patience: self.patience,
            seed: self.seed,
            max_steps: self.max_steps,
        };
        hex::encode(Sha256::digest(serde_json::to_vec(&view).expect("config serializes")))
    }

    pub fn initial_state(&self) -> Result<CityState, SimError> {
        Ok(CityState::new(self.world.clone(), &self.roster, &self.registry, self.seed)?)
    }
}

#[derive(Debug, Clone)]
pub struct AgentReport {
    pub id: usize,
    pub visible: Vec<usize>,
    pub grounding: GroundingVector,
    /// Action taken.
    pub action: Action,
    /// Action the rules mandate.
    pub oracle: Action,
    pub derivation: Derivation,
    /// Clauses whose body holds.
    pub satisfied: Vec<usize>,
    pub violations: Vec<usize>,
}

#[derive(Debug, Clone)]
pub struct StepReport {
    /// Time after the step.
    pub t: u64,
    pub agents: Vec<AgentReport>,
    pub moves: BTreeMap<usize, Vec<Cell>>,
    pub arrived: Vec<usize>,
    /// Agents rerouted after idling too long.
    pub replanned: Vec<usize>,
}

impl StepReport {
    pub fn ego(&self) -> &AgentReport {
        &self.agents[EGO]
    }

    pub fn ego_violations(&self) -> &[usize] {
        &self.agents[EGO].violations
    }

    /// At least one clause body holds for the ego.
    pub fn ego_constrained(&self) -> bool {
        !self.agents[EGO].satisfied.is_empty()
    }
}

/// A config with its evaluators and compiled rules.
#[derive(Debug, Clone)]
pub struct Simulator {
    pub cfg: SimConfig,
    grounder: Grounder,
    program: RuleProgram,
}

impl Simulator {
    pub fn new(cfg: SimConfig) -> Result<Self, SimError> {
        if cfg.slots == 0 || cfg.fov_radius < 1 {
            return Err(SimError::Config("slots and fov radius must be at least 1".into()));
        }
        let grounder = Grounder::for_mode(&cfg.registry, cfg.mode, cfg.slots, cfg.geometry)?;
        let program = RuleProgram::compile(&cfg.rules, &grounder.layout)?;
        Ok(Simulator { cfg, grounder, program })
    }

    pub fn grounder(&self) -> &Grounder {
        &self.grounder
    }

    pub fn program(&self) -> &RuleProgram {
        &self.program
    }

    pub fn observe(&self, state: &CityState, agent: usize) -> Result<(Vec<usize>, GroundingVector), SimError> {
        let fov = crop_fov(state, agent, self.cfg.fov_radius, self.cfg.slots)?;
        let g = self.grounder.ground(state, &fov)?;
        Ok((fov.visible, g))
    }

    /// Mandated action for one agent.
    pub fn oracle_action(&self, state: &CityState, agent: usize) -> Result<Action, SimError> {
        let (_, g) = self.observe(state, agent)?;
        Ok(self.program.resolve(&g.values)?.1.action)
    }

    pub fn step(&self, state: &CityState, ego_action: Option<Action>) -> Result<(CityState, StepReport), SimError> {
        let mut agents = Vec::with_capacity(state.agents.len());
        for id in 0..state.agents.len() {
            let (visible, grounding) = self.observe(state, id)?;
            let (_, derivation) = self.program.resolve(&grounding.values)?;
            let oracle = derivation.action;
            let action = match ego_action {
                Some(a) if id == EGO => a,
                _ => oracle,
            };
            let satisfied = self.program.satisfied(&grounding.values);
            let violations = self.program.violations(&grounding.values, action);
            agents.push(AgentReport { id, visible, grounding, action, oracle, derivation, satisfied, violations });
        }
        let actions: Vec<Action> = agents.iter().map(|a| a.action).collect();
        let moves = resolve_moves(state, &actions, &self.cfg.speeds);
        let (mut next, arrived) = state.apply_moves(&moves, &self.cfg.speeds)?;
        let replanned = next.replan_idle(self.cfg.patience, &[EGO])?;
        let t = next.t;
        Ok((next, StepReport { t, agents, moves, arrived, replanned }))
    }
}
