use std::collections::BTreeMap;
use std::path::Path;
use std::sync::Arc;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::agent::{Agent, AgentKind, Heading, Roster};
use super::map::{Cell, StaticMap};
use super::{may_share, World, WorldError};
use crate::planner::{plan, resample_goal};
use crate::registry::PredicateRegistry;
use crate::rules::Action;
use crate::seeding::stream;

pub const PLACEMENT_RETRIES: usize = 1000;

/// Cells advanced per step for one agent kind.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct KindSpeeds {
    pub slow: usize,
    pub normal: usize,
    pub fast: usize,
    pub stop: usize,
}

impl KindSpeeds {
    pub fn get(&self, a: Action) -> usize {
        match a {
            Action::Slow => self.slow,
            Action::Normal => self.normal,
            Action::Fast => self.fast,
            Action::Stop => self.stop,
        }
    }

    pub fn max(&self) -> usize {
        self.slow.max(self.normal).max(self.fast).max(self.stop)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpeedTable {
    pub car: KindSpeeds,
    pub pedestrian: KindSpeeds,
}

impl Default for SpeedTable {
    fn default() -> Self {
        SpeedTable {
            car: KindSpeeds { slow: 1, normal: 2, fast: 3, stop: 0 },
            pedestrian: KindSpeeds { slow: 1, normal: 1, fast: 2, stop: 0 },
        }
    }
}

impl SpeedTable {
    pub fn of(&self, kind: AgentKind) -> &KindSpeeds {
        match kind {
            AgentKind::Car => &self.car,
            AgentKind::Pedestrian => &self.pedestrian,
        }
    }
}

/// Full dynamic state: static world, agents, and per-agent goal streams.
#[derive(Debug, Clone)]
pub struct CityState {
    pub world: Arc<World>,
    pub agents: Vec<Agent>,
    pub t: u64,
    pub seed: u64,
    /// Consecutive steps each agent has not moved.
    pub idle: Vec<u32>,
    goal_rngs: Vec<ChaCha8Rng>,
}

#[derive(Serialize)]
struct HashView<'a> {
    world: &'a str,
    agents: &'a [Agent],
    t: u64,
    seed: u64,
    idle: &'a [u32],
    goal_rngs: &'a [ChaCha8Rng],
}

/// Reads a map and roster from disk and places the roster.
pub fn load_config(
    map_file: &Path,
    agents_file: &Path,
    registry: &PredicateRegistry,
    seed: u64,
) -> Result<CityState, WorldError> {
    let read = |p: &Path| std::fs::read_to_string(p).map_err(|e| WorldError::Io { path: p.to_path_buf(), source: e });
    let map = StaticMap::from_json(&read(map_file)?)?;
    let roster = Roster::from_json(&read(agents_file)?)?;
    CityState::new(Arc::new(World::new(map)), &roster, registry, seed)
}

impl CityState {
    /// Places every roster entry on a distinct start cell with a planned
    /// path to a sampled goal. Each agent draws from its own sub-stream.
    pub fn new(world: Arc<World>, roster: &Roster, registry: &PredicateRegistry, seed: u64) -> Result<Self, WorldError> {
        roster.validate(registry)?;
        let mut agents: Vec<Agent> = Vec::with_capacity(roster.agents.len());
        for (id, entry) in roster.agents.iter().enumerate() {
            let cands = world.frontage(entry.kind);
            if cands.len() < 2 {
                return Err(WorldError::NoFreeStart(entry.kind));
            }
            let mut rng = stream(seed, &format!("placement/{id}"));
            let mut placed = None;
            for _ in 0..PLACEMENT_RETRIES {
                let start = cands[rng.gen_range(0..cands.len())];
                if agents.iter().any(|a| a.pos == start) {
                    continue;
                }
                let goal = resample_goal(&world, entry.kind, start, &mut rng)?;
                if let Ok(path) = plan(&world, entry.kind, start, goal) {
                    placed = Some((start, goal, path));
                    break;
                }
            }
            let (start, goal, path) = placed.ok_or(WorldError::Placement { agent: id, retries: PLACEMENT_RETRIES })?;
            let heading = path.get(1).and_then(|&n| Heading::between(start, n)).unwrap_or(Heading::N);
            agents.push(Agent {
                id,
                kind: entry.kind,
                concepts: roster.concept_table(id, registry),
                priority: entry.priority,
                pos: start,
                heading,
                size: (1, 1),
                path,
                goal,
            });
        }
        let goal_rngs = (0..agents.len()).map(|id| stream(seed, &format!("goal/{id}"))).collect();
        let idle = vec![0; agents.len()];
        Ok(CityState { world, agents, t: 0, seed, idle, goal_rngs })
    }

    pub fn agent(&self, id: usize) -> Result<&Agent, WorldError> {
        self.agents.get(id).ok_or(WorldError::UnknownAgent(id))
    }

    pub fn width(&self) -> usize {
        self.world.map.width()
    }

    pub fn height(&self) -> usize {
        self.world.map.height()
    }

    /// `(W, H, B + N)`.
    pub fn full_shape(&self) -> (usize, usize, usize) {
        (self.width(), self.height(), 8 + self.agents.len())
    }

    /// One grid per agent marking its current cell and remaining path.
    pub fn dynamic_layers(&self) -> Vec<Vec<bool>> {
        let map = &self.world.map;
        self.agents
            .iter()
            .map(|a| {
                let mut layer = vec![false; map.width() * map.height()];
                for c in std::iter::once(&a.pos).chain(&a.path) {
                    layer[map.idx(*c)] = true;
                }
                layer
            })
            .collect()
    }

    pub fn hash(&self) -> String {
        let view = HashView {
            world: self.world.digest(),
            agents: &self.agents,
            t: self.t,
            seed: self.seed,
            idle: &self.idle,
            goal_rngs: &self.goal_rngs,
        };
        let bytes = serde_json::to_vec(&view).expect("state serializes");
        hex::encode(Sha256::digest(bytes))
    }

    /// Advances every agent along its path by the given cells and bumps `t`.
    /// Returns the new state and the ids of agents that reached their goal
    /// (and were given a fresh one).
    pub fn apply_moves(
        &self,
        moves: &BTreeMap<usize, Vec<Cell>>,
        speeds: &SpeedTable,
    ) -> Result<(CityState, Vec<usize>), WorldError> {
        let mut next = self.clone();
        for (&id, cells) in moves {
            let agent = next.agents.get_mut(id).ok_or(WorldError::UnknownAgent(id))?;
            let max = speeds.of(agent.kind).max();
            if cells.len() > max {
                return Err(WorldError::TooFast { agent: id, cells: cells.len(), max });
            }
            if cells.is_empty() {
                continue;
            }
            if agent.path.len() <= cells.len() || agent.path[1..=cells.len()] != cells[..] {
                return Err(WorldError::OffPath { agent: id });
            }
            let k = cells.len();
            let before = agent.path[k - 1];
            agent.pos = agent.path[k];
            agent.heading = Heading::between(before, agent.pos).unwrap_or(agent.heading);
            agent.path.drain(..k);
        }
        let moved = |id: usize| moves.get(&id).is_some_and(|c| !c.is_empty());
        for (i, a) in next.agents.iter().enumerate() {
            for b in &next.agents[i + 1..] {
                if a.pos == b.pos && !may_share(a, moved(a.id), b, moved(b.id)) {
                    return Err(WorldError::Collision { a: a.id, b: b.id, cell: a.pos });
                }
            }
        }
        for id in 0..next.agents.len() {
            next.idle[id] = if moved(id) { 0 } else { next.idle[id].saturating_add(1) };
        }
        let mut arrived = Vec::new();
        for id in 0..next.agents.len() {
            if next.agents[id].path.len() == 1 {
                next.retarget(id)?;
                arrived.push(id);
            }
        }
        next.t += 1;
        Ok((next, arrived))
    }

    /// Gives a fresh goal to every agent outside `exempt` that has not moved
    /// for `patience` steps. Returns their ids. A patience of 0 disables it.
    pub fn replan_idle(&mut self, patience: u32, exempt: &[usize]) -> Result<Vec<usize>, WorldError> {
        if patience == 0 {
            return Ok(Vec::new());
        }
        let mut out = Vec::new();
        for id in 0..self.agents.len() {
            if self.idle[id] >= patience && !exempt.contains(&id) {
                self.retarget(id)?;
                self.idle[id] = 0;
                out.push(id);
            }
        }
        Ok(out)
    }

    /// Samples a new goal from the agent's stream and replans; the old end
    /// point becomes the new start.
    fn retarget(&mut self, id: usize) -> Result<(), WorldError> {
        let world = self.world.clone();
        let (kind, pos) = (self.agents[id].kind, self.agents[id].pos);
        let rng = &mut self.goal_rngs[id];
        for _ in 0..PLACEMENT_RETRIES {
            let goal = resample_goal(&world, kind, pos, rng)?;
            if let Ok(path) = plan(&world, kind, pos, goal) {
                let a = &mut self.agents[id];
                a.goal = goal;
                a.path = path;
                return Ok(());
            }
        }
        Err(WorldError::Placement { agent: id, retries: PLACEMENT_RETRIES })
    }
}
