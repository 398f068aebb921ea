use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::map::Cell;
use super::WorldError;
use crate::registry::PredicateRegistry;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AgentKind {
    Pedestrian,
    Car,
}

impl AgentKind {
    /// The concept implied by the kind.
    pub fn concept(self) -> &'static str {
        match self {
            AgentKind::Pedestrian => "IsPedestrian",
            AgentKind::Car => "IsCar",
        }
    }

    fn other(self) -> AgentKind {
        match self {
            AgentKind::Pedestrian => AgentKind::Car,
            AgentKind::Car => AgentKind::Pedestrian,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Heading {
    N,
    E,
    S,
    W,
}

impl Heading {
    pub const ALL: [Heading; 4] = [Heading::N, Heading::E, Heading::S, Heading::W];

    pub fn index(self) -> usize {
        self as usize
    }

    /// Unit vector with `y` pointing down.
    pub fn delta(self) -> (i32, i32) {
        match self {
            Heading::N => (0, -1),
            Heading::E => (1, 0),
            Heading::S => (0, 1),
            Heading::W => (-1, 0),
        }
    }

    /// Heading of a unit move from `a` to `b`.
    pub fn between(a: Cell, b: Cell) -> Option<Heading> {
        match (b.x - a.x, b.y - a.y) {
            (0, -1) => Some(Heading::N),
            (1, 0) => Some(Heading::E),
            (0, 1) => Some(Heading::S),
            (-1, 0) => Some(Heading::W),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Agent {
    pub id: usize,
    pub kind: AgentKind,
    /// Every semantic concept in the registry; absent means false.
    pub concepts: BTreeMap<String, bool>,
    pub priority: f64,
    pub pos: Cell,
    pub heading: Heading,
    pub size: (u32, u32),
    /// Remaining global path, current cell first.
    pub path: Vec<Cell>,
    pub goal: Cell,
}

impl Agent {
    pub fn has(&self, concept: &str) -> bool {
        self.concepts.get(concept).copied().unwrap_or(false)
    }

    /// Next `k` planned cells, excluding the current one.
    pub fn upcoming(&self, k: usize) -> &[Cell] {
        let end = self.path.len().min(k + 1);
        &self.path[1.min(end)..end]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RosterEntry {
    pub kind: AgentKind,
    #[serde(default)]
    pub concepts: Vec<String>,
    pub priority: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Roster {
    pub agents: Vec<RosterEntry>,
}

impl Roster {
    pub fn from_json(text: &str) -> Result<Self, WorldError> {
        serde_json::from_str(text).map_err(|e| WorldError::MalformedRoster(e.to_string()))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("roster serializes")
    }

    /// Checks concept names against the registry, kind consistency, and
    /// priority range.
    pub fn validate(&self, registry: &PredicateRegistry) -> Result<(), WorldError> {
        if self.agents.is_empty() {
            return Err(WorldError::MalformedRoster("roster has no agents".into()));
        }
        let known: BTreeSet<&str> = registry.concepts().into_iter().collect();
        for (id, entry) in self.agents.iter().enumerate() {
            for c in &entry.concepts {
                if !known.contains(c.as_str()) {
                    return Err(WorldError::UnknownConcept { agent: id, concept: c.clone() });
                }
            }
            if entry.concepts.iter().any(|c| c == entry.kind.other().concept()) {
                return Err(WorldError::MalformedRoster(format!(
                    "agent {id} is a {:?} but lists {}",
                    entry.kind,
                    entry.kind.other().concept()
                )));
            }
            if !entry.priority.is_finite() || !(0.0..=1.0).contains(&entry.priority) {
                return Err(WorldError::MalformedRoster(format!("agent {id} priority {} not in [0, 1]", entry.priority)));
            }
        }
        Ok(())
    }

    /// Closed-world concept table for entry `id`.
    pub fn concept_table(&self, id: usize, registry: &PredicateRegistry) -> BTreeMap<String, bool> {
        let entry = &self.agents[id];
        registry
            .concepts()
            .into_iter()
            .map(|c| (c.to_string(), c == entry.kind.concept() || entry.concepts.iter().any(|e| e == c)))
            .collect()
    }

    /// Set of concept compositions, one per agent, as sorted name lists.
    pub fn compositions(&self) -> BTreeSet<Vec<String>> {
        self.agents
            .iter()
            .map(|e| {
                let mut set: BTreeSet<String> = e.concepts.iter().cloned().collect();
                set.insert(e.kind.concept().to_string());
                set.into_iter().collect()
            })
            .collect()
    }
}
