//! Predicate evaluators and the flat grounding vector for one observation
//! window.

use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::mode::Mode;
use crate::registry::{PredicateRegistry, RegistryError};
use crate::rules::{PredicateDecl, PredicateKind};
use crate::world::{Agent, AgentKind, CityState, Fov};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GroundingError {
    #[error(transparent)]
    Registry(#[from] RegistryError),
    #[error("unknown predicate `{0}`")]
    UnknownPredicate(String),
    #[error("no evaluator `{evaluator}` for predicate `{predicate}`")]
    MissingEvaluator { predicate: String, evaluator: String },
    #[error("predicate `{name}` has arity {arity}, evaluated as {used}")]
    Arity { name: String, arity: usize, used: usize },
    #[error("layout expects {expected} slots, window has {got}")]
    SlotMismatch { expected: usize, got: usize },
    #[error("bitstring length {got} does not match layout length {expected}")]
    BadBits { expected: usize, got: usize },
}

/// Distance thresholds for the spatial predicates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Geometry {
    pub close: i32,
    pub next_to: i32,
    /// Planned cells ahead checked by `CollidingClose`.
    pub colliding_horizon: usize,
    pub sees: i32,
    /// Planned cells ahead checked by `IsAtInter`.
    pub at_inter_lookahead: usize,
}

impl Default for Geometry {
    fn default() -> Self {
        Geometry { close: 3, next_to: 1, colliding_horizon: 3, sees: 8, at_inter_lookahead: 2 }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LayoutEntry {
    pub predicate: String,
    pub arity: usize,
    pub offset: usize,
}

/// Flat index schema: predicates in registry order, each taking `slots`
/// (unary) or `slots * slots` (binary, row-major) positions.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Layout {
    pub slots: usize,
    pub entries: Vec<LayoutEntry>,
}

/// One named feature of the flat vector.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SchemaEntry {
    pub predicate: String,
    pub tuple: Vec<usize>,
    pub index: usize,
}

impl Layout {
    pub fn for_mode(registry: &PredicateRegistry, mode: Mode, slots: usize) -> Result<Self, GroundingError> {
        Ok(Self::build(registry.mode_predicates(mode)?, slots))
    }

    /// Layout over the named predicates, kept in registry order.
    pub fn from_names(registry: &PredicateRegistry, names: &[&str], slots: usize) -> Result<Self, GroundingError> {
        for n in names {
            match registry.get(n) {
                Some(d) if d.kind != PredicateKind::Action => {}
                _ => return Err(GroundingError::UnknownPredicate(n.to_string())),
            }
        }
        let decls = registry.decls().iter().filter(|d| names.contains(&d.name.as_str())).collect();
        Ok(Self::build(decls, slots))
    }

    fn build(decls: Vec<&PredicateDecl>, slots: usize) -> Self {
        let mut offset = 0;
        let entries = decls
            .into_iter()
            .map(|d| {
                let e = LayoutEntry { predicate: d.name.clone(), arity: d.arity, offset };
                offset += slots.pow(d.arity as u32);
                e
            })
            .collect();
        Layout { slots, entries }
    }

    pub fn len(&self) -> usize {
        self.entries.iter().map(|e| self.slots.pow(e.arity as u32)).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn entry(&self, name: &str) -> Option<&LayoutEntry> {
        self.entries.iter().find(|e| e.predicate == name)
    }

    pub fn index(&self, name: &str, args: &[usize]) -> Option<usize> {
        let e = self.entry(name)?;
        if args.len() != e.arity || args.iter().any(|&a| a >= self.slots) {
            return None;
        }
        Some(e.offset + args.iter().fold(0, |acc, &a| acc * self.slots + a))
    }

    pub fn schema(&self) -> Vec<SchemaEntry> {
        let mut out = Vec::with_capacity(self.len());
        for e in &self.entries {
            if e.arity == 1 {
                for i in 0..self.slots {
                    out.push(SchemaEntry { predicate: e.predicate.clone(), tuple: vec![i], index: e.offset + i });
                }
            } else {
                for i in 0..self.slots {
                    for j in 0..self.slots {
                        out.push(SchemaEntry {
                            predicate: e.predicate.clone(),
                            tuple: vec![i, j],
                            index: e.offset + i * self.slots + j,
                        });
                    }
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GroundingVector {
    pub layout: Arc<Layout>,
    pub values: Vec<bool>,
}

impl GroundingVector {
    pub fn zeros(layout: Arc<Layout>) -> Self {
        let n = layout.len();
        GroundingVector { layout, values: vec![false; n] }
    }

    pub fn get(&self, name: &str, args: &[usize]) -> bool {
        self.layout.index(name, args).is_some_and(|i| self.values[i])
    }

    pub fn set(&mut self, name: &str, args: &[usize], v: bool) {
        let i = self.layout.index(name, args).expect("predicate and slots in layout");
        self.values[i] = v;
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn to_floats(&self) -> Vec<f32> {
        self.values.iter().map(|&b| if b { 1.0 } else { 0.0 }).collect()
    }

    pub fn to_bits(&self) -> String {
        self.values.iter().map(|&b| if b { '1' } else { '0' }).collect()
    }

    pub fn from_bits(layout: Arc<Layout>, bits: &str) -> Result<Self, GroundingError> {
        let values: Vec<bool> = bits
            .chars()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                _ => Err(GroundingError::BadBits { expected: layout.len(), got: bits.len() }),
            })
            .collect::<Result<_, _>>()?;
        if values.len() != layout.len() {
            return Err(GroundingError::BadBits { expected: layout.len(), got: values.len() });
        }
        Ok(GroundingVector { layout, values })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Eval {
    Concept(String),
    AtInter,
    InInter,
    Close,
    HigherPri,
    Colliding,
    LeftOf,
    RightOf,
    NextTo,
    Sees,
}

impl Eval {
    fn bind(decl: &PredicateDecl) -> Result<Eval, GroundingError> {
        if decl.kind == PredicateKind::SemanticUnary {
            return Ok(Eval::Concept(decl.name.clone()));
        }
        let e = match decl.evaluator_id() {
            "IsAtInter" => Eval::AtInter,
            "IsInInter" => Eval::InInter,
            "IsClose" => Eval::Close,
            "HigherPri" => Eval::HigherPri,
            "CollidingClose" => Eval::Colliding,
            "LeftOf" => Eval::LeftOf,
            "RightOf" => Eval::RightOf,
            "NextTo" => Eval::NextTo,
            "Sees" => Eval::Sees,
            other => {
                return Err(GroundingError::MissingEvaluator {
                    predicate: decl.name.clone(),
                    evaluator: other.to_string(),
                })
            }
        };
        let arity = match e {
            Eval::AtInter | Eval::InInter | Eval::Concept(_) => 1,
            _ => 2,
        };
        if arity != decl.arity {
            return Err(GroundingError::Arity { name: decl.name.clone(), arity: decl.arity, used: arity });
        }
        Ok(e)
    }

    fn unary(&self, geo: &Geometry, state: &CityState, a: &Agent) -> bool {
        let world = &state.world;
        match self {
            Eval::Concept(name) => a.has(name),
            Eval::InInter => world.region_at(a.pos).is_some(),
            // Outside every region and first in line to enter one.
            Eval::AtInter => {
                if world.region_at(a.pos).is_some() {
                    return false;
                }
                for &c in a.upcoming(geo.at_inter_lookahead) {
                    if world.region_at(c).is_some() {
                        return true;
                    }
                    if state.agents.iter().any(|b| b.id != a.id && b.kind == AgentKind::Car && b.pos == c) {
                        return false;
                    }
                }
                false
            }
            _ => unreachable!("binary evaluator used as unary"),
        }
    }

    fn binary(&self, geo: &Geometry, x: &Agent, y: &Agent) -> bool {
        match self {
            Eval::Close => x.pos.chebyshev(y.pos) <= geo.close,
            Eval::NextTo => x.pos.chebyshev(y.pos) <= geo.next_to,
            Eval::Sees => x.pos.chebyshev(y.pos) <= geo.sees,
            Eval::HigherPri => x.priority > y.priority,
            Eval::Colliding => colliding_close(x, y, geo.colliding_horizon),
            Eval::LeftOf => ahead(x, y) > 0 && lateral(x, y) > 0,
            Eval::RightOf => ahead(x, y) > 0 && lateral(x, y) < 0,
            _ => unreachable!("unary evaluator used as binary"),
        }
    }
}

/// Signed offset of `x` along `y`'s left-hand direction (`y` axis down).
fn lateral(x: &Agent, y: &Agent) -> i32 {
    let (hx, hy) = y.heading.delta();
    let (lx, ly) = (hy, -hx);
    (x.pos.x - y.pos.x) * lx + (x.pos.y - y.pos.y) * ly
}

/// Signed offset of `x` along `y`'s heading. Side predicates only count
/// agents in front: someone level with a vehicle cannot hold it in place.
fn ahead(x: &Agent, y: &Agent) -> i32 {
    let (hx, hy) = y.heading.delta();
    (x.pos.x - y.pos.x) * hx + (x.pos.y - y.pos.y) * hy
}

/// `y` stands on one of `x`'s next `horizon` planned cells, and `y` is not
/// itself heading back through the stretch `x` would cover to reach it.
/// Agents walking toward each other pass, so neither waits on the other.
/// Pedestrians share cells and never collide with each other.
pub fn colliding_close(x: &Agent, y: &Agent, horizon: usize) -> bool {
    if x.kind == AgentKind::Pedestrian && y.kind == AgentKind::Pedestrian {
        return false;
    }
    let ahead = x.upcoming(horizon);
    let Some(k) = ahead.iter().position(|&c| c == y.pos) else { return false };
    let stretch = &x.path[..=k];
    !y.upcoming(horizon).iter().any(|c| stretch.contains(c))
}

/// Bound evaluators for one layout.
#[derive(Debug, Clone)]
pub struct Grounder {
    pub layout: Arc<Layout>,
    pub geometry: Geometry,
    evals: Vec<Eval>,
}

impl Grounder {
    pub fn new(registry: &PredicateRegistry, layout: Layout, geometry: Geometry) -> Result<Self, GroundingError> {
        let evals = layout
            .entries
            .iter()
            .map(|e| {
                let decl = registry.get(&e.predicate).ok_or_else(|| GroundingError::UnknownPredicate(e.predicate.clone()))?;
                Eval::bind(decl)
            })
            .collect::<Result<_, _>>()?;
        Ok(Grounder { layout: Arc::new(layout), geometry, evals })
    }

    pub fn for_mode(registry: &PredicateRegistry, mode: Mode, slots: usize, geometry: Geometry) -> Result<Self, GroundingError> {
        Self::new(registry, Layout::for_mode(registry, mode, slots)?, geometry)
    }

    pub fn ground(&self, state: &CityState, fov: &Fov) -> Result<GroundingVector, GroundingError> {
        let n = self.layout.slots;
        if fov.slots != n {
            return Err(GroundingError::SlotMismatch { expected: n, got: fov.slots });
        }
        let agents: Vec<&Agent> = fov.visible.iter().take(n).map(|&id| &state.agents[id]).collect();
        let mut g = GroundingVector::zeros(self.layout.clone());
        for (entry, eval) in self.layout.entries.iter().zip(&self.evals) {
            if entry.arity == 1 {
                for (i, a) in agents.iter().enumerate() {
                    g.values[entry.offset + i] = eval.unary(&self.geometry, state, a);
                }
            } else {
                for (i, a) in agents.iter().enumerate() {
                    for (j, b) in agents.iter().enumerate() {
                        if i != j {
                            g.values[entry.offset + i * n + j] = eval.binary(&self.geometry, a, b);
                        }
                    }
                }
            }
        }
        Ok(g)
    }
}

/// `Σ slots^arity` over the mode's predicates.
pub fn dimension(registry: &PredicateRegistry, mode: Mode, slots: usize) -> Result<usize, GroundingError> {
    Ok(registry.mode_predicates(mode)?.iter().map(|d| slots.pow(d.arity as u32)).sum())
}

fn bind_named(registry: &PredicateRegistry, pred: &str, arity: usize) -> Result<Eval, GroundingError> {
    let decl = registry.get(pred).ok_or_else(|| GroundingError::UnknownPredicate(pred.to_string()))?;
    if decl.kind == PredicateKind::Action {
        return Err(GroundingError::UnknownPredicate(pred.to_string()));
    }
    if decl.arity != arity {
        return Err(GroundingError::Arity { name: pred.to_string(), arity: decl.arity, used: arity });
    }
    Eval::bind(decl)
}

/// Evaluates one unary predicate for `agent`, who must be in `fov`.
pub fn eval_unary(
    registry: &PredicateRegistry,
    pred: &str,
    state: &CityState,
    agent: usize,
    fov: &Fov,
    geometry: &Geometry,
) -> Result<bool, GroundingError> {
    let eval = bind_named(registry, pred, 1)?;
    Ok(fov.visible.contains(&agent) && eval.unary(geometry, state, &state.agents[agent]))
}

/// Evaluates one binary predicate; both agents must be in `fov` and
/// distinct.
pub fn eval_binary(
    registry: &PredicateRegistry,
    pred: &str,
    state: &CityState,
    a: usize,
    b: usize,
    fov: &Fov,
    geometry: &Geometry,
) -> Result<bool, GroundingError> {
    let eval = bind_named(registry, pred, 2)?;
    let visible = fov.visible.contains(&a) && fov.visible.contains(&b);
    Ok(visible && a != b && eval.binary(geometry, &state.agents[a], &state.agents[b]))
}
