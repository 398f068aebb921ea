//! Predicate registry: declarations, evaluator bindings, and per-mode
//! predicate subsets.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::mode::Mode;
use crate::rules::{Action, PredicateDecl, PredicateKind};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RegistryError {
    #[error("malformed registry: {0}")]
    Malformed(String),
    #[error("duplicate predicate `{0}`")]
    Duplicate(String),
    #[error("predicate `{name}` has unsupported arity {arity}")]
    BadArity { name: String, arity: usize },
    #[error("action predicate `{0}` must be one of Slow, Normal, Fast, Stop with arity 1")]
    BadAction(String),
    #[error("mode `{mode}` references unknown or action predicate `{name}`")]
    BadModeEntry { mode: String, name: String },
    #[error("mode `{0}` has no predicate subset")]
    MissingMode(String),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct RegistryFile {
    predicates: Vec<PredicateDecl>,
    #[serde(default)]
    modes: BTreeMap<String, Vec<String>>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PredicateRegistry {
    decls: Vec<PredicateDecl>,
    index: BTreeMap<String, usize>,
    modes: BTreeMap<String, Vec<String>>,
}

const UNARY_SEMANTIC: [&str; 9] =
    ["IsPedestrian", "IsCar", "IsAmbulance", "IsBus", "IsPolice", "IsTiro", "IsReckless", "IsOld", "IsYoung"];
const UNARY_SPATIAL: [&str; 2] = ["IsAtInter", "IsInInter"];
const BINARY: [&str; 6] = ["IsClose", "HigherPri", "CollidingClose", "LeftOf", "RightOf", "NextTo"];

impl PredicateRegistry {
    pub fn new(
        decls: Vec<PredicateDecl>,
        modes: BTreeMap<String, Vec<String>>,
    ) -> Result<Self, RegistryError> {
        let mut index = BTreeMap::new();
        for (i, d) in decls.iter().enumerate() {
            if d.name == "Not" || !d.name.starts_with(|c: char| c.is_ascii_uppercase()) {
                return Err(RegistryError::Malformed(format!("invalid predicate name `{}`", d.name)));
            }
            if !(1..=2).contains(&d.arity) {
                return Err(RegistryError::BadArity { name: d.name.clone(), arity: d.arity });
            }
            let is_action_name = Action::from_name(&d.name).is_some();
            if (d.kind == PredicateKind::Action) != is_action_name
                || (d.kind == PredicateKind::Action && d.arity != 1)
            {
                return Err(RegistryError::BadAction(d.name.clone()));
            }
            if d.kind == PredicateKind::SemanticUnary && d.arity != 1 {
                return Err(RegistryError::BadArity { name: d.name.clone(), arity: d.arity });
            }
            if index.insert(d.name.clone(), i).is_some() {
                return Err(RegistryError::Duplicate(d.name.clone()));
            }
        }
        for (mode, names) in &modes {
            for name in names {
                match index.get(name) {
                    Some(&i) if decls[i].kind != PredicateKind::Action => {}
                    _ => return Err(RegistryError::BadModeEntry { mode: mode.clone(), name: name.clone() }),
                }
            }
        }
        Ok(PredicateRegistry { decls, index, modes })
    }

    /// Full predicate table: nine semantic concepts, two intersection
    /// predicates, six binary relations, the optional `Sees`, and the four
    /// actions, with the per-mode subsets.
    pub fn standard() -> Self {
        let mut decls: Vec<PredicateDecl> = Vec::new();
        decls.extend(UNARY_SEMANTIC.iter().map(|n| PredicateDecl::new(n, 1, PredicateKind::SemanticUnary)));
        decls.extend(UNARY_SPATIAL.iter().map(|n| PredicateDecl::new(n, 1, PredicateKind::Spatial)));
        decls.extend(BINARY.iter().map(|n| PredicateDecl::new(n, 2, PredicateKind::Spatial)));
        decls.push(PredicateDecl::new("Sees", 2, PredicateKind::Spatial));
        decls.extend(Action::ALL.iter().map(|a| PredicateDecl::new(a.name(), 1, PredicateKind::Action)));

        let owned = |names: &[&str]| names.iter().map(|s| s.to_string()).collect::<Vec<_>>();
        let easy = owned(&[
            "IsPedestrian",
            "IsCar",
            "IsAmbulance",
            "IsTiro",
            "IsOld",
            "IsAtInter",
            "IsInInter",
            "HigherPri",
            "CollidingClose",
        ]);
        let medium = owned(&[
            "IsPedestrian",
            "IsCar",
            "IsAmbulance",
            "IsBus",
            "IsTiro",
            "IsOld",
            "IsAtInter",
            "IsInInter",
            "HigherPri",
            "CollidingClose",
            "RightOf",
            "NextTo",
        ]);
        let full: Vec<String> =
            UNARY_SEMANTIC.iter().chain(&UNARY_SPATIAL).chain(&BINARY).map(|s| s.to_string()).collect();
        let mut modes = BTreeMap::new();
        modes.insert(Mode::SpfEasy.name().to_string(), easy);
        modes.insert(Mode::SpfMedium.name().to_string(), medium);
        for m in [Mode::SpfHard, Mode::SpfExpert, Mode::VapEasy, Mode::VapHard] {
            modes.insert(m.name().to_string(), full.clone());
        }
        PredicateRegistry::new(decls, modes).expect("standard registry is valid")
    }

    pub fn from_json(text: &str) -> Result<Self, RegistryError> {
        let file: RegistryFile =
            serde_json::from_str(text).map_err(|e| RegistryError::Malformed(e.to_string()))?;
        PredicateRegistry::new(file.predicates, file.modes)
    }

    pub fn to_json(&self) -> String {
        let file = RegistryFile { predicates: self.decls.clone(), modes: self.modes.clone() };
        serde_json::to_string_pretty(&file).expect("registry serializes")
    }

    pub fn decls(&self) -> &[PredicateDecl] {
        &self.decls
    }

    pub fn get(&self, name: &str) -> Option<&PredicateDecl> {
        self.index.get(name).map(|&i| &self.decls[i])
    }

    pub fn position(&self, name: &str) -> Option<usize> {
        self.index.get(name).copied()
    }

    /// Names of the semantic unary predicates, i.e. agent concepts.
    pub fn concepts(&self) -> Vec<&str> {
        self.decls
            .iter()
            .filter(|d| d.kind == PredicateKind::SemanticUnary)
            .map(|d| d.name.as_str())
            .collect()
    }

    /// The mode's predicates in declaration order.
    pub fn mode_predicates(&self, mode: Mode) -> Result<Vec<&PredicateDecl>, RegistryError> {
        let names: BTreeSet<&str> = self
            .modes
            .get(mode.name())
            .ok_or_else(|| RegistryError::MissingMode(mode.name().to_string()))?
            .iter()
            .map(String::as_str)
            .collect();
        Ok(self.decls.iter().filter(|d| names.contains(d.name.as_str())).collect())
    }

    /// All non-action predicates in declaration order.
    pub fn background_predicates(&self) -> Vec<&PredicateDecl> {
        self.decls.iter().filter(|d| d.kind != PredicateKind::Action).collect()
    }
}
