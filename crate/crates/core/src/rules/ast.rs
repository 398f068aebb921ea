use std::collections::BTreeSet;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::registry::PredicateRegistry;

/// The four per-agent decisions. Discriminants double as the wire-protocol
/// action index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Action {
    Slow = 0,
    Normal = 1,
    Fast = 2,
    Stop = 3,
}

impl Action {
    pub const ALL: [Action; 4] = [Action::Slow, Action::Normal, Action::Fast, Action::Stop];

    /// Resolution precedence, strongest first.
    pub const PRECEDENCE: [Action; 4] = [Action::Stop, Action::Slow, Action::Fast, Action::Normal];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(index: usize) -> Option<Action> {
        Action::ALL.get(index).copied()
    }

    pub fn name(self) -> &'static str {
        match self {
            Action::Slow => "Slow",
            Action::Normal => "Normal",
            Action::Fast => "Fast",
            Action::Stop => "Stop",
        }
    }

    pub fn from_name(name: &str) -> Option<Action> {
        Action::ALL.into_iter().find(|a| a.name() == name)
    }

    /// Position in [`Action::PRECEDENCE`]; lower wins.
    pub fn rank(self) -> usize {
        match self {
            Action::Stop => 0,
            Action::Slow => 1,
            Action::Fast => 2,
            Action::Normal => 3,
        }
    }

    /// Option letter used by the scene question template.
    pub fn letter(self) -> char {
        (b'A' + self.index() as u8) as char
    }
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PredicateKind {
    SemanticUnary,
    Spatial,
    Action,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PredicateDecl {
    pub name: String,
    pub arity: usize,
    pub kind: PredicateKind,
    /// Evaluator id; defaults to the predicate name.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub evaluator: Option<String>,
}

impl PredicateDecl {
    pub fn new(name: &str, arity: usize, kind: PredicateKind) -> Self {
        PredicateDecl { name: name.to_string(), arity, kind, evaluator: None }
    }

    pub fn evaluator_id(&self) -> &str {
        self.evaluator.as_deref().unwrap_or(&self.name)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Literal {
    pub predicate: String,
    pub args: Vec<String>,
    pub negated: bool,
}

impl Literal {
    pub fn positive(predicate: &str, args: &[&str]) -> Self {
        Literal {
            predicate: predicate.to_string(),
            args: args.iter().map(|a| a.to_string()).collect(),
            negated: false,
        }
    }

    pub fn negative(predicate: &str, args: &[&str]) -> Self {
        Literal { negated: true, ..Literal::positive(predicate, args) }
    }

    pub fn action(&self) -> Option<Action> {
        Action::from_name(&self.predicate)
    }
}

impl fmt::Display for Literal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.negated {
            write!(f, "Not({}({}))", self.predicate, self.args.join(", "))
        } else {
            write!(f, "{}({})", self.predicate, self.args.join(", "))
        }
    }
}

/// `head :- body.` The head is a positive action literal; head variables
/// are universally quantified, body-only variables existentially.
#[derive(Debug, Clone)]
pub struct Clause {
    pub head: Literal,
    pub body: Vec<Literal>,
    pub source_text: String,
}

impl PartialEq for Clause {
    fn eq(&self, other: &Self) -> bool {
        self.head == other.head && self.body == other.body
    }
}

impl Eq for Clause {}

impl Clause {
    pub fn new(head: Literal, body: Vec<Literal>) -> Self {
        let mut clause = Clause { head, body, source_text: String::new() };
        clause.source_text = clause.to_string();
        clause
    }

    /// Head action. Validated clauses always have one.
    pub fn head_action(&self) -> Action {
        self.head.action().expect("clause head is an action predicate")
    }

    pub fn head_vars(&self) -> Vec<&str> {
        let mut out: Vec<&str> = Vec::new();
        for a in &self.head.args {
            if !out.contains(&a.as_str()) {
                out.push(a);
            }
        }
        out
    }

    /// Body-only variables in first-occurrence order.
    pub fn body_only_vars(&self) -> Vec<&str> {
        let head: BTreeSet<&str> = self.head.args.iter().map(String::as_str).collect();
        let mut out: Vec<&str> = Vec::new();
        for lit in &self.body {
            for a in &lit.args {
                if !head.contains(a.as_str()) && !out.contains(&a.as_str()) {
                    out.push(a);
                }
            }
        }
        out
    }

    pub fn body_actions(&self) -> impl Iterator<Item = (Action, bool)> + '_ {
        self.body.iter().filter_map(|l| l.action().map(|a| (a, l.negated)))
    }
}

impl fmt::Display for Clause {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} :- ", self.head)?;
        for (i, lit) in self.body.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{lit}")?;
        }
        f.write_str(".")
    }
}

#[derive(Debug, Clone)]
pub struct RuleSet {
    pub clauses: Vec<Clause>,
    pub registry: Arc<PredicateRegistry>,
}

impl PartialEq for RuleSet {
    fn eq(&self, other: &Self) -> bool {
        self.clauses == other.clauses && *self.registry == *other.registry
    }
}

impl RuleSet {
    pub fn empty(registry: Arc<PredicateRegistry>) -> Self {
        RuleSet { clauses: Vec::new(), registry }
    }

    pub fn len(&self) -> usize {
        self.clauses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.clauses.is_empty()
    }

    /// Every clause of `self` also occurs in `other`.
    pub fn is_subset_of(&self, other: &RuleSet) -> bool {
        self.clauses.iter().all(|c| other.clauses.contains(c))
    }

    /// Names of all predicates referenced by any clause.
    pub fn predicates(&self) -> BTreeSet<&str> {
        self.clauses
            .iter()
            .flat_map(|c| std::iter::once(&c.head).chain(c.body.iter()))
            .map(|l| l.predicate.as_str())
            .collect()
    }
}

/// Canonical text form: one clause per line.
pub fn render_rules(rules: &RuleSet) -> String {
    let mut out = String::new();
    for clause in &rules.clauses {
        out.push_str(&clause.to_string());
        out.push('\n');
    }
    out
}
