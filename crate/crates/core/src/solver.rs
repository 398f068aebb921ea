//! Action resolution for one agent from its grounding: stratified forward
//! chaining, plus an exhaustive model enumerator used as a cross-check.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::grounding::{GroundingVector, Layout};
use crate::rules::{validate_stratification, Action, RuleSet};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SolveError {
    #[error("rules are not stratifiable: cycles {0:?}")]
    Unstratified(Vec<Vec<Action>>),
    #[error("predicate `{0}` is not part of the grounding layout")]
    Schema(String),
    #[error("grounding has {got} values, layout expects {expected}")]
    Length { expected: usize, got: usize },
    #[error("conflicting actions derived: {0:?}")]
    Conflict(Vec<Action>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ActionVector {
    pub slow: bool,
    pub normal: bool,
    pub fast: bool,
    pub stop: bool,
}

impl ActionVector {
    pub fn one_hot(a: Action) -> Self {
        let mut v = ActionVector::default();
        v.set(a, true);
        v
    }

    pub fn from_bools(b: [bool; 4]) -> Self {
        ActionVector { slow: b[0], normal: b[1], fast: b[2], stop: b[3] }
    }

    pub fn as_bools(&self) -> [bool; 4] {
        [self.slow, self.normal, self.fast, self.stop]
    }

    pub fn get(&self, a: Action) -> bool {
        self.as_bools()[a.index()]
    }

    pub fn set(&mut self, a: Action, v: bool) {
        let mut b = self.as_bools();
        b[a.index()] = v;
        *self = Self::from_bools(b);
    }

    pub fn is_one_hot(&self) -> bool {
        self.as_bools().iter().filter(|b| **b).count() == 1
    }

    /// The single true action, if one-hot.
    pub fn action(&self) -> Option<Action> {
        self.is_one_hot().then(|| Action::ALL.into_iter().find(|a| self.get(*a)).unwrap())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FiredClause {
    pub clause: usize,
    pub head: Action,
    /// Variable name to FOV slot, head variable first.
    pub witness: Vec<(String, usize)>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Derivation {
    pub action: Action,
    pub fired: Vec<FiredClause>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Lit {
    /// Background literal: flat offset, arity, variable ids.
    Bg { offset: usize, arity: usize, vars: [usize; 2], negated: bool },
    /// Action literal on the head variable.
    Act { action: Action, negated: bool },
}

#[derive(Debug, Clone)]
struct Compiled {
    head: Action,
    vars: Vec<String>,
    body: Vec<Lit>,
    /// `ready[k]`: literals whose variables are all bound once variable `k`
    /// is assigned.
    ready: Vec<Vec<usize>>,
}

/// A rule set bound to a grounding layout.
#[derive(Debug, Clone)]
pub struct RuleProgram {
    clauses: Vec<Compiled>,
    order: Vec<Action>,
    slots: usize,
    len: usize,
}

impl RuleProgram {
    pub fn compile(rules: &RuleSet, layout: &Layout) -> Result<Self, SolveError> {
        let report = validate_stratification(rules);
        if !report.is_acyclic() {
            return Err(SolveError::Unstratified(report.cycles));
        }
        let mut order = report.order();
        for a in Action::PRECEDENCE {
            if !order.contains(&a) {
                order.insert(0, a);
            }
        }
        // Normal is settled last, after everything it defaults on.
        order.retain(|a| *a != Action::Normal);
        order.push(Action::Normal);

        let mut clauses = Vec::with_capacity(rules.clauses.len());
        for clause in &rules.clauses {
            let mut vars: Vec<String> = clause.head.args.clone();
            let mut body = Vec::new();
            let mut last_var = Vec::new();
            for lit in &clause.body {
                let mut ids = [0usize; 2];
                for (k, arg) in lit.args.iter().enumerate() {
                    ids[k] = match vars.iter().position(|v| v == arg) {
                        Some(i) => i,
                        None => {
                            vars.push(arg.clone());
                            vars.len() - 1
                        }
                    };
                }
                last_var.push(ids[..lit.args.len()].iter().copied().max().unwrap_or(0));
                body.push(match lit.action() {
                    Some(action) => Lit::Act { action, negated: lit.negated },
                    None => {
                        let e = layout.entry(&lit.predicate).ok_or_else(|| SolveError::Schema(lit.predicate.clone()))?;
                        Lit::Bg { offset: e.offset, arity: e.arity, vars: ids, negated: lit.negated }
                    }
                });
            }
            let mut ready = vec![Vec::new(); vars.len()];
            for (i, v) in last_var.into_iter().enumerate() {
                ready[v].push(i);
            }
            clauses.push(Compiled { head: clause.head_action(), vars, body, ready });
        }
        Ok(RuleProgram { clauses, order, slots: layout.slots, len: layout.len() })
    }

    pub fn len(&self) -> usize {
        self.clauses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.clauses.is_empty()
    }

    fn check_len(&self, g: &[bool]) -> Result<(), SolveError> {
        if g.len() != self.len {
            return Err(SolveError::Length { expected: self.len, got: g.len() });
        }
        Ok(())
    }

    fn lit_holds(&self, lit: &Lit, g: &[bool], assign: &[usize], acts: &[bool; 4]) -> bool {
        match *lit {
            Lit::Act { action, negated } => acts[action.index()] != negated,
            Lit::Bg { offset, arity, vars, negated } => {
                let idx = if arity == 1 {
                    offset + assign[vars[0]]
                } else {
                    offset + assign[vars[0]] * self.slots + assign[vars[1]]
                };
                g[idx] != negated
            }
        }
    }

    /// Lexicographically first satisfying assignment, head variable on
    /// slot 0. Literals are checked as soon as their variables are bound.
    fn witness(&self, c: &Compiled, g: &[bool], acts: &[bool; 4]) -> Option<Vec<usize>> {
        let mut assign = vec![0usize; c.vars.len()];
        if c.ready[0].iter().any(|&i| !self.lit_holds(&c.body[i], g, &assign, acts)) {
            return None;
        }
        if c.vars.len() == 1 {
            return Some(assign);
        }
        self.search(c, g, acts, &mut assign, 1).then_some(assign)
    }

    fn search(&self, c: &Compiled, g: &[bool], acts: &[bool; 4], assign: &mut Vec<usize>, k: usize) -> bool {
        for s in 0..self.slots {
            assign[k] = s;
            if c.ready[k].iter().all(|&i| self.lit_holds(&c.body[i], g, assign, acts))
                && (k + 1 == c.vars.len() || self.search(c, g, acts, assign, k + 1))
            {
                return true;
            }
        }
        false
    }

    /// Stratified least model for slot 0, possibly multi-hot. Normal is
    /// true when no other action is, or when a Normal clause fires.
    pub fn mandate(&self, g: &[bool]) -> [bool; 4] {
        let mut acts = [false; 4];
        for &a in &self.order {
            let fires = self.clauses.iter().any(|c| c.head == a && self.witness(c, g, &acts).is_some());
            acts[a.index()] = if a == Action::Normal {
                fires || !(acts[Action::Stop.index()] || acts[Action::Slow.index()] || acts[Action::Fast.index()])
            } else {
                fires
            };
        }
        acts
    }

    pub fn resolve(&self, g: &[bool]) -> Result<(ActionVector, Derivation), SolveError> {
        self.check_len(g)?;
        let acts = self.mandate(g);
        let on: Vec<Action> = Action::PRECEDENCE.into_iter().filter(|a| acts[a.index()]).collect();
        if on.len() != 1 {
            return Err(SolveError::Conflict(on));
        }
        let action = on[0];
        let fired = self
            .clauses
            .iter()
            .enumerate()
            .filter_map(|(i, c)| {
                self.witness(c, g, &acts).map(|w| FiredClause {
                    clause: i,
                    head: c.head,
                    witness: c.vars.iter().cloned().zip(w).collect(),
                })
            })
            .collect();
        Ok((ActionVector::one_hot(action), Derivation { action, fired }))
    }

    /// Does any tuple satisfy the body under the given action truths?
    /// Plain enumeration of every tuple, no pruning.
    fn body_sat_brute(&self, c: &Compiled, g: &[bool], acts: &[bool; 4]) -> bool {
        let free = c.vars.len() - 1;
        let total = self.slots.pow(free as u32);
        let mut assign = vec![0usize; c.vars.len()];
        for code in 0..total {
            let mut rest = code;
            for k in (1..c.vars.len()).rev() {
                assign[k] = rest % self.slots;
                rest /= self.slots;
            }
            if c.body.iter().all(|l| self.lit_holds(l, g, &assign, acts)) {
                return true;
            }
        }
        false
    }

    /// Enumerates all 16 truth assignments to the four actions and keeps
    /// those that are one-hot, match the completion of every clause group,
    /// and respect the Normal default. Returns the precedence-first model.
    pub fn resolve_exhaustive(&self, g: &[bool]) -> Result<ActionVector, SolveError> {
        self.check_len(g)?;
        let mut models = Vec::new();
        for code in 0u8..16 {
            let acts: [bool; 4] = std::array::from_fn(|i| code >> i & 1 == 1);
            if acts.iter().filter(|b| **b).count() != 1 {
                continue;
            }
            let mut ok = true;
            for a in [Action::Stop, Action::Slow, Action::Fast] {
                let support = self.clauses.iter().any(|c| c.head == a && self.body_sat_brute(c, g, &acts));
                ok &= acts[a.index()] == support;
            }
            let others = acts[Action::Stop.index()] || acts[Action::Slow.index()] || acts[Action::Fast.index()];
            ok &= acts[Action::Normal.index()] == !others;
            for c in self.clauses.iter().filter(|c| c.head == Action::Normal) {
                ok &= !self.body_sat_brute(c, g, &acts) || acts[Action::Normal.index()];
            }
            if ok {
                models.push(acts);
            }
        }
        models
            .into_iter()
            .map(ActionVector::from_bools)
            .min_by_key(|v| v.action().map(|a| a.rank()))
            .ok_or(SolveError::Conflict(Vec::new()))
    }

    /// Clauses whose body holds for slot 0 under the stratified mandate.
    pub fn satisfied(&self, g: &[bool]) -> Vec<usize> {
        let acts = self.mandate(g);
        (0..self.clauses.len()).filter(|&i| self.witness(&self.clauses[i], g, &acts).is_some()).collect()
    }

    /// Clauses whose body holds while the executed action differs from
    /// their head.
    pub fn violations(&self, g: &[bool], executed: Action) -> Vec<usize> {
        self.satisfied(g).into_iter().filter(|&i| self.clauses[i].head != executed).collect()
    }

    pub fn head(&self, clause: usize) -> Action {
        self.clauses[clause].head
    }
}

pub fn resolve_actions(g: &GroundingVector, rules: &RuleSet) -> Result<(ActionVector, Derivation), SolveError> {
    RuleProgram::compile(rules, &g.layout)?.resolve(&g.values)
}

pub fn resolve_actions_exhaustive(g: &GroundingVector, rules: &RuleSet) -> Result<ActionVector, SolveError> {
    RuleProgram::compile(rules, &g.layout)?.resolve_exhaustive(&g.values)
}

pub fn check_violation(g: &GroundingVector, executed: ActionVector, rules: &RuleSet) -> Result<Vec<usize>, SolveError> {
    let prog = RuleProgram::compile(rules, &g.layout)?;
    let Some(a) = executed.action() else {
        return Err(SolveError::Conflict(Action::PRECEDENCE.into_iter().filter(|a| executed.get(*a)).collect()));
    };
    Ok(prog.violations(&g.values, a))
}
