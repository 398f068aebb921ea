use serde::{Deserialize, Serialize};

use super::ast::{Action, RuleSet};

/// Evaluation order of action predicates, or the dependency cycles that
/// prevent one.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StratificationReport {
    /// Layered strata, lowest first. Empty when cycles exist.
    pub strata: Vec<Vec<Action>>,
    pub cycles: Vec<Vec<Action>>,
}

impl StratificationReport {
    pub fn is_acyclic(&self) -> bool {
        self.cycles.is_empty()
    }

    /// Flattened evaluation order; within a stratum, by precedence.
    pub fn order(&self) -> Vec<Action> {
        self.strata.iter().flatten().copied().collect()
    }
}

/// `deps[h]` holds the actions whose value clause heads `h` read.
fn dependency_graph(rules: &RuleSet) -> ([bool; 4], [[bool; 4]; 4]) {
    let mut present = [false; 4];
    let mut deps = [[false; 4]; 4];
    for clause in &rules.clauses {
        let head = clause.head_action();
        present[head.index()] = true;
        for (dep, _) in clause.body_actions() {
            present[dep.index()] = true;
            deps[head.index()][dep.index()] = true;
        }
    }
    // Normal is the default: its value is a function of the other three.
    if present[Action::Normal.index()] {
        for a in [Action::Stop, Action::Slow, Action::Fast] {
            deps[Action::Normal.index()][a.index()] = true;
            present[a.index()] = true;
        }
    }
    (present, deps)
}

fn reaches(deps: &[[bool; 4]; 4], from: usize, to: usize) -> bool {
    let mut seen = [false; 4];
    let mut stack = vec![from];
    while let Some(n) = stack.pop() {
        for m in 0..4 {
            if deps[n][m] {
                if m == to {
                    return true;
                }
                if !seen[m] {
                    seen[m] = true;
                    stack.push(m);
                }
            }
        }
    }
    false
}

pub fn validate_stratification(rules: &RuleSet) -> StratificationReport {
    let (present, deps) = dependency_graph(rules);

    // Strongly connected components on four nodes: mutual reachability.
    let mut cycles: Vec<Vec<Action>> = Vec::new();
    let mut assigned = [false; 4];
    for a in Action::PRECEDENCE {
        let i = a.index();
        if !present[i] || assigned[i] || !reaches(&deps, i, i) {
            continue;
        }
        let mut comp: Vec<Action> = Action::PRECEDENCE
            .into_iter()
            .filter(|b| {
                let j = b.index();
                j == i || (reaches(&deps, i, j) && reaches(&deps, j, i))
            })
            .collect();
        comp.sort_by_key(|b| b.rank());
        for b in &comp {
            assigned[b.index()] = true;
        }
        cycles.push(comp);
    }
    if !cycles.is_empty() {
        return StratificationReport { strata: Vec::new(), cycles };
    }

    // Longest-path layering.
    let mut layer = [0usize; 4];
    for _ in 0..4 {
        for h in 0..4 {
            for d in 0..4 {
                if deps[h][d] && layer[h] < layer[d] + 1 {
                    layer[h] = layer[d] + 1;
                }
            }
        }
    }
    let depth = (0..4).filter(|&i| present[i]).map(|i| layer[i]).max();
    let mut strata = vec![Vec::new(); depth.map_or(0, |d| d + 1)];
    for a in Action::PRECEDENCE {
        if present[a.index()] {
            strata[layer[a.index()]].push(a);
        }
    }
    StratificationReport { strata, cycles }
}
