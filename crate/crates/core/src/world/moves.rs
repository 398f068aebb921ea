use std::collections::BTreeMap;

use super::agent::{Agent, AgentKind};
use super::map::Cell;
use super::state::{CityState, SpeedTable};
use crate::rules::Action;

/// Whether two agents may end a step on the same cell. Pedestrians share
/// with each other, agents that both hold still keep whatever overlap they
/// had, and a pedestrian or an ambulance may pull onto a car that is
/// standing still.
pub fn may_share(a: &Agent, a_moves: bool, b: &Agent, b_moves: bool) -> bool {
    let passes = |mover: &Agent, holder: &Agent| {
        holder.kind == AgentKind::Car && (mover.kind == AgentKind::Pedestrian || mover.has("IsAmbulance"))
    };
    (a.kind == AgentKind::Pedestrian && b.kind == AgentKind::Pedestrian)
        || (!a_moves && !b_moves)
        || (a_moves && !b_moves && passes(a, b))
        || (b_moves && !a_moves && passes(b, a))
}

/// Turns per-agent actions into path moves with no two agents ending on
/// the same cell unless [`may_share`] allows it. Agents may pass through
/// each other mid-move; only end cells conflict.
///
/// On a conflict the winner is a claimant that is not moving, else the
/// higher priority, else the lower id. A winning car pushes back every
/// other claimant; a winning pedestrian pushes back only cars. Losers
/// shorten their move by one cell and the check repeats until stable.
pub fn resolve_moves(state: &CityState, actions: &[Action], speeds: &SpeedTable) -> BTreeMap<usize, Vec<Cell>> {
    let agents = &state.agents;
    let mut steps: Vec<usize> = agents
        .iter()
        .zip(actions)
        .map(|(a, act)| speeds.of(a.kind).get(*act).min(a.path.len() - 1))
        .collect();
    loop {
        let mut claims: BTreeMap<Cell, Vec<usize>> = BTreeMap::new();
        for (i, a) in agents.iter().enumerate() {
            claims.entry(a.path[steps[i]]).or_default().push(i);
        }
        let mut changed = false;
        for ids in claims.values().filter(|ids| ids.len() > 1) {
            let compatible = ids.iter().enumerate().all(|(k, &a)| {
                ids[k + 1..].iter().all(|&b| may_share(&agents[a], steps[a] > 0, &agents[b], steps[b] > 0))
            });
            if compatible {
                continue;
            }
            let winner = *ids
                .iter()
                .min_by(|&&a, &&b| {
                    (steps[a] != 0)
                        .cmp(&(steps[b] != 0))
                        .then(agents[b].priority.total_cmp(&agents[a].priority))
                        .then(a.cmp(&b))
                })
                .unwrap();
            let car_wins = agents[winner].kind == AgentKind::Car;
            for &i in ids {
                if i != winner && steps[i] > 0 && (car_wins || agents[i].kind == AgentKind::Car) {
                    steps[i] -= 1;
                    changed = true;
                }
            }
        }
        if !changed {
            break;
        }
    }
    agents
        .iter()
        .enumerate()
        .filter(|(i, _)| steps[*i] > 0)
        .map(|(i, a)| (i, a.path[1..=steps[i]].to_vec()))
        .collect()
}
