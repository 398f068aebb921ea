use serde::{Deserialize, Serialize};

use crate::mode::Mode;
use crate::rules::Action;
use crate::sim::StepReport;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RewardConfig {
    /// Weight per violated clause.
    pub rule_weight: f64,
    /// Per-action cost, indexed Slow, Normal, Fast, Stop.
    pub action_costs: [f64; 4],
    pub overtime: f64,
    pub gamma: f64,
}

impl RewardConfig {
    pub fn preset(mode: Mode) -> Self {
        match mode {
            Mode::SpfExpert => RewardConfig {
                rule_weight: -5.0,
                action_costs: [-2.0, -1.0, -2.0, -3.0],
                overtime: -3.0,
                gamma: 0.99,
            },
            _ => RewardConfig {
                rule_weight: -10.0,
                action_costs: [-2.0, 0.0, -2.0, -5.0],
                overtime: -3.0,
                gamma: 0.99,
            },
        }
    }

    pub fn cost(&self, a: Action) -> f64 {
        self.action_costs[a.index()]
    }
}

/// `w * violations + cost(a) / L`, plus the overtime penalty once `t`
/// exceeds `horizon`.
pub fn reward_value(violations: usize, action: Action, cfg: &RewardConfig, t: u64, path_len: usize, horizon: u64) -> f64 {
    let mut r = cfg.rule_weight * violations as f64;
    r += cfg.cost(action) / path_len.max(1) as f64;
    if t > horizon {
        r += cfg.overtime;
    }
    r
}

pub fn compute_reward(report: &StepReport, cfg: &RewardConfig, t: u64, path_len: usize, horizon: u64) -> f64 {
    reward_value(report.ego_violations().len(), report.ego().action, cfg, t, path_len, horizon)
}
