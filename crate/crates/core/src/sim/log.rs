use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{SimConfig, SimError, Simulator, StepReport, EGO};
use crate::grounding::GroundingVector;
use crate::mode::Mode;
use crate::rules::Action;
use crate::solver::Derivation;
use crate::spf::{compute_reward, RewardConfig};
use crate::world::{CityState, Heading};

pub const LOG_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EgoControl {
    Oracle,
    External,
}

/// What the per-step reward needs beyond the step itself.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RewardContext {
    pub config: RewardConfig,
    /// Ego's initial path length in cells.
    pub path_len: usize,
    /// Steps after which the overtime penalty applies.
    pub horizon: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogHeader {
    pub version: u32,
    pub config_hash: String,
    pub seed: u64,
    pub mode: Mode,
    pub agents: usize,
    pub ego_control: EgoControl,
    pub stop_at_goal: bool,
    pub max_steps: u64,
    pub reward: Option<RewardContext>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Pose {
    pub x: i32,
    pub y: i32,
    pub heading: Heading,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub t: u64,
    /// Short hash of each agent's grounding bits.
    pub digests: Vec<String>,
    pub actions: Vec<usize>,
    pub derivations: Vec<Derivation>,
    pub violations: Vec<Vec<usize>>,
    /// Poses after the step.
    pub poses: Vec<Pose>,
    pub ego_grounding: String,
    pub ego_constrained: bool,
    pub arrived: Vec<usize>,
    pub replanned: Vec<usize>,
    pub reward: Option<f64>,
}

fn digest(g: &GroundingVector) -> String {
    hex::encode(&Sha256::digest(g.to_bits().as_bytes())[..8])
}

impl StepRecord {
    pub fn from_report(report: &StepReport, next: &CityState, reward: Option<f64>) -> Self {
        StepRecord {
            t: report.t,
            digests: report.agents.iter().map(|a| digest(&a.grounding)).collect(),
            actions: report.agents.iter().map(|a| a.action.index()).collect(),
            derivations: report.agents.iter().map(|a| a.derivation.clone()).collect(),
            violations: report.agents.iter().map(|a| a.violations.clone()).collect(),
            poses: next.agents.iter().map(|a| Pose { x: a.pos.x, y: a.pos.y, heading: a.heading }).collect(),
            ego_grounding: report.ego().grounding.to_bits(),
            ego_constrained: report.ego_constrained(),
            arrived: report.arrived.clone(),
            replanned: report.replanned.clone(),
            reward,
        }
    }

    pub fn ego_action(&self) -> Option<Action> {
        self.actions.first().and_then(|&i| Action::from_index(i))
    }
}

/// Newline-delimited JSON: one header line, then one line per step.
#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeLog {
    pub header: LogHeader,
    pub steps: Vec<StepRecord>,
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
enum Line {
    Header(LogHeader),
    Step(StepRecord),
}

impl EpisodeLog {
    pub fn new(header: LogHeader) -> Self {
        EpisodeLog { header, steps: Vec::new() }
    }

    pub fn to_jsonl(&self) -> String {
        let mut out = serde_json::to_string(&Line::Header(self.header.clone())).expect("header serializes");
        out.push('\n');
        for s in &self.steps {
            out.push_str(&serde_json::to_string(&Line::Step(s.clone())).expect("step serializes"));
            out.push('\n');
        }
        out
    }

    pub fn from_jsonl(text: &str) -> Result<Self, SimError> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty()).enumerate();
        let header = match lines.next() {
            Some((_, l)) => match serde_json::from_str(l) {
                Ok(Line::Header(h)) => h,
                Ok(Line::Step(_)) => return Err(SimError::Log("first line must be the header".into())),
                Err(e) => return Err(SimError::Log(format!("line 1: {e}"))),
            },
            None => return Err(SimError::Log("empty log".into())),
        };
        if header.version != LOG_VERSION {
            return Err(SimError::Log(format!("unsupported version {}", header.version)));
        }
        let mut steps = Vec::new();
        for (i, l) in lines {
            match serde_json::from_str(l) {
                Ok(Line::Step(s)) => steps.push(s),
                Ok(Line::Header(_)) => return Err(SimError::Log(format!("line {}: second header", i + 1))),
                Err(e) => return Err(SimError::Log(format!("line {}: {e}", i + 1))),
            }
        }
        Ok(EpisodeLog { header, steps })
    }

    pub fn hash(&self) -> String {
        hex::encode(Sha256::digest(self.to_jsonl().as_bytes()))
    }

    pub fn write(&self, path: &Path) -> std::io::Result<()> {
        std::fs::write(path, self.to_jsonl())
    }

    pub fn read(path: &Path) -> Result<Self, SimError> {
        let text = std::fs::read_to_string(path).map_err(|e| SimError::Log(format!("{}: {e}", path.display())))?;
        Self::from_jsonl(&text)
    }

    pub fn total_reward(&self) -> f64 {
        self.steps.iter().filter_map(|s| s.reward).sum()
    }
}

/// Ego policy: sees the full state (oracle-style agents may use it) and the
/// ego's own grounding.
pub type Policy<'a> = dyn FnMut(&CityState, &GroundingVector) -> Result<Action, String> + 'a;

pub(crate) fn reward_for(ctx: Option<&RewardContext>, report: &StepReport) -> Option<f64> {
    ctx.map(|c| compute_reward(report, &c.config, report.t, c.path_len, c.horizon))
}

/// Runs until `max_steps` or, with `stop_at_goal`, the ego's first
/// arrival. Without a policy the ego follows the rules like everyone else.
pub fn run_episode(
    sim: &Simulator,
    mut policy: Option<&mut Policy<'_>>,
    max_steps: u64,
    stop_at_goal: bool,
    reward: Option<RewardContext>,
) -> Result<EpisodeLog, SimError> {
    let mut state = sim.cfg.initial_state()?;
    let header = LogHeader {
        version: LOG_VERSION,
        config_hash: sim.cfg.config_hash(),
        seed: sim.cfg.seed,
        mode: sim.cfg.mode,
        agents: state.agents.len(),
        ego_control: if policy.is_some() { EgoControl::External } else { EgoControl::Oracle },
        stop_at_goal,
        max_steps,
        reward,
    };
    let mut log = EpisodeLog::new(header);
    for _ in 0..max_steps {
        let ego_action = match policy.as_mut() {
            Some(p) => {
                let (_, g) = sim.observe(&state, EGO)?;
                Some(p(&state, &g).map_err(|msg| SimError::Policy { t: state.t, msg })?)
            }
            None => None,
        };
        let (next, report) = sim.step(&state, ego_action)?;
        log.steps.push(StepRecord::from_report(&report, &next, reward_for(reward.as_ref(), &report)));
        state = next;
        if stop_at_goal && report.arrived.contains(&EGO) {
            break;
        }
    }
    Ok(log)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "result", rename_all = "snake_case")]
pub enum ReplayReport {
    Exact { steps: usize },
    Divergent { t: u64 },
}

/// Re-runs a log under `cfg`, feeding the logged ego actions when the ego
/// was externally controlled, and compares record by record.
pub fn replay(log: &EpisodeLog, cfg: &SimConfig) -> Result<ReplayReport, SimError> {
    replay_visit(log, cfg, |_| ())
}

/// Every state of a verified replay, initial state first.
pub fn replay_states(log: &EpisodeLog, cfg: &SimConfig) -> Result<Vec<CityState>, SimError> {
    let mut states = Vec::with_capacity(log.steps.len() + 1);
    match replay_visit(log, cfg, |s| states.push(s.clone()))? {
        ReplayReport::Exact { .. } => Ok(states),
        ReplayReport::Divergent { t } => Err(SimError::Log(format!("replay diverges at t={t}"))),
    }
}

fn replay_visit(log: &EpisodeLog, cfg: &SimConfig, mut visit: impl FnMut(&CityState)) -> Result<ReplayReport, SimError> {
    let actual = cfg.config_hash();
    if actual != log.header.config_hash {
        return Err(SimError::HashMismatch { logged: log.header.config_hash.clone(), actual });
    }
    let sim = Simulator::new(cfg.clone())?;
    let mut state = cfg.initial_state()?;
    if let Some(ctx) = &log.header.reward {
        if ctx.path_len != state.agents[EGO].path.len() {
            return Ok(ReplayReport::Divergent { t: 0 });
        }
    }
    visit(&state);
    for (i, rec) in log.steps.iter().enumerate() {
        let ego_action = match log.header.ego_control {
            EgoControl::External => match rec.ego_action() {
                Some(a) => Some(a),
                None => return Ok(ReplayReport::Divergent { t: rec.t }),
            },
            EgoControl::Oracle => None,
        };
        let (next, report) = sim.step(&state, ego_action)?;
        let again = StepRecord::from_report(&report, &next, reward_for(log.header.reward.as_ref(), &report));
        if &again != rec {
            return Ok(ReplayReport::Divergent { t: rec.t });
        }
        state = next;
        visit(&state);
        if log.header.stop_at_goal && report.arrived.contains(&EGO) {
            if let Some(extra) = log.steps.get(i + 1) {
                return Ok(ReplayReport::Divergent { t: extra.t });
            }
            break;
        }
    }
    Ok(ReplayReport::Exact { steps: log.steps.len() })
}
