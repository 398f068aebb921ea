use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::metrics::EpisodeOutcome;
use super::reward::{compute_reward, RewardConfig};
use crate::mode::Mode;
use crate::presets::Split;
use crate::rules::Action;
use crate::seeding::stream;
use crate::sim::{run_episode, EgoControl, EpisodeLog, LogHeader, RewardContext, SimConfig, SimError, Simulator, StepRecord, EGO};
use crate::world::{CityState, Heading};

/// Step budget for the oracle probe that fixes each episode's horizon.
pub const PROBE_CAP: u64 = 400;

#[derive(Debug, Error)]
pub enum EnvError {
    #[error("{0} is not a driving mode")]
    NotDriving(Mode),
    #[error("reset required")]
    NotReset,
    #[error("episode finished")]
    Finished,
    #[error("action must be 0..3, got {0}")]
    BadAction(i64),
    #[error(transparent)]
    Sim(#[from] SimError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepInfo {
    pub t: u64,
    pub violations: Vec<usize>,
    pub action: usize,
    pub oracle_action: usize,
    pub constrained: bool,
    pub pose: [i32; 2],
    pub heading: Heading,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepResult {
    pub obs: Vec<f32>,
    pub reward: f64,
    pub terminated: bool,
    pub truncated: bool,
    pub info: StepInfo,
}

/// Per-episode numbers fixed at reset.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpisodeSpec {
    pub seed: u64,
    pub path_len: usize,
    /// Steps the rule-following ego needs; `probe_cap` if it never arrives.
    pub oracle_steps: u64,
    pub oracle_reached: bool,
    pub horizon: u64,
    pub truncate_at: u64,
}

struct Episode {
    sim: Simulator,
    spec: EpisodeSpec,
    state: CityState,
    log: EpisodeLog,
    done: bool,
    reached: bool,
    ret: f64,
    constrained: u64,
    violations: u64,
}

/// Single-session driving environment. The observation is the ego's
/// grounding vector as floats.
pub struct SpfEnv {
    base: SimConfig,
    pub reward: RewardConfig,
    pub probe_cap: u64,
    episode: Option<Episode>,
}

pub fn make_env(mode: Mode, split: Split, seed: u64) -> Result<SpfEnv, EnvError> {
    SpfEnv::new(SimConfig::preset(mode, split, seed)?)
}

/// Runs the rule-following ego until it arrives or `cap` steps pass.
/// Returns (steps, reached, constrained steps).
pub fn probe(sim: &Simulator, cap: u64) -> Result<(u64, bool, u64), SimError> {
    let log = run_episode(sim, None, cap, true, None)?;
    let reached = log.steps.last().is_some_and(|s| s.arrived.contains(&EGO));
    let constrained = log.steps.iter().filter(|s| s.ego_constrained).count() as u64;
    Ok((if reached { log.steps.len() as u64 } else { cap }, reached, constrained))
}

impl SpfEnv {
    pub fn new(base: SimConfig) -> Result<Self, EnvError> {
        if !base.mode.is_spf() {
            return Err(EnvError::NotDriving(base.mode));
        }
        // Fail early on a bad config.
        Simulator::new(base.clone())?;
        Ok(SpfEnv { reward: RewardConfig::preset(base.mode), base, probe_cap: PROBE_CAP, episode: None })
    }

    pub fn mode(&self) -> Mode {
        self.base.mode
    }

    pub fn config(&self) -> &SimConfig {
        &self.base
    }

    pub fn obs_len(&self) -> usize {
        Simulator::new(self.base.clone()).map(|s| s.grounder().layout.len()).unwrap_or(0)
    }

    pub fn spec(&self) -> Option<&EpisodeSpec> {
        self.episode.as_ref().map(|e| &e.spec)
    }

    pub fn state(&self) -> Option<&CityState> {
        self.episode.as_ref().map(|e| &e.state)
    }

    pub fn is_done(&self) -> bool {
        self.episode.as_ref().is_some_and(|e| e.done)
    }

    pub fn reset(&mut self, seed: u64) -> Result<Vec<f32>, EnvError> {
        let sim = Simulator::new(self.base.with_seed(seed))?;
        let (oracle_steps, oracle_reached, _) = probe(&sim, self.probe_cap)?;
        let state = sim.cfg.initial_state()?;
        let path_len = state.agents[EGO].path.len();
        let spec = EpisodeSpec {
            seed,
            path_len,
            oracle_steps,
            oracle_reached,
            horizon: 2 * oracle_steps,
            truncate_at: 3 * oracle_steps,
        };
        let header = LogHeader {
            version: crate::sim::LOG_VERSION,
            config_hash: sim.cfg.config_hash(),
            seed,
            mode: sim.cfg.mode,
            agents: state.agents.len(),
            ego_control: EgoControl::External,
            stop_at_goal: true,
            max_steps: spec.truncate_at,
            reward: Some(self.context(&spec)),
        };
        let (_, g) = sim.observe(&state, EGO)?;
        self.episode = Some(Episode {
            sim,
            spec,
            state,
            log: EpisodeLog::new(header),
            done: false,
            reached: false,
            ret: 0.0,
            constrained: 0,
            violations: 0,
        });
        Ok(g.to_floats())
    }

    fn context(&self, spec: &EpisodeSpec) -> RewardContext {
        RewardContext { config: self.reward, path_len: spec.path_len, horizon: spec.horizon }
    }

    pub fn step_index(&mut self, action: i64) -> Result<StepResult, EnvError> {
        let a = usize::try_from(action).ok().and_then(Action::from_index).ok_or(EnvError::BadAction(action))?;
        self.step(a)
    }

    pub fn step(&mut self, action: Action) -> Result<StepResult, EnvError> {
        let reward_cfg = self.reward;
        let ep = self.episode.as_mut().ok_or(EnvError::NotReset)?;
        if ep.done {
            return Err(EnvError::Finished);
        }
        let (next, report) = ep.sim.step(&ep.state, Some(action))?;
        let reward = compute_reward(&report, &reward_cfg, report.t, ep.spec.path_len, ep.spec.horizon);
        ep.log.steps.push(StepRecord::from_report(&report, &next, Some(reward)));
        let ego = report.ego();
        let terminated = report.arrived.contains(&EGO);
        let truncated = !terminated && next.t >= ep.spec.truncate_at;
        ep.ret += reward;
        ep.constrained += u64::from(report.ego_constrained());
        ep.violations += ego.violations.len() as u64;
        ep.reached |= terminated;
        ep.done = terminated || truncated;
        let pos = next.agents[EGO].pos;
        let info = StepInfo {
            t: next.t,
            violations: ego.violations.clone(),
            action: ego.action.index(),
            oracle_action: ego.oracle.index(),
            constrained: report.ego_constrained(),
            pose: [pos.x, pos.y],
            heading: next.agents[EGO].heading,
        };
        let (_, g) = ep.sim.observe(&next, EGO)?;
        ep.state = next;
        Ok(StepResult { obs: g.to_floats(), reward, terminated, truncated, info })
    }

    /// Rule-mandated action for the ego in the current state.
    pub fn oracle_action(&self) -> Result<Action, EnvError> {
        let ep = self.episode.as_ref().ok_or(EnvError::NotReset)?;
        Ok(ep.sim.oracle_action(&ep.state, EGO)?)
    }

    pub fn outcome(&self) -> Result<EpisodeOutcome, EnvError> {
        let ep = self.episode.as_ref().ok_or(EnvError::NotReset)?;
        let steps = ep.state.t;
        Ok(EpisodeOutcome {
            seed: ep.spec.seed,
            succ: ep.reached && steps <= ep.spec.horizon && ep.violations == 0,
            dec: ep.constrained > 0 && ep.violations == 0,
            ret: ep.ret,
            steps,
            oracle_steps: ep.spec.oracle_steps,
            constrained_steps: ep.constrained,
            violations: ep.violations,
            reached_goal: ep.reached,
        })
    }

    pub fn log(&self) -> Option<&EpisodeLog> {
        self.episode.as_ref().map(|e| &e.log)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PolicyKind {
    Oracle,
    Random,
}

impl std::str::FromStr for PolicyKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "oracle" => Ok(PolicyKind::Oracle),
            "random" => Ok(PolicyKind::Random),
            _ => Err(format!("unknown policy `{s}` (expected oracle or random)")),
        }
    }
}

impl std::fmt::Display for PolicyKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            PolicyKind::Oracle => "oracle",
            PolicyKind::Random => "random",
        })
    }
}

pub fn random_policy_rng(seed: u64) -> ChaCha8Rng {
    stream(seed, "random-policy")
}

pub fn random_action(rng: &mut ChaCha8Rng) -> Action {
    Action::ALL[rng.gen_range(0..4)]
}

/// Plays one full episode of `policy` from `seed`.
pub fn play(env: &mut SpfEnv, policy: PolicyKind, seed: u64) -> Result<EpisodeOutcome, EnvError> {
    env.reset(seed)?;
    let mut rng = random_policy_rng(seed);
    while !env.is_done() {
        let a = match policy {
            PolicyKind::Oracle => env.oracle_action()?,
            PolicyKind::Random => random_action(&mut rng),
        };
        env.step(a)?;
    }
    env.outcome()
}

/// Seeds from `base` upward whose rule-following episode arrives within the
/// probe cap and meets at least one constraint. Scanning stops after
/// `count * 20` candidates.
pub fn curated_seeds(cfg: &SimConfig, base: u64, count: usize, cap: u64, jobs: usize) -> Result<Vec<u64>, SimError> {
    let mut out = Vec::with_capacity(count);
    let chunk = jobs.max(1) as u64 * 4;
    let mut next = base;
    let limit = base + count as u64 * 20;
    while out.len() < count && next < limit {
        let batch: Vec<u64> = (next..(next + chunk).min(limit)).collect();
        next += batch.len() as u64;
        let keep: Vec<Result<Option<u64>, SimError>> = pool(jobs).install(|| {
            batch
                .par_iter()
                .map(|&s| {
                    let sim = Simulator::new(cfg.with_seed(s))?;
                    let (_, reached, constrained) = probe(&sim, cap)?;
                    Ok((reached && constrained > 0).then_some(s))
                })
                .collect()
        });
        for k in keep {
            if let Some(s) = k? {
                if out.len() < count {
                    out.push(s);
                }
            }
        }
    }
    Ok(out)
}

pub(crate) fn pool(jobs: usize) -> rayon::ThreadPool {
    rayon::ThreadPoolBuilder::new().num_threads(jobs.max(1)).build().expect("thread pool")
}

pub fn evaluate(cfg: &SimConfig, policy: PolicyKind, seeds: &[u64], jobs: usize) -> Result<Vec<EpisodeOutcome>, EnvError> {
    pool(jobs).install(|| {
        seeds
            .par_iter()
            .map(|&s| {
                let mut env = SpfEnv::new(cfg.clone())?;
                play(&mut env, policy, s)
            })
            .collect()
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn easy_reset_has_85_values_and_stop_holds_pose() {
        let mut env = make_env(Mode::SpfEasy, Split::Train, 0).unwrap();
        let obs = env.reset(3).unwrap();
        assert_eq!(obs.len(), 85);
        let start = env.state().unwrap().agents[EGO].pos;
        let r = env.step(Action::Stop).unwrap();
        assert_eq!(r.info.pose, [start.x, start.y]);
        assert_eq!(r.info.t, 1);
    }

    #[test]
    fn step_before_reset_fails() {
        let mut env = make_env(Mode::SpfHard, Split::Train, 0).unwrap();
        assert!(matches!(env.step(Action::Stop), Err(EnvError::NotReset)));
        env.reset(1).unwrap();
        assert!(matches!(env.step_index(4), Err(EnvError::BadAction(4))));
    }

    #[test]
    fn random_stream_is_reproducible() {
        let a: Vec<_> = (0..20).scan(random_policy_rng(9), |r, _| Some(random_action(r))).collect();
        let b: Vec<_> = (0..20).scan(random_policy_rng(9), |r, _| Some(random_action(r))).collect();
        assert_eq!(a, b);
    }
}
