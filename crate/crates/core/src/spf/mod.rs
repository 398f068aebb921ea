//! Safe path following: the ego drives to its goal while obeying the rules.

mod env;
mod metrics;
mod reward;
pub mod server;

pub use env::{
    curated_seeds, evaluate, make_env, play, probe, random_action, random_policy_rng, EnvError, EpisodeSpec, PolicyKind,
    SpfEnv, StepInfo, StepResult, PROBE_CAP,
};
pub(crate) use env::pool;
pub use metrics::{compute_metrics, mean, EmptyOutcomes, EpisodeOutcome, Metrics};
pub use reward::{compute_reward, reward_value, RewardConfig};
