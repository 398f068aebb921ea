//! Action-prediction dataset: per-frame agent features, labels, window
//! groundings and full-scene truth tables.

mod export;
mod features;
mod metrics;
pub mod nl;
mod rosters;

use std::path::PathBuf;

use thiserror::Error;

pub use export::{
    city_seed, export_dataset, frame_id, frame_path, generate_city, read_frame, split_cities, ExportConfig, FovRecord,
    Manifest, Rederiver, Splits, VapFrame, DATASET_VERSION,
};
pub use features::{features, AgentFeature};
pub use metrics::{class_weights, vap_metrics, weighted_accuracy, VapMetrics};
pub use nl::{parse_scene_nl, serialize_scene_nl, Atom, NlError, PredSig, Scene};
pub use rosters::{random_roster, RosterSource};

use crate::grounding::GroundingError;
use crate::registry::RegistryError;
use crate::render::RenderError;
use crate::rules::RuleError;
use crate::sim::SimError;
use crate::solver::SolveError;

#[derive(Debug, Error)]
pub enum VapError {
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Grounding(#[from] GroundingError),
    #[error(transparent)]
    Solve(#[from] SolveError),
    #[error(transparent)]
    Rules(#[from] RuleError),
    #[error(transparent)]
    Registry(#[from] RegistryError),
    #[error(transparent)]
    Render(#[from] RenderError),
    #[error("{0}")]
    Config(String),
    #[error("{preds} predictions for {labels} labels")]
    Misaligned { preds: usize, labels: usize },
    #[error("no labels to score")]
    Empty,
    #[error("action index {0} out of range")]
    BadAction(usize),
    #[error("{0}")]
    Format(String),
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
}
