use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde_json::json;

use citylogic::config::{validate, ConfigSet};
use citylogic::grounding::Layout;
use citylogic::presets::{self, Split};
use citylogic::PredicateRegistry;
use citylogic::render::{render_frame_with, write_image, AssetLibrary, ImageFormat, RenderOptions};
use citylogic::sim::{replay, replay_states, run_episode, EpisodeLog, ReplayReport, SimConfig, Simulator};
use citylogic::spf::{self, compute_metrics, curated_seeds, evaluate, PolicyKind, PROBE_CAP};
use citylogic::vap::{self, ExportConfig, Manifest, RosterSource};
use citylogic::Mode;

/// Exit status for checks that ran and found a problem.
struct Invalid(String);

impl std::fmt::Debug for Invalid {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::fmt::Display for Invalid {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Invalid {}

#[derive(Parser)]
#[command(name = "citylogic", version, about = "Rule-driven urban grid simulator")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args, Clone)]
struct Common {
    /// Config root with registry.json, maps/, rules/ and rosters/.
    /// Without it the built-in configs are used.
    #[arg(long)]
    configs: Option<PathBuf>,
    /// Worker threads for episodes, cities and frames.
    #[arg(long, default_value_t = 1)]
    jobs: usize,
}

#[derive(Subcommand)]
enum Cmd {
    /// Parse every config file and run the cross-file checks.
    Validate {
        #[command(flatten)]
        common: Common,
    },
    /// Print the grounding layout of a mode as (predicate, tuple, index) rows.
    Schema {
        #[arg(long)]
        mode: Mode,
        #[arg(long, default_value_t = presets::SLOTS)]
        slots: usize,
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
    /// Run whole cities under the rules and replay their logs.
    #[command(subcommand)]
    Sim(SimCmd),
    /// Ego-driving environment: evaluate policies or serve it over JSON lines.
    #[command(subcommand)]
    Spf(SpfCmd),
    /// Action-prediction datasets: export, prompts and scoring.
    #[command(subcommand)]
    Vap(VapCmd),
    /// Render every state of an episode log to images.
    Render {
        #[arg(long)]
        episode: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value = "png")]
        format: String,
        #[arg(long, default_value_t = 32)]
        tile: u32,
        /// Icon overrides laid out as <dir>/<semantic>/<k>.png.
        #[arg(long)]
        assets: Option<PathBuf>,
        /// Icon selection seed; defaults to the episode seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Overlay planned paths.
        #[arg(long)]
        paths: bool,
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Subcommand)]
enum SimCmd {
    /// Run every agent under the rules and write a JSONL log.
    Run {
        #[arg(long)]
        mode: Mode,
        #[arg(long, default_value = "train", value_parser = parse_split)]
        split: Split,
        #[arg(long, default_value_t = 200)]
        steps: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        log: PathBuf,
        /// End at the ego's first arrival.
        #[arg(long)]
        stop_at_goal: bool,
        #[command(flatten)]
        common: Common,
    },
    /// Re-run a log and compare it step by step.
    Replay {
        #[arg(long)]
        log: PathBuf,
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Subcommand)]
enum SpfCmd {
    /// Evaluate a built-in policy on curated test episodes.
    Run {
        #[arg(long)]
        mode: Mode,
        #[arg(long, default_value = "oracle")]
        policy: PolicyKind,
        #[arg(long, default_value_t = 100)]
        episodes: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value = "test", value_parser = parse_split)]
        split: Split,
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
    /// Serve the environment over newline-delimited JSON.
    Serve {
        #[arg(long)]
        mode: Mode,
        #[arg(long, default_value = "train", value_parser = parse_split)]
        split: Split,
        /// Listen on this address instead of stdin/stdout.
        #[arg(long)]
        tcp: Option<String>,
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Subcommand)]
enum VapCmd {
    /// Simulate cities and write frames, labels and a manifest.
    Export {
        #[arg(long, default_value = "vap-hard", value_parser = parse_vap_mode)]
        mode: Mode,
        #[arg(long, default_value = "random")]
        config: RosterSource,
        #[arg(long, default_value_t = 100)]
        cities: usize,
        #[arg(long, default_value_t = 100)]
        steps: u64,
        #[arg(long, default_value_t = 10)]
        burn_in: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 32)]
        tile: u32,
        /// Also render each frame (png or ppm).
        #[arg(long)]
        images: Option<String>,
        #[arg(long)]
        assets: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Print the text prompt for one agent of one frame.
    Nl {
        /// Frame JSON file, or a frame id when --data is given.
        #[arg(long)]
        frame: String,
        #[arg(long)]
        agent: usize,
        #[arg(long)]
        data: Option<PathBuf>,
    },
    /// Score predictions against exported labels.
    Score {
        /// JSON object from frame id to per-agent action indices.
        #[arg(long)]
        pred: PathBuf,
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn parse_split(s: &str) -> Result<Split, String> {
    match s {
        "train" => Ok(Split::Train),
        "test" => Ok(Split::Test),
        _ => Err(format!("unknown split `{s}` (train|test)")),
    }
}

/// Bare `easy`/`hard` mean the prediction modes here.
fn parse_vap_mode(s: &str) -> Result<Mode, String> {
    let m = match s {
        "easy" => Mode::VapEasy,
        "hard" => Mode::VapHard,
        _ => s.parse::<Mode>().map_err(|e| e.to_string())?,
    };
    if m.is_spf() {
        return Err(format!("{m} is not a prediction mode"));
    }
    Ok(m)
}

fn configs(common: &Common) -> Result<ConfigSet> {
    match &common.configs {
        Some(dir) => ConfigSet::from_dir(dir).with_context(|| format!("reading configs from {}", dir.display())),
        None => Ok(ConfigSet::shipped()),
    }
}

/// A log that cannot be read is a runtime error; one that does not parse
/// is invalid input.
fn read_log(path: &Path) -> Result<EpisodeLog> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    EpisodeLog::from_jsonl(&text).map_err(|e| Invalid(format!("{}: {e}", path.display())).into())
}

fn write_json(path: &Path, value: &serde_json::Value) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn emit(out: Option<&Path>, value: &serde_json::Value) -> Result<()> {
    match out {
        Some(p) => write_json(p, value),
        None => {
            println!("{}", serde_json::to_string_pretty(value)?);
            Ok(())
        }
    }
}

/// The config a log was produced under, found by hash among both splits.
fn log_config(set: &ConfigSet, log: &EpisodeLog) -> Result<SimConfig> {
    for split in [Split::Train, Split::Test] {
        let mut cfg = set.sim_config(log.header.mode, split, log.header.seed)?;
        cfg.max_steps = log.header.max_steps;
        if cfg.config_hash() == log.header.config_hash {
            return Ok(cfg);
        }
        cfg.max_steps = 1000;
        if cfg.config_hash() == log.header.config_hash {
            return Ok(cfg);
        }
    }
    Err(Invalid(format!("no {} config matches the log's config hash {}", log.header.mode, log.header.config_hash)).into())
}

fn run(cli: Cli) -> Result<()> {
    match cli.cmd {
        Cmd::Validate { common } => {
            let set = configs(&common).map_err(|e| Invalid(format!("{e:#}")))?;
            let diags = validate(&set);
            if diags.is_empty() {
                println!("ok: {} rule files, {} rosters", set.rules.len(), set.rosters.len());
                return Ok(());
            }
            for d in &diags {
                eprintln!("{d}");
            }
            Err(Invalid(format!("{} problem(s)", diags.len())).into())
        }
        Cmd::Schema { mode, slots, out, common } => {
            let registry = PredicateRegistry::from_json(&configs(&common)?.registry)?;
            let layout = Layout::for_mode(&registry, mode, slots)?;
            emit(out.as_deref(), &json!({ "mode": mode.to_string(), "slots": slots, "len": layout.len(), "features": layout.schema() }))
        }
        Cmd::Sim(SimCmd::Run { mode, split, steps, seed, log, stop_at_goal, common }) => {
            let mut cfg = configs(&common)?.sim_config(mode, split, seed)?;
            cfg.max_steps = steps;
            let sim = Simulator::new(cfg)?;
            let episode = run_episode(&sim, None, steps, stop_at_goal, None)?;
            episode.write(&log).with_context(|| format!("writing {}", log.display()))?;
            println!("{} steps, hash {}", episode.steps.len(), episode.hash());
            Ok(())
        }
        Cmd::Sim(SimCmd::Replay { log, common }) => {
            let episode = read_log(&log)?;
            let cfg = log_config(&configs(&common)?, &episode)?;
            match replay(&episode, &cfg)? {
                ReplayReport::Exact { steps } => {
                    println!("exact ({steps} steps)");
                    Ok(())
                }
                ReplayReport::Divergent { t } => Err(Invalid(format!("divergent at t={t}")).into()),
            }
        }
        Cmd::Spf(SpfCmd::Run { mode, policy, episodes, seed, split, out, common }) => {
            if !mode.is_spf() {
                bail!("{mode} is not a driving mode");
            }
            let cfg = configs(&common)?.sim_config(mode, split, seed)?;
            let seeds = curated_seeds(&cfg, seed, episodes, PROBE_CAP, common.jobs)?;
            if seeds.len() < episodes {
                eprintln!("warning: only {} of {episodes} candidate episodes qualified", seeds.len());
            }
            let random = evaluate(&cfg, PolicyKind::Random, &seeds, common.jobs)?;
            let random_metrics = compute_metrics(&random, 0.0)?;
            let outcomes = match policy {
                PolicyKind::Random => random,
                PolicyKind::Oracle => evaluate(&cfg, policy, &seeds, common.jobs)?,
            };
            let metrics = compute_metrics(&outcomes, random_metrics.mean_return)?;
            let report = json!({
                "mode": mode,
                "split": split,
                "policy": policy.to_string(),
                "seeds": seeds,
                "metrics": metrics,
                "outcomes": outcomes,
            });
            emit(out.as_deref(), &report)?;
            eprintln!("{mode} {policy}: TSR {:.2} DSR {:.2} score {:.3}", metrics.tsr, metrics.dsr, metrics.score);
            Ok(())
        }
        Cmd::Spf(SpfCmd::Serve { mode, split, tcp, common }) => {
            let cfg = configs(&common)?.sim_config(mode, split, 0)?;
            match tcp {
                Some(addr) => spf::server::serve_tcp(cfg, addr.as_str())?,
                None => spf::server::serve_stdio(cfg)?,
            }
            Ok(())
        }
        Cmd::Vap(VapCmd::Export {
            mode,
            config,
            cities,
            steps,
            burn_in,
            seed,
            tile,
            images,
            assets,
            out,
            common,
        }) => {
            if common.configs.is_some() {
                bail!("vap export uses the built-in configs");
            }
            let mut cfg = ExportConfig::new(mode, cities, steps, burn_in, seed);
            cfg.roster = config;
            cfg.tile = tile;
            cfg.jobs = common.jobs;
            cfg.images = images.map(|f| f.parse::<ImageFormat>()).transpose()?;
            if let Some(dir) = assets {
                cfg.assets = Some(Arc::new(AssetLibrary::from_dir(&dir, Some(&AssetLibrary::procedural(tile)))?));
            }
            let m = vap::export_dataset(&cfg, &out)?;
            println!(
                "{} frames, classes (slow, normal, fast, stop) {:?}, manifest hash {}",
                m.frames,
                m.class_counts,
                m.hash()
            );
            Ok(())
        }
        Cmd::Vap(VapCmd::Nl { frame, agent, data }) => {
            let path = match &data {
                Some(dir) => vap::frame_path(dir, &frame),
                None => PathBuf::from(&frame),
            };
            let f = vap::read_frame(&path)?;
            print!("{}", vap::serialize_scene_nl(&f.scene, agent)?);
            Ok(())
        }
        Cmd::Vap(VapCmd::Score { pred, data, out }) => {
            let text = std::fs::read_to_string(&pred).with_context(|| format!("reading {}", pred.display()))?;
            let preds: std::collections::BTreeMap<String, Vec<usize>> =
                serde_json::from_str(&text).with_context(|| format!("parsing {}", pred.display()))?;
            let manifest = Manifest::read(&data)?;
            let (mut p, mut l) = (Vec::new(), Vec::new());
            for (id, actions) in &preds {
                let frame = vap::read_frame(&vap::frame_path(&data, id))?;
                if actions.len() != frame.labels.len() {
                    return Err(Invalid(format!("frame {id}: {} predictions for {} agents", actions.len(), frame.labels.len())).into());
                }
                p.extend_from_slice(actions);
                l.extend_from_slice(&frame.labels);
            }
            let m = vap::vap_metrics(&p, &l)?;
            let report = json!({ "mode": manifest.mode, "frames": preds.len(), "metrics": m });
            emit(out.as_deref(), &report)
        }
        Cmd::Render { episode, out, format, tile, assets, seed, paths, common } => {
            let format: ImageFormat = format.parse()?;
            let log = read_log(&episode)?;
            let cfg = log_config(&configs(&common)?, &log)?;
            let states = replay_states(&log, &cfg)?;
            let base = AssetLibrary::procedural(tile);
            let lib = match assets {
                Some(dir) => AssetLibrary::from_dir(&dir, Some(&base))?,
                None => base,
            };
            std::fs::create_dir_all(&out).with_context(|| format!("creating {}", out.display()))?;
            let seed = seed.unwrap_or(log.header.seed);
            let opts = RenderOptions { paths };
            let pool = rayon::ThreadPoolBuilder::new().num_threads(common.jobs.max(1)).build()?;
            pool.install(|| {
                use rayon::prelude::*;
                states.par_iter().try_for_each(|s| -> Result<()> {
                    let frame = render_frame_with(s, &lib, seed, opts)?;
                    let path = out.join(format!("frame_{:05}.{}", s.t, format.extension()));
                    write_image(&frame.image, &path, format)?;
                    Ok(())
                })
            })?;
            println!("{} frames in {}", states.len(), out.display());
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) if e.is::<Invalid>() => {
            eprintln!("invalid: {e}");
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
