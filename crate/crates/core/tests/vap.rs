use std::collections::BTreeSet;
use std::sync::Arc;

use citylogic::grounding::{Grounder, Layout};
use citylogic::presets::{self, Split};
use citylogic::render::ImageFormat;
use citylogic::rules::Action;
use citylogic::sim::SimConfig;
use citylogic::vap::{
    class_weights, export_dataset, frame_path, generate_city, parse_scene_nl, read_frame, serialize_scene_nl,
    split_cities, vap_metrics, weighted_accuracy, AgentFeature, ExportConfig, Manifest, Rederiver, RosterSource, Scene,
};
use citylogic::world::{AgentKind, CityState, Fov, Roster, RosterEntry};
use citylogic::Mode;
use proptest::prelude::*;

fn small(mode: Mode) -> ExportConfig {
    let mut cfg = ExportConfig::new(mode, 5, 30, 10, 21);
    cfg.jobs = 2;
    cfg
}

#[test]
fn export_writes_a_consistent_dataset() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = small(Mode::VapHard);
    cfg.images = Some(ImageFormat::Png);
    cfg.tile = 8;
    let m = export_dataset(&cfg, dir.path()).unwrap();
    assert_eq!(m.frames, 5 * 20);
    assert_eq!(m.class_counts.iter().sum::<usize>(), count_labels(dir.path(), &m));
    let back = Manifest::read(dir.path()).unwrap();
    assert_eq!(back.hash(), m.hash());

    let mut ids = BTreeSet::new();
    for part in [&m.splits.train, &m.splits.val, &m.splits.test] {
        for id in part.iter() {
            assert!(ids.insert(id.clone()), "{id} in two splits");
        }
    }
    assert_eq!(ids.len(), m.frames);
    let listed = std::fs::read_to_string(dir.path().join("splits/test.txt")).unwrap();
    assert_eq!(listed.lines().collect::<Vec<_>>(), m.splits.test.iter().map(String::as_str).collect::<Vec<_>>());

    let r = Rederiver::new(&m).unwrap();
    for id in &ids {
        let f = read_frame(&frame_path(dir.path(), id)).unwrap();
        assert_eq!(r.mismatches(&f).unwrap(), 0, "{id}");
        assert!((10..30).contains(&f.t));
        assert_eq!(f.features.len(), f.labels.len());
        let img = dir.path().join(f.image.as_ref().unwrap());
        let png = image::open(&img).unwrap();
        assert_eq!((png.width(), png.height()), (60 * 8, 60 * 8));
    }
}

fn count_labels(dir: &std::path::Path, m: &Manifest) -> usize {
    m.splits.train.iter().chain(&m.splits.val).chain(&m.splits.test).map(|id| read_frame(&frame_path(dir, id)).unwrap().labels.len()).sum()
}

#[test]
fn export_is_reproducible_and_jobs_independent() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let mut one = small(Mode::VapEasy);
    one.jobs = 1;
    let mut four = small(Mode::VapEasy);
    four.jobs = 4;
    let ma = export_dataset(&one, a.path()).unwrap();
    let mb = export_dataset(&four, b.path()).unwrap();
    assert_eq!(ma.frames_hash, mb.frames_hash);
    assert_eq!(std::fs::read(a.path().join("manifest.json")).unwrap(), std::fs::read(b.path().join("manifest.json")).unwrap());
    let mut other = small(Mode::VapEasy);
    other.seed = 22;
    assert_ne!(export_dataset(&other, b.path()).unwrap().frames_hash, ma.frames_hash);
}

#[test]
fn labels_are_the_simulated_actions() {
    let mut cfg = small(Mode::VapHard);
    cfg.roster = RosterSource::Fixed;
    let frames = generate_city(&cfg, 0).unwrap();
    let simcfg = SimConfig::preset(Mode::VapHard, Split::Train, frames[0].0.seed).unwrap();
    let sim = citylogic::sim::Simulator::new(simcfg.clone()).unwrap();
    let mut state = simcfg.initial_state().unwrap();
    for _ in 0..10 {
        state = sim.step(&state, None).unwrap().0;
    }
    for (f, _) in &frames {
        assert_eq!(f.t, state.t);
        let want: Vec<usize> = (0..state.agents.len()).map(|i| sim.oracle_action(&state, i).unwrap().index()).collect();
        assert_eq!(f.labels, want);
        for (a, feat) in state.agents.iter().zip(&f.features) {
            assert_eq!(*feat, AgentFeature::of(a, cfg.tile).to_vec());
        }
        state = sim.step(&state, None).unwrap().0;
    }
}

#[test]
fn scene_truth_table_covers_every_agent() {
    let cfg = small(Mode::VapHard);
    let (f, _) = generate_city(&cfg, 1).unwrap().remove(0);
    let reg = presets::registry().unwrap();
    let layout = Arc::new(Layout::for_mode(&reg, Mode::VapHard, f.labels.len()).unwrap());
    let g = f.scene.to_grounding(layout).unwrap();
    assert_eq!(Scene::from_grounding(&g), f.scene);
    for (i, _) in f.labels.iter().enumerate() {
        assert!(f.scene.holds("IsCar", &[i]) ^ f.scene.holds("IsPedestrian", &[i]));
    }
}

#[test]
fn splits_partition_cities() {
    let [tr, va, te] = split_cities(100, 5);
    assert_eq!((tr.len(), va.len(), te.len()), (70, 10, 20));
    let all: BTreeSet<usize> = tr.iter().chain(&va).chain(&te).copied().collect();
    assert_eq!(all.len(), 100);
    assert_eq!(split_cities(100, 5), [tr, va, te]);
}

#[test]
fn burn_in_must_leave_frames() {
    assert!(generate_city(&ExportConfig::new(Mode::VapEasy, 1, 10, 10, 0), 0).is_err());
}

#[test]
fn weighted_accuracy_hand_cases() {
    let w = weighted_accuracy(&[1.0, 0.5, 0.0, 0.0], &[10, 90, 0, 0]).unwrap();
    assert!((w - 0.95).abs() < 1e-12);
    let labels = [0, 0, 1, 1, 1, 2, 3, 3];
    let preds = [0, 1, 1, 1, 1, 2, 3, 0];
    let m = vap_metrics(&preds, &labels).unwrap();
    assert_eq!(m.counts, [2, 3, 1, 2]);
    assert_eq!(m.recall, [Some(0.5), Some(1.0), Some(1.0), Some(0.5)]);
    assert_eq!(m.aacc, 0.75);
    let wts = class_weights(&m.counts);
    let expect: f64 = [0.5, 1.0, 1.0, 0.5].iter().zip(wts).map(|(r, w)| r * w).sum::<f64>() / wts.iter().sum::<f64>();
    assert!((m.wacc - expect).abs() < 1e-12);
    assert!(vap_metrics(&preds[..3], &labels).is_err());
    assert!(vap_metrics(&[9], &[0]).is_err());
}

fn twelve_agent_scene() -> Scene {
    let mut agents = Vec::new();
    for i in 0..12 {
        let (kind, concepts) = match i % 4 {
            0 => (AgentKind::Car, vec!["IsPolice".to_string()]),
            1 => (AgentKind::Pedestrian, vec!["IsOld".to_string()]),
            2 => (AgentKind::Car, vec![]),
            _ => (AgentKind::Pedestrian, vec![]),
        };
        agents.push(RosterEntry { kind, concepts, priority: 0.1 + i as f64 * 0.05 });
    }
    let reg = presets::registry().unwrap();
    let state = CityState::new(Arc::new(presets::demo_world().unwrap()), &Roster { agents }, &reg, 3).unwrap();
    let g = Grounder::for_mode(&reg, Mode::VapHard, 12, Default::default()).unwrap();
    Scene::from_grounding(&g.ground(&state, &Fov::global(&state)).unwrap())
}

#[test]
fn nl_prompt_for_twelve_entities() {
    let scene = twelve_agent_scene();
    let text = serialize_scene_nl(&scene, 4).unwrap();
    assert!(text.starts_with("In the scene you see a total of 12 entities"));
    assert!(text.contains("Entity_11"));
    assert!(text.contains("IsPolice(Entity_0)"));
    assert!(text.contains("What is the next action of entity Entity_4?"));
    assert!(text.ends_with("(A) Slow (B) Normal (C) Fast (D) Stop\n"));
    assert_eq!(parse_scene_nl(&text).unwrap(), (scene.clone(), 4));
    assert!(serialize_scene_nl(&scene, 12).is_err());
}

proptest! {
    #[test]
    fn nl_round_trips(bits in proptest::collection::vec(any::<bool>(), 3 * 3 + 2 * 9), q in 0usize..3) {
        let reg = presets::registry().unwrap();
        let layout = Arc::new(Layout::from_names(&reg, &["IsCar", "IsOld", "IsTiro", "IsClose", "HigherPri"], 3).unwrap());
        let mut g = citylogic::grounding::GroundingVector::zeros(layout.clone());
        g.values.copy_from_slice(&bits);
        let scene = Scene::from_grounding(&g);
        let text = serialize_scene_nl(&scene, q).unwrap();
        prop_assert_eq!(parse_scene_nl(&text).unwrap(), (scene.clone(), q));
        prop_assert_eq!(scene.to_grounding(layout).unwrap(), g);
    }

    #[test]
    fn nl_parser_never_panics(s in "\\PC{0,300}") {
        let _ = parse_scene_nl(&s);
    }
}

#[test]
fn action_letters_match_option_order() {
    let letters: String = Action::ALL.iter().map(|a| a.letter()).collect();
    assert_eq!(letters, "ABCD");
}
