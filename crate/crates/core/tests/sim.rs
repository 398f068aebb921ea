use citylogic::presets::Split;
use citylogic::rules::Action;
use citylogic::sim::{replay, replay_states, run_episode, EpisodeLog, ReplayReport, SimConfig, Simulator, EGO};
use citylogic::spf::{play, PolicyKind, SpfEnv};
use citylogic::world::AgentKind;
use citylogic::Mode;

fn episode_hash(mode: Mode, seed: u64) -> String {
    let sim = Simulator::new(SimConfig::preset(mode, Split::Train, seed).unwrap()).unwrap();
    run_episode(&sim, None, 150, false, None).unwrap().hash()
}

#[test]
fn runs_are_bit_identical() {
    for mode in Mode::SPF {
        for seed in 0..10 {
            assert_eq!(episode_hash(mode, seed), episode_hash(mode, seed), "{mode} seed {seed}");
        }
        assert_ne!(episode_hash(mode, 0), episode_hash(mode, 1));
    }
}

#[test]
fn env_episodes_are_reproducible() {
    for mode in Mode::SPF {
        let cfg = SimConfig::preset(mode, Split::Test, 0).unwrap();
        for seed in [3, 4] {
            let mut a = SpfEnv::new(cfg.clone()).unwrap();
            let mut b = SpfEnv::new(cfg.clone()).unwrap();
            assert_eq!(play(&mut a, PolicyKind::Random, seed).unwrap(), play(&mut b, PolicyKind::Random, seed).unwrap());
            assert_eq!(a.log().unwrap().hash(), b.log().unwrap().hash());
        }
    }
}

#[test]
fn logs_replay_exactly() {
    for mode in Mode::SPF {
        let cfg = SimConfig::preset(mode, Split::Test, 0).unwrap();
        let mut env = SpfEnv::new(cfg.clone()).unwrap();
        play(&mut env, PolicyKind::Random, 5).unwrap();
        let log = env.log().unwrap().clone();
        let back = EpisodeLog::from_jsonl(&log.to_jsonl()).unwrap();
        assert_eq!(back, log);
        let rcfg = cfg.with_seed(log.header.seed);
        assert_eq!(replay(&back, &rcfg).unwrap(), ReplayReport::Exact { steps: log.steps.len() });
        assert_eq!(replay_states(&back, &rcfg).unwrap().len(), log.steps.len() + 1);
    }
}

#[test]
fn tampered_log_diverges() {
    let cfg = SimConfig::preset(Mode::SpfEasy, Split::Train, 1).unwrap();
    let sim = Simulator::new(cfg.clone()).unwrap();
    let mut log = run_episode(&sim, None, 60, false, None).unwrap();
    log.steps[20].poses[3].x += 1;
    assert_eq!(replay(&log, &cfg).unwrap(), ReplayReport::Divergent { t: 21 });
    assert!(replay_states(&log, &cfg).is_err());
    assert!(replay(&log, &cfg.with_seed(2)).is_err());
}

#[test]
fn log_parser_rejects_garbage() {
    for bad in ["", "{}", "{\"type\":\"step\"}", "not json\n"] {
        assert!(EpisodeLog::from_jsonl(bad).is_err(), "{bad:?}");
    }
}

#[test]
fn ego_override_is_honoured_and_others_follow_rules() {
    let cfg = SimConfig::preset(Mode::SpfHard, Split::Train, 4).unwrap();
    let sim = Simulator::new(cfg.clone()).unwrap();
    let mut state = cfg.initial_state().unwrap();
    for _ in 0..50 {
        let (next, report) = sim.step(&state, Some(Action::Stop)).unwrap();
        assert_eq!(next.agents[EGO].pos, state.agents[EGO].pos);
        for a in &report.agents[1..] {
            assert_eq!(a.action, a.oracle);
            assert!(a.violations.is_empty());
        }
        state = next;
    }
}

#[test]
fn agents_stay_on_legal_cells_without_forbidden_overlap() {
    for mode in Mode::ALL {
        let cfg = SimConfig::preset(mode, Split::Train, 8).unwrap();
        let sim = Simulator::new(cfg.clone()).unwrap();
        let mut state = cfg.initial_state().unwrap();
        for _ in 0..200 {
            for a in &state.agents {
                assert!(state.world.legal(a.kind, a.pos), "{mode}: agent {} off its layer", a.id);
                for b in &state.agents[a.id + 1..] {
                    if a.pos == b.pos {
                        // Only pedestrians, or a mover onto a parked car, may share.
                        assert!(a.kind == AgentKind::Pedestrian || b.kind == AgentKind::Pedestrian || a.has("IsAmbulance") || b.has("IsAmbulance"));
                    }
                }
            }
            state = sim.step(&state, None).unwrap().0;
        }
    }
}

// Longest run of consecutive steps any agent spends without moving.
fn max_stall(mode: Mode, seed: u64, steps: u64) -> usize {
    let sim = Simulator::new(SimConfig::preset(mode, Split::Train, seed).unwrap()).unwrap();
    let log = run_episode(&sim, None, steps, false, None).unwrap();
    let mut cur = vec![0usize; log.header.agents];
    let mut worst = 0;
    for w in log.steps.windows(2) {
        for (i, c) in cur.iter_mut().enumerate() {
            *c = if w[0].poses[i] == w[1].poses[i] { *c + 1 } else { 0 };
            worst = worst.max(*c);
        }
    }
    worst
}

#[test]
fn traffic_keeps_moving() {
    for mode in [Mode::SpfEasy, Mode::SpfMedium, Mode::VapEasy, Mode::VapHard] {
        for seed in 0..10 {
            let s = max_stall(mode, seed, 1000);
            assert!(s <= 150, "{mode} seed {seed}: stalled {s} steps");
        }
    }
}
