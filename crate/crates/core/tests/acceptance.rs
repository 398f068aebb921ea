//! End-to-end acceptance checks. Runs without the libtest harness so every
//! criterion prints one PASS or FAIL line; exits non-zero if any fails.

use std::collections::VecDeque;
use std::sync::Arc;
use std::time::{Duration, Instant};

use citylogic::grounding::{dimension, Grounder, Layout};
use citylogic::planner::{plan_car, plan_pedestrian};
use citylogic::presets::{self, Split, SLOTS};
use citylogic::rules::{Action, Clause, Literal};
use citylogic::seeding::stream;
use citylogic::sim::{replay, run_episode, ReplayReport, SimConfig, Simulator};
use citylogic::solver::RuleProgram;
use citylogic::spf::{
    compute_metrics, curated_seeds, evaluate, random_action, random_policy_rng, EpisodeOutcome, PolicyKind, SpfEnv,
    PROBE_CAP,
};
use citylogic::vap::{
    export_dataset, frame_path, parse_scene_nl, read_frame, serialize_scene_nl, vap_metrics, weighted_accuracy,
    ExportConfig, Rederiver, Scene,
};
use citylogic::world::{AgentKind, Cell, CityState, Fov, Roster, RosterEntry};
use citylogic::Mode;
use rand::seq::SliceRandom;
use rand::Rng;

type Check = Result<String, String>;

fn ensure(ok: bool, detail: String) -> Check {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn jobs() -> usize {
    std::thread::available_parallelism().map_or(4, |n| n.get())
}

fn grounding_dims() -> Check {
    let reg = presets::registry().map_err(|e| e.to_string())?;
    let dim = |m| dimension(&reg, m, SLOTS).unwrap();
    let (e, m, h, x) = (dim(Mode::SpfEasy), dim(Mode::SpfMedium), dim(Mode::SpfHard), dim(Mode::SpfExpert));
    let sum: usize = reg.mode_predicates(Mode::SpfExpert).unwrap().iter().map(|d| SLOTS.pow(d.arity as u32)).sum();
    ensure((e, m, h) == (85, 140, 205) && x == sum, format!("easy {e}, medium {m}, hard {h}, expert {x} (sum {sum})"))
}

fn solver_equivalence() -> Check {
    let t0 = Instant::now();
    let reg = Arc::new(presets::registry().unwrap());
    let mut seen = [0usize; 4];
    let mut cases = 0;
    for mode in Mode::ALL {
        let layout = Layout::for_mode(&reg, mode, SLOTS).unwrap();
        let prog = RuleProgram::compile(&presets::rules(mode, reg.clone()).unwrap(), &layout).unwrap();
        let mut rng = stream(mode as u64, "acceptance-solver");
        for _ in 0..10_000 {
            let p = rng.gen_range(0.02..0.7);
            let g: Vec<bool> = (0..layout.len()).map(|_| rng.gen_bool(p)).collect();
            let a = prog.resolve(&g).map(|r| r.0);
            let b = prog.resolve_exhaustive(&g);
            if a != b {
                return Err(format!("{mode}: {a:?} vs {b:?}"));
            }
            if let Some(act) = a.ok().and_then(|v| v.action()) {
                seen[act.index()] += 1;
            }
            cases += 1;
        }
    }
    let took = t0.elapsed();
    ensure(took < Duration::from_secs(120), format!("{cases} groundings agree in {took:.1?}; mandates {seen:?}"))
}

struct SpfRun {
    oracle: Vec<EpisodeOutcome>,
    random: Vec<EpisodeOutcome>,
}

fn spf_runs() -> Vec<(Mode, SpfRun)> {
    Mode::SPF
        .iter()
        .map(|&mode| {
            let cfg = SimConfig::preset(mode, Split::Test, 0).unwrap();
            let seeds = curated_seeds(&cfg, 0, 100, PROBE_CAP, jobs()).unwrap();
            let oracle = evaluate(&cfg, PolicyKind::Oracle, &seeds, jobs()).unwrap();
            let random = evaluate(&cfg, PolicyKind::Random, &seeds, jobs()).unwrap();
            (mode, SpfRun { oracle, random })
        })
        .collect()
}

fn oracle_perfect(runs: &[(Mode, SpfRun)]) -> Check {
    let mut parts = Vec::new();
    let mut ok = true;
    for (mode, r) in runs {
        let base = compute_metrics(&r.random, 0.0).unwrap().mean_return;
        let o = compute_metrics(&r.oracle, base).unwrap();
        let rnd = compute_metrics(&r.random, base).unwrap();
        ok &= r.oracle.len() == 100 && o.tsr == 1.0 && o.dsr == 1.0 && o.score > rnd.score && rnd.score == 0.0;
        parts.push(format!("{mode}: n={} TSR {:.2} DSR {:.2} score {:.3} > {:.3}", r.oracle.len(), o.tsr, o.dsr, o.score, rnd.score));
    }
    ensure(ok, parts.join("; "))
}

fn random_weak(runs: &[(Mode, SpfRun)]) -> Check {
    let mut parts = Vec::new();
    let mut ok = true;
    for (mode, r) in runs {
        let m = compute_metrics(&r.random, 0.0).unwrap();
        ok &= m.tsr <= 0.15;
        parts.push(format!("{mode}: {:.2}", m.tsr));
    }
    ensure(ok, parts.join("; "))
}

fn reward_recompute() -> Check {
    let mut steps = 0;
    let mut seed = 0;
    let mut env = SpfEnv::new(SimConfig::preset(Mode::SpfExpert, Split::Test, 0).unwrap()).unwrap();
    let mut hard = SpfEnv::new(SimConfig::preset(Mode::SpfHard, Split::Test, 0).unwrap()).unwrap();
    while steps < 1000 {
        for (e, w, costs) in [(&mut env, -5.0, [-2.0, -1.0, -2.0, -3.0]), (&mut hard, -10.0, [-2.0, 0.0, -2.0, -5.0])] {
            e.reset(seed).unwrap();
            let spec = *e.spec().unwrap();
            let mut rng = random_policy_rng(seed);
            while !e.is_done() {
                let a = random_action(&mut rng);
                let r = e.step(a).unwrap();
                let over = if r.info.t > spec.horizon { -3.0 } else { 0.0 };
                let want = w * r.info.violations.len() as f64 + costs[a.index()] / spec.path_len as f64 + over;
                if r.reward != want {
                    return Err(format!("seed {seed} t {}: {} != {want}", r.info.t, r.reward));
                }
                steps += 1;
            }
        }
        seed += 1;
    }
    Ok(format!("{steps} steps over {} episodes, all exact", 2 * seed))
}

fn determinism() -> Check {
    let mut hashes = 0;
    for mode in Mode::SPF {
        for seed in 0..10 {
            let cfg = SimConfig::preset(mode, Split::Train, seed).unwrap();
            let sim = Simulator::new(cfg.clone()).unwrap();
            let a = run_episode(&sim, None, 200, false, None).unwrap();
            let b = run_episode(&Simulator::new(cfg.clone()).unwrap(), None, 200, false, None).unwrap();
            if a.hash() != b.hash() {
                return Err(format!("{mode} seed {seed}: hashes differ"));
            }
            match replay(&a, &cfg).unwrap() {
                ReplayReport::Exact { .. } => {}
                other => return Err(format!("{mode} seed {seed}: replay {other:?}")),
            }
            hashes += 1;
        }
    }
    Ok(format!("{hashes} episodes identical, replay exact"))
}

fn bfs(start: Cell, goal: Cell, next: impl Fn(Cell) -> Vec<Cell>) -> Option<usize> {
    let mut seen = std::collections::HashSet::from([start]);
    let mut q = VecDeque::from([(start, 1)]);
    while let Some((c, d)) = q.pop_front() {
        if c == goal {
            return Some(d);
        }
        for n in next(c) {
            if seen.insert(n) {
                q.push_back((n, d + 1));
            }
        }
    }
    None
}

fn planning() -> Check {
    let world = presets::demo_world().unwrap();
    let mut rng = stream(0, "acceptance-planner");
    let mut equal = 0;
    for kind in [AgentKind::Pedestrian, AgentKind::Car] {
        let cells = world.frontage(kind);
        for _ in 0..100 {
            let (s, g) = (*cells.choose(&mut rng).unwrap(), *cells.choose(&mut rng).unwrap());
            let (path, want) = match kind {
                AgentKind::Pedestrian => (
                    plan_pedestrian(&world.map, s, g).unwrap(),
                    bfs(s, g, |c| c.neighbors4().into_iter().filter(|n| world.map.walkable(*n)).collect()),
                ),
                AgentKind::Car => {
                    let p = plan_car(&world.roads, s, g).unwrap();
                    if !p.windows(2).all(|w| world.roads.has_edge(w[0], w[1])) {
                        return Err(format!("car path {s:?}->{g:?} leaves its lanes"));
                    }
                    (p, bfs(s, g, |c| world.roads.successors(c)))
                }
            };
            if Some(path.len()) != want {
                return Err(format!("{kind:?} {s:?}->{g:?}: {} vs {want:?}", path.len()));
            }
            equal += 1;
        }
    }
    // Moves actually made in simulation stay on lane edges.
    let cfg = SimConfig::preset(Mode::SpfExpert, Split::Train, 1).unwrap();
    let sim = Simulator::new(cfg.clone()).unwrap();
    let mut state = cfg.initial_state().unwrap();
    let mut hops = 0;
    for _ in 0..500 {
        let (next, report) = sim.step(&state, None).unwrap();
        for (&id, cells) in &report.moves {
            let a = &state.agents[id];
            if a.kind == AgentKind::Car {
                let chain: Vec<Cell> = std::iter::once(a.pos).chain(cells.iter().copied()).collect();
                if !chain.windows(2).all(|w| world.roads.has_edge(w[0], w[1])) {
                    return Err(format!("car {id} moved against its lane at t={}", state.t));
                }
                hops += cells.len();
            }
        }
        state = next;
    }
    Ok(format!("{equal} shortest-path queries match BFS; {hops} simulated car hops all forward"))
}

fn vap_export() -> Check {
    let t0 = Instant::now();
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut cfg = ExportConfig::new(Mode::VapHard, 100, 100, 10, 0);
    cfg.jobs = jobs();
    let m = export_dataset(&cfg, dir.path()).map_err(|e| e.to_string())?;
    let r = Rederiver::new(&m).map_err(|e| e.to_string())?;
    let mut mismatches = 0;
    let mut frames = 0;
    for id in m.splits.train.iter().chain(&m.splits.val).chain(&m.splits.test) {
        let f = read_frame(&frame_path(dir.path(), id)).map_err(|e| e.to_string())?;
        mismatches += r.mismatches(&f).map_err(|e| e.to_string())?;
        frames += 1;
    }
    let c = m.class_counts;
    let fast_rarest = (0..4).all(|i| i == Action::Fast.index() || c[Action::Fast.index()] < c[i]);
    let took = t0.elapsed();
    ensure(
        m.frames == 9000 && frames == 9000 && fast_rarest && mismatches == 0 && took < Duration::from_secs(900),
        format!("{frames} frames, classes (slow, normal, fast, stop) {c:?}, {mismatches} mismatches, {took:.1?}"),
    )
}

fn twelve_entity_scene() -> Scene {
    let agents = (0..12)
        .map(|i| RosterEntry {
            kind: if i % 2 == 0 { AgentKind::Car } else { AgentKind::Pedestrian },
            concepts: vec![],
            priority: 0.05 + i as f64 * 0.07,
        })
        .collect();
    let reg = presets::registry().unwrap();
    let state = CityState::new(Arc::new(presets::demo_world().unwrap()), &Roster { agents }, &reg, 1).unwrap();
    let g = Grounder::for_mode(&reg, Mode::VapHard, 12, Default::default()).unwrap();
    Scene::from_grounding(&g.ground(&state, &Fov::global(&state)).unwrap())
}

fn metrics() -> Check {
    let w = weighted_accuracy(&[1.0, 0.5], &[10, 90]).unwrap();
    let mut labels = vec![0; 10];
    labels.extend([1; 90]);
    let mut preds = labels.clone();
    preds[10..55].fill(3);
    let m = vap_metrics(&preds, &labels).map_err(|e| e.to_string())?;
    let outs: Vec<EpisodeOutcome> = (0..8)
        .map(|i| EpisodeOutcome {
            seed: i,
            succ: i % 4 != 0,
            dec: i % 2 == 0,
            ret: -(i as f64),
            steps: 1,
            oracle_steps: 1,
            constrained_steps: 1,
            violations: 0,
            reached_goal: true,
        })
        .collect();
    let sm = compute_metrics(&outs, -10.0).unwrap();
    let scene = twelve_entity_scene();
    let text = serialize_scene_nl(&scene, 0).map_err(|e| e.to_string())?;
    let back = parse_scene_nl(&text).map_err(|e| e.to_string())?;
    ensure(
        (w - 0.95).abs() < 1e-12
            && (m.wacc - 0.95).abs() < 1e-12
            && sm.tsr == 0.75
            && sm.dsr == 0.5
            && sm.score == 6.5
            && text.starts_with("In the scene you see a total of 12 entities")
            && back == (scene, 0),
        format!("wAcc {w:.4}/{:.4}, TSR {} DSR {} score {}, NL round-trips", m.wacc, sm.tsr, sm.dsr, sm.score),
    )
}

fn lit(s: &str) -> Literal {
    let (neg, rest) = s.strip_prefix('~').map_or((false, s), |r| (true, r));
    let mut parts = rest.split_whitespace();
    let name = parts.next().unwrap();
    let args: Vec<&str> = parts.collect();
    if neg {
        Literal::negative(name, &args)
    } else {
        Literal::positive(name, &args)
    }
}

fn expert_rules() -> Check {
    let c = |head: &str, body: &[&str]| Clause::new(Literal::positive(head, &["X"]), body.iter().map(|s| lit(s)).collect());
    let g = ["~IsAmbulance X", "~IsOld X"];
    let table = vec![
        c("Stop", &[g[0], g[1], "IsAtInter X", "IsInInter Y"]),
        c("Stop", &[g[0], g[1], "IsAtInter X", "IsAtInter Y", "HigherPri Y X"]),
        c("Stop", &[g[0], g[1], "IsInInter X", "IsInInter Y", "IsAmbulance Y"]),
        c("Stop", &["~IsAmbulance X", "~IsPolice X", "IsCar X", "~IsInInter X", "~IsAtInter X", "LeftOf Y X", "IsClose Y X", "IsPolice Y"]),
        c("Stop", &["IsBus X", "~IsInInter X", "~IsAtInter X", "RightOf Y X", "NextTo Y X", "IsPedestrian Y"]),
        c("Stop", &["IsAmbulance X", "RightOf Y X", "IsOld Y"]),
        c("Stop", &[g[0], g[1], "CollidingClose X Y"]),
        c("Slow", &["~Stop X", "IsTiro X", "IsPedestrian Y", "IsClose X Y"]),
        c("Slow", &["~Stop X", "IsTiro X", "IsInInter X", "IsAtInter Y"]),
        c("Slow", &["~Stop X", "IsPolice X", "IsYoung Y", "IsYoung Z", "NextTo Y Z"]),
        c("Fast", &["~Stop X", "~Slow X", "IsReckless X", "IsAtInter Y"]),
        c("Fast", &["~Stop X", "~Slow X", "IsBus X"]),
        c("Fast", &["~Stop X", "~Slow X", "IsPolice X", "IsReckless Y"]),
    ];
    let reg = Arc::new(presets::registry().unwrap());
    let expert = presets::rules(Mode::SpfExpert, reg.clone()).unwrap();
    let medium = presets::rules(Mode::SpfMedium, reg.clone()).unwrap();
    let hard = presets::rules(Mode::SpfHard, reg).unwrap();
    let strict = medium.is_subset_of(&hard) && !hard.is_subset_of(&medium);
    ensure(
        expert.clauses == table && strict,
        format!("expert has {} clauses, table match {}, medium strictly within hard {strict}", expert.len(), expert.clauses == table),
    )
}

fn main() {
    let t0 = Instant::now();
    let runs = spf_runs();
    type Named<'a> = (&'static str, Box<dyn Fn() -> Check + 'a>);
    let checks: Vec<Named> = vec![
        ("grounding dimensions", Box::new(grounding_dims)),
        ("stratified solver equals exhaustive", Box::new(solver_equivalence)),
        ("oracle TSR/DSR and score ordering", Box::new(|| oracle_perfect(&runs))),
        ("random TSR <= 0.15", Box::new(|| random_weak(&runs))),
        ("reward recomputation", Box::new(reward_recompute)),
        ("determinism and replay", Box::new(determinism)),
        ("planning", Box::new(planning)),
        ("action-prediction export", Box::new(vap_export)),
        ("metrics and scene text", Box::new(metrics)),
        ("expert rule table", Box::new(expert_rules)),
    ];
    let mut failed = 0;
    for (i, (name, check)) in checks.iter().enumerate() {
        match check() {
            Ok(d) => println!("PASS {:>2} {name}: {d}", i + 1),
            Err(d) => {
                failed += 1;
                println!("FAIL {:>2} {name}: {d}", i + 1);
            }
        }
    }
    println!("{} of {} criteria passed in {:.1?}", checks.len() - failed, checks.len(), t0.elapsed());
    if failed > 0 {
        std::process::exit(1);
    }
}
