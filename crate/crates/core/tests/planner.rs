use std::collections::VecDeque;

use citylogic::planner::{plan_car, plan_pedestrian};
use citylogic::presets::{self, Split};
use citylogic::seeding::stream;
use citylogic::sim::{SimConfig, Simulator};
use citylogic::world::{AgentKind, Cell, World};
use citylogic::Mode;
use rand::seq::SliceRandom;

fn bfs(start: Cell, goal: Cell, next: impl Fn(Cell) -> Vec<Cell>) -> Option<usize> {
    let mut seen = std::collections::HashSet::from([start]);
    let mut queue = VecDeque::from([(start, 1usize)]);
    while let Some((c, d)) = queue.pop_front() {
        if c == goal {
            return Some(d);
        }
        for n in next(c) {
            if seen.insert(n) {
                queue.push_back((n, d + 1));
            }
        }
    }
    None
}

fn queries(world: &World, kind: AgentKind, n: usize, seed: u64) -> Vec<(Cell, Cell)> {
    let cells = world.frontage(kind);
    let mut rng = stream(seed, "planner-test");
    (0..n)
        .map(|_| loop {
            let a = *cells.choose(&mut rng).unwrap();
            let b = *cells.choose(&mut rng).unwrap();
            if a != b {
                break (a, b);
            }
        })
        .collect()
}

fn is_unit_chain(path: &[Cell]) -> bool {
    path.windows(2).all(|w| w[0].manhattan(w[1]) == 1)
}

#[test]
fn pedestrian_a_star_is_shortest() {
    let world = presets::demo_world().unwrap();
    let map = &world.map;
    for (s, g) in queries(&world, AgentKind::Pedestrian, 100, 1) {
        let path = plan_pedestrian(map, s, g).unwrap();
        let want = bfs(s, g, |c| c.neighbors4().into_iter().filter(|n| map.walkable(*n)).collect());
        assert_eq!(Some(path.len()), want, "{s:?} -> {g:?}");
        assert_eq!((path[0], *path.last().unwrap()), (s, g));
        assert!(is_unit_chain(&path) && path.iter().all(|c| map.walkable(*c)));
    }
}

#[test]
fn car_paths_are_shortest_and_follow_lanes() {
    let world = presets::demo_world().unwrap();
    let roads = &world.roads;
    for (s, g) in queries(&world, AgentKind::Car, 100, 2) {
        let path = plan_car(roads, s, g).unwrap();
        assert_eq!(Some(path.len()), bfs(s, g, |c| roads.successors(c)), "{s:?} -> {g:?}");
        assert!(path.windows(2).all(|w| roads.has_edge(w[0], w[1])));
    }
}

#[test]
fn lanes_are_one_way() {
    let world = presets::demo_world().unwrap();
    let roads = &world.roads;
    for u in roads.nodes() {
        for v in roads.successors(u) {
            assert_eq!(u.manhattan(v), 1);
            // Antiparallel lanes are separate cells; a lane never runs both ways.
            assert!(!roads.has_edge(v, u), "{u:?} <-> {v:?}");
        }
    }
}

#[test]
fn simulated_cars_never_move_against_their_lane() {
    for mode in [Mode::SpfEasy, Mode::SpfExpert, Mode::VapHard] {
        let cfg = SimConfig::preset(mode, Split::Train, 11).unwrap();
        let sim = Simulator::new(cfg.clone()).unwrap();
        let roads = &cfg.world.roads;
        let mut state = cfg.initial_state().unwrap();
        for _ in 0..300 {
            for a in state.agents.iter().filter(|a| a.kind == AgentKind::Car) {
                assert!(a.path.windows(2).all(|w| roads.has_edge(w[0], w[1])), "planned path of {}", a.id);
            }
            let (next, report) = sim.step(&state, None).unwrap();
            for (&id, cells) in &report.moves {
                let a = &state.agents[id];
                let mut hops = vec![a.pos];
                hops.extend(cells.iter().skip_while(|c| **c == a.pos));
                hops.dedup();
                if a.kind == AgentKind::Car {
                    assert!(hops.windows(2).all(|w| roads.has_edge(w[0], w[1])), "car {id} at t={}", state.t);
                } else {
                    assert!(is_unit_chain(&hops));
                }
            }
            state = next;
        }
    }
}
