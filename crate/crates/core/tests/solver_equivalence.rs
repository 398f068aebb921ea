use std::sync::Arc;
use std::time::{Duration, Instant};

use citylogic::grounding::Layout;
use citylogic::presets::{self, SLOTS};
use citylogic::rules::parse_rules;
use citylogic::solver::RuleProgram;
use citylogic::Mode;
use proptest::prelude::*;
use proptest::test_runner::{Config, TestRunner};

const CASES: u32 = 10_000;

fn program(mode: Mode) -> RuleProgram {
    let reg = Arc::new(presets::registry().unwrap());
    let rules = presets::rules(mode, reg.clone()).unwrap();
    RuleProgram::compile(&rules, &Layout::for_mode(&reg, mode, SLOTS).unwrap()).unwrap()
}

// Sparse and dense vectors both matter: most clause bodies need several
// atoms at once, so the density is drawn per case.
fn groundings(len: usize) -> impl Strategy<Value = Vec<bool>> {
    (0.02f64..0.7).prop_flat_map(move |p| proptest::collection::vec(proptest::bool::weighted(p), len))
}

fn check_mode(mode: Mode) {
    let prog = program(mode);
    let len = Layout::for_mode(&presets::registry().unwrap(), mode, SLOTS).unwrap().len();
    let mut runner = TestRunner::new(Config { cases: CASES, failure_persistence: None, ..Config::default() });
    runner
        .run(&groundings(len), |g| {
            let (fast, derivation) = prog.resolve(&g).map_err(|e| TestCaseError::fail(e.to_string()))?;
            let slow = prog.resolve_exhaustive(&g).map_err(|e| TestCaseError::fail(e.to_string()))?;
            prop_assert_eq!(fast, slow);
            prop_assert_eq!(Some(derivation.action), slow.action());
            Ok(())
        })
        .unwrap();
}

#[test]
fn stratified_matches_exhaustive_in_every_mode() {
    let t0 = Instant::now();
    for mode in Mode::ALL {
        check_mode(mode);
    }
    assert!(t0.elapsed() < Duration::from_secs(120), "took {:?}", t0.elapsed());
}

// Unguarded heads can be derived together; both solvers must then refuse.
#[test]
fn conflicts_agree() {
    let reg = Arc::new(presets::registry().unwrap());
    let rules = parse_rules("Stop(X) :- IsCar(X).\nFast(X) :- IsBus(X).\n", reg.clone()).unwrap();
    let layout = Layout::for_mode(&reg, Mode::SpfHard, SLOTS).unwrap();
    let prog = RuleProgram::compile(&rules, &layout).unwrap();
    let mut g = vec![false; layout.len()];
    g[layout.index("IsCar", &[0]).unwrap()] = true;
    assert_eq!(prog.resolve(&g).unwrap().1.action.name(), "Stop");
    assert_eq!(prog.resolve_exhaustive(&g).unwrap().action().unwrap().name(), "Stop");
    g[layout.index("IsBus", &[0]).unwrap()] = true;
    assert!(prog.resolve(&g).is_err());
    assert!(prog.resolve_exhaustive(&g).is_err());
}
