use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::{Command, Output, Stdio};

use serde_json::Value;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_citylogic"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn text(o: &Output) -> String {
    format!("{}{}", String::from_utf8_lossy(&o.stdout), String::from_utf8_lossy(&o.stderr))
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn shipped_configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn copy_tree(from: &Path, to: &Path) {
    std::fs::create_dir_all(to).unwrap();
    for e in std::fs::read_dir(from).unwrap() {
        let e = e.unwrap();
        let dst = to.join(e.file_name());
        if e.file_type().unwrap().is_dir() {
            copy_tree(&e.path(), &dst);
        } else {
            std::fs::copy(e.path(), dst).unwrap();
        }
    }
}

/// Every file under `dir` by relative path.
fn tree(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in std::fs::read_dir(&d).unwrap() {
            let path = e.unwrap().path();
            if path.is_dir() {
                stack.push(path);
            } else {
                let rel = path.strip_prefix(dir).unwrap().to_string_lossy().into_owned();
                out.insert(rel, std::fs::read(&path).unwrap());
            }
        }
    }
    out
}

#[test]
fn validate_shipped_and_copied_configs() {
    let o = run(&["validate"]);
    assert_eq!(code(&o), 0, "{}", text(&o));
    let o = run(&["validate", "--configs", p(&shipped_configs())]);
    assert_eq!(code(&o), 0, "{}", text(&o));
}

#[test]
fn validate_reports_a_rule_cycle() {
    let dir = tempfile::tempdir().unwrap();
    copy_tree(&shipped_configs(), dir.path());
    let f = dir.path().join("rules/spf_expert.rules");
    let mut rules = std::fs::OpenOptions::new().append(true).open(&f).unwrap();
    writeln!(rules, "Stop(X) :- Not(Slow(X)), IsCar(X).").unwrap();
    let o = run(&["validate", "--configs", p(dir.path())]);
    assert_eq!(code(&o), 1, "{}", text(&o));
    assert!(text(&o).contains("rules/spf_expert.rules: action dependency cycle: "), "{}", text(&o));
}

#[test]
fn validate_reports_an_unknown_concept() {
    let dir = tempfile::tempdir().unwrap();
    copy_tree(&shipped_configs(), dir.path());
    let f = dir.path().join("rosters/spf_easy_train.json");
    let roster = std::fs::read_to_string(&f).unwrap().replacen("\"IsTiro\"", "\"IsUnicycle\"", 1);
    assert!(roster.contains("IsUnicycle"));
    std::fs::write(&f, roster).unwrap();
    let o = run(&["validate", "--configs", p(dir.path())]);
    assert_eq!(code(&o), 1);
    assert!(text(&o).contains("IsUnicycle"), "{}", text(&o));

    std::fs::remove_file(dir.path().join("registry.json")).unwrap();
    assert_eq!(code(&run(&["validate", "--configs", p(dir.path())])), 1);
}

#[test]
fn sim_run_then_replay() {
    let dir = tempfile::tempdir().unwrap();
    let log = dir.path().join("ep.jsonl");
    let o = run(&["sim", "run", "--mode", "spf-easy", "--steps", "200", "--seed", "1", "--log", p(&log)]);
    assert_eq!(code(&o), 0, "{}", text(&o));
    assert_eq!(std::fs::read_to_string(&log).unwrap().lines().count(), 201);
    let o = run(&["sim", "replay", "--log", p(&log)]);
    assert_eq!(code(&o), 0, "{}", text(&o));
    assert!(String::from_utf8_lossy(&o.stdout).starts_with("exact"));

    // Shift one pose: the log still parses but no longer replays.
    let body = std::fs::read_to_string(&log).unwrap();
    let mut lines: Vec<String> = body.lines().map(String::from).collect();
    let mut step: Value = serde_json::from_str(&lines[50]).unwrap();
    let x = step["poses"][2]["x"].as_i64().unwrap();
    step["poses"][2]["x"] = (x + 1).into();
    lines[50] = step.to_string();
    let bad = dir.path().join("bad.jsonl");
    std::fs::write(&bad, lines.join("\n")).unwrap();
    let o = run(&["sim", "replay", "--log", p(&bad)]);
    assert_eq!(code(&o), 1, "{}", text(&o));
    assert!(text(&o).contains("divergent at t=50"), "{}", text(&o));

    std::fs::write(&bad, "{\"type\":\"header\"}\n").unwrap();
    assert_eq!(code(&run(&["sim", "replay", "--log", p(&bad)])), 1);
    assert_eq!(code(&run(&["sim", "replay", "--log", p(&dir.path().join("missing.jsonl"))])), 2);
}

#[test]
fn runtime_failures_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["sim", "run", "--mode", "spf-easy", "--log", p(&dir.path().join("no/such/dir/ep.jsonl"))]);
    assert_eq!(code(&o), 2, "{}", text(&o));
    assert_eq!(code(&run(&["spf", "run", "--mode", "vap-hard", "--episodes", "1"])), 2);
    assert_eq!(code(&run(&["frobnicate"])), 2);
}

#[test]
fn seeded_commands_are_byte_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    for k in ["a", "b"] {
        let log = d.join(format!("{k}.jsonl"));
        assert_eq!(code(&run(&["sim", "run", "--mode", "spf-hard", "--steps", "80", "--seed", "5", "--log", p(&log)])), 0);
        let report = d.join(format!("{k}.json"));
        let o = run(&["spf", "run", "--mode", "expert", "--episodes", "4", "--seed", "3", "--jobs", "2", "--out", p(&report)]);
        assert_eq!(code(&o), 0, "{}", text(&o));
        let o = run(&[
            "vap", "export", "--mode", "easy", "--cities", "3", "--steps", "15", "--burn-in", "5", "--seed", "9", "--images",
            "ppm", "--tile", "4", "--jobs", "2", "--out", p(&d.join(format!("{k}-vap"))),
        ]);
        assert_eq!(code(&o), 0, "{}", text(&o));
        let o = run(&["render", "--episode", p(&log), "--out", p(&d.join(format!("{k}-frames"))), "--tile", "4", "--seed", "2"]);
        assert_eq!(code(&o), 0, "{}", text(&o));
    }
    assert_eq!(std::fs::read(d.join("a.jsonl")).unwrap(), std::fs::read(d.join("b.jsonl")).unwrap());
    assert_eq!(std::fs::read(d.join("a.json")).unwrap(), std::fs::read(d.join("b.json")).unwrap());
    assert_eq!(tree(&d.join("a-vap")), tree(&d.join("b-vap")));
    let frames = tree(&d.join("a-frames"));
    assert_eq!(frames.len(), 81);
    assert_eq!(frames, tree(&d.join("b-frames")));

    let report: Value = serde_json::from_slice(&std::fs::read(d.join("a.json")).unwrap()).unwrap();
    assert_eq!(report["metrics"]["tsr"], 1.0);
    assert_eq!(report["outcomes"].as_array().unwrap().len(), 4);
}

#[test]
fn vap_nl_and_score() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("vap");
    let o = run(&["vap", "export", "--mode", "hard", "--cities", "2", "--steps", "12", "--burn-in", "10", "--out", p(&data)]);
    assert_eq!(code(&o), 0, "{}", text(&o));
    let manifest: Value = serde_json::from_slice(&std::fs::read(data.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["frames"], 4);

    let o = run(&["vap", "nl", "--data", p(&data), "--frame", "c0001_t0011", "--agent", "0"]);
    assert_eq!(code(&o), 0, "{}", text(&o));
    let prompt = String::from_utf8(o.stdout).unwrap();
    assert!(prompt.starts_with("In the scene you see a total of "));
    assert!(prompt.contains("What is the next action of entity Entity_0?"));

    // Perfect predictions score 1.
    let mut preds = serde_json::Map::new();
    for c in 0..2 {
        for t in 10..12 {
            let id = format!("c{c:04}_t{t:04}");
            let frame: Value = serde_json::from_slice(&std::fs::read(data.join(format!("frames/{id}.json"))).unwrap()).unwrap();
            preds.insert(id, frame["labels"].clone());
        }
    }
    let pred = dir.path().join("pred.json");
    std::fs::write(&pred, Value::Object(preds.clone()).to_string()).unwrap();
    let o = run(&["vap", "score", "--pred", p(&pred), "--data", p(&data)]);
    assert_eq!(code(&o), 0, "{}", text(&o));
    let m: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(m["metrics"]["aacc"], 1.0);
    assert_eq!(m["metrics"]["wacc"], 1.0);

    preds.insert("c0000_t0010".into(), Value::Array(vec![1.into()]));
    std::fs::write(&pred, Value::Object(preds).to_string()).unwrap();
    assert_eq!(code(&run(&["vap", "score", "--pred", p(&pred), "--data", p(&data)])), 1);
    assert_eq!(code(&run(&["vap", "export", "--mode", "spf-easy", "--out", p(&data)])), 2);
}

#[test]
fn serve_over_stdio() {
    let mut child = bin()
        .args(["spf", "serve", "--mode", "hard"])
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .spawn()
        .unwrap();
    child
        .stdin
        .take()
        .unwrap()
        .write_all(b"{\"cmd\":\"reset\",\"seed\":7}\n{\"cmd\":\"step\",\"action\":3}\n{\"cmd\":\"nope\"}\n{\"cmd\":\"close\"}\n")
        .unwrap();
    let out = child.wait_with_output().unwrap();
    assert!(out.status.success());
    let replies: Vec<Value> = String::from_utf8(out.stdout).unwrap().lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert_eq!(replies.len(), 4);
    assert_eq!(replies[0]["t"], 0);
    assert_eq!(replies[0]["obs"].as_array().unwrap().len(), 205);
    assert_eq!(replies[1]["info"]["action"], 3);
    assert_eq!(replies[2], serde_json::json!({"error": "unknown cmd"}));
}

#[test]
fn schema_names_every_feature() {
    for (mode, len) in [("spf-easy", 85), ("spf-medium", 140), ("spf-hard", 205), ("spf-expert", 205)] {
        let o = run(&["schema", "--mode", mode]);
        assert_eq!(code(&o), 0, "{}", text(&o));
        let s: Value = serde_json::from_slice(&o.stdout).unwrap();
        assert_eq!(s["len"], len);
        let features = s["features"].as_array().unwrap();
        assert_eq!(features.len(), len);
        for (k, f) in features.iter().enumerate() {
            assert_eq!(f["index"], k);
        }
    }
    let o = run(&["schema", "--mode", "spf-easy"]);
    let s: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(s["features"][0], serde_json::json!({"predicate": "IsPedestrian", "tuple": [0], "index": 0}));
}
