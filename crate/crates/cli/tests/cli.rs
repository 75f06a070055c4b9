use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn mcast(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mcast")).args(args).env_remove("MCAST_SEED").output().expect("binary runs")
}

fn ok_json(args: &[&str]) -> Value {
    let out = mcast(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8(out.stdout).unwrap();
    serde_json::from_str(stdout.lines().last().unwrap()).unwrap()
}

fn path(dir: &TempDir, name: &str) -> String {
    dir.path().join(name).to_str().unwrap().to_string()
}

const FIG1: &str = r#"{"n":2,"edges":[[0,1]],"trees":[{"id":0,"root":0,"parent":{"1":0}},{"id":1,"root":0,"parent":{"1":0}}]}"#;

#[test]
fn gen_random_is_byte_identical() {
    let dir = TempDir::new().unwrap();
    let (a, b) = (path(&dir, "a.json"), path(&dir, "b.json"));
    for p in [&a, &b] {
        ok_json(&["gen", "random", "--n", "64", "--trees", "8", "--depth", "5", "--seed", "1", "--out", p]);
    }
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
}

#[test]
fn seed_comes_from_environment() {
    let dir = TempDir::new().unwrap();
    let (a, b) = (path(&dir, "a.json"), path(&dir, "b.json"));
    ok_json(&["gen", "random", "--n", "64", "--trees", "8", "--depth", "5", "--seed", "7", "--out", &a]);
    let out = Command::new(env!("CARGO_BIN_EXE_mcast"))
        .args(["gen", "random", "--n", "64", "--trees", "8", "--depth", "5", "--out", &b])
        .env("MCAST_SEED", "7")
        .output()
        .unwrap();
    assert!(out.status.success());
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
}

#[test]
fn gen_lowerbound_sizes_and_odd_congestion() {
    let v = ok_json(&["gen", "lowerbound", "--congestion", "2", "--depth", "3", "--out", "/dev/null"]);
    assert_eq!(v["edges"], 100);
    assert_eq!(v["stats"]["m_D"], 100);
    let out = mcast(&["gen", "lowerbound", "--congestion", "3", "--depth", "2"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn gen_to_stdout_round_trips() {
    let out = mcast(&["gen", "layered", "--n", "50", "--congestion", "4", "--depth", "5", "--seed", "2"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let inst = mcast_core::MulticastInstance::from_json(text.trim()).unwrap();
    assert_eq!(inst.to_json(), text.trim());
    assert_eq!(inst.metrics().congestion, 4);
}

#[test]
fn schedule_figure_one_and_validate() {
    let dir = TempDir::new().unwrap();
    let inst = path(&dir, "fig1.json");
    fs::write(&inst, FIG1).unwrap();
    let sched = path(&dir, "s.json");
    let v = ok_json(&["schedule", "--instance", &inst, "--scheduler", "greedy", "--out", &sched]);
    assert_eq!(v["length"], 2);
    let v = ok_json(&["validate", "--instance", &inst, "--schedule", &sched]);
    assert_eq!(v["schedule_valid"], true);
    // Round trip of the schedule file.
    let s = mcast_core::Schedule::from_json(&fs::read_to_string(&sched).unwrap()).unwrap();
    assert_eq!(s.to_json(), fs::read_to_string(&sched).unwrap());
}

#[test]
fn invalid_schedule_exits_one() {
    let dir = TempDir::new().unwrap();
    let inst = path(&dir, "fig1.json");
    fs::write(&inst, FIG1).unwrap();
    let sched = path(&dir, "bad.json");
    fs::write(&sched, r#"{"length":1,"sends":[{"round":1,"from":0,"to":1,"msg":0},{"round":1,"from":0,"to":1,"msg":1}]}"#)
        .unwrap();
    let out = mcast(&["validate", "--instance", &inst, "--schedule", &sched]);
    assert_eq!(out.status.code(), Some(1));
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["schedule_valid"], false);
}

#[test]
fn invalid_instance_exits_one() {
    let dir = TempDir::new().unwrap();
    let inst = path(&dir, "bad.json");
    fs::write(&inst, r#"{"n":2,"edges":[[0,1]],"trees":[{"id":0,"root":0,"parent":{"1":5}}]}"#).unwrap();
    let out = mcast(&["validate", "--instance", &inst]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(mcast(&["schedule", "--instance", &inst, "--scheduler", "greedy"]).status.code(), Some(1));
}

#[test]
fn bad_flags_exit_one() {
    assert_eq!(mcast(&["schedule", "--scheduler", "fastest", "--instance", "x"]).status.code(), Some(1));
    assert_eq!(mcast(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(mcast(&["--help"]).status.code(), Some(0));
}

#[test]
fn all_schedulers_deliver_everything() {
    let dir = TempDir::new().unwrap();
    let inst = path(&dir, "i.json");
    ok_json(&["gen", "random", "--n", "80", "--trees", "10", "--depth", "6", "--seed", "3", "--out", &inst]);
    for s in ["greedy", "random-delay", "frames", "deterministic", "congest"] {
        let sched = path(&dir, &format!("{s}.json"));
        let v = ok_json(&["schedule", "--instance", &inst, "--scheduler", s, "--seed", "5", "--out", &sched]);
        let len = v["length"].as_u64().unwrap();
        let (c, d) = (v["congestion"].as_u64().unwrap(), v["dilation"].as_u64().unwrap());
        assert!(len >= c.max(d), "{s}");
        let check = ok_json(&["validate", "--instance", &inst, "--schedule", &sched]);
        assert_eq!(check["complete"], true, "{s}");
    }
}

#[test]
fn frames_on_single_tree() {
    let dir = TempDir::new().unwrap();
    let inst = path(&dir, "path.json");
    fs::write(&inst, r#"{"n":4,"edges":[[0,1],[1,2],[2,3]],"trees":[{"id":0,"root":0,"parent":{"1":0,"2":1,"3":2}}]}"#)
        .unwrap();
    let v = ok_json(&["schedule", "--instance", &inst, "--scheduler", "frames"]);
    assert_eq!(v["length"], 3);
    let v = ok_json(&["schedule", "--instance", &inst, "--scheduler", "frames", "--padding", "4"]);
    assert!(v["length"].as_u64().unwrap() >= 3);
}

#[test]
fn decompose_reports_shortness() {
    let dir = TempDir::new().unwrap();
    let inst = path(&dir, "i.json");
    ok_json(&["gen", "random", "--n", "100", "--trees", "4", "--depth", "12", "--seed", "1", "--out", &inst]);
    for kind in ["heavy", "rank", "short"] {
        let out = path(&dir, &format!("{kind}.json"));
        let status = mcast(&["decompose", "--instance", &inst, "--kind", kind, "--out", &out]);
        assert!(status.status.success());
        let v: Value = serde_json::from_str(&fs::read_to_string(&out).unwrap()).unwrap();
        assert_eq!(v["trees"].as_array().unwrap().len(), 4);
        if kind == "short" {
            assert!(v["trees"].as_array().unwrap().iter().all(|t| t["short"]["pass"] == true));
        }
    }
}

#[test]
fn congest_sim_outputs() {
    let dir = TempDir::new().unwrap();
    let inst = path(&dir, "i.json");
    ok_json(&["gen", "random", "--n", "64", "--trees", "6", "--depth", "5", "--seed", "2", "--out", &inst]);
    let v = ok_json(&["congest-sim", "--instance", &inst, "--seed", "1", "--depths-known"]);
    assert!(v["rounds"].as_u64().unwrap() > 0);
    assert!(v["max_bits"].as_u64().unwrap() <= v["budget"].as_u64().unwrap());
    assert!(v["schedule"].is_object());
    assert!(v.get("decomposition").is_none());
    let transcript = path(&dir, "t.jsonl");
    let v = ok_json(&["congest-sim", "--instance", &inst, "--seed", "1", "--transcript", &transcript]);
    assert!(v["decomposition"]["trees"].is_array());
    assert!(Path::new(&transcript).exists());
    let lines = fs::read_to_string(&transcript).unwrap();
    assert!(lines.lines().count() > 0);
    let v = ok_json(&["congest-sim", "--instance", &inst, "--decompose-only"]);
    assert!(v.get("schedule").is_none());
}

#[test]
fn bench_empty_and_grid() {
    let dir = TempDir::new().unwrap();
    let spec = path(&dir, "empty.json");
    fs::write(&spec, "{}").unwrap();
    let out = mcast(&["bench", "--suite", &spec]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().count(), 1);
    assert!(text.starts_with("n,congestion,dilation,scheduler,seed,length"));

    let spec = path(&dir, "grid.json");
    fs::write(
        &spec,
        r#"{"cells":[{"n":40,"congestion":3,"depth":3},{"n":50,"congestion":4,"depth":5},{"n":60,"congestion":6,"depth":4}],
            "seeds":[0,1,2,3,4],"schedulers":["greedy","frames"]}"#,
    )
    .unwrap();
    let csv_path = path(&dir, "out.csv");
    assert!(mcast(&["bench", "--suite", &spec, "--out", &csv_path]).status.success());
    let mut reader = csv::Reader::from_path(&csv_path).unwrap();
    let rows: Vec<csv::StringRecord> = reader.records().map(Result::unwrap).collect();
    assert_eq!(rows.len(), 90 / 3);
    for r in &rows {
        let (c, d, len): (u64, u64, u64) = (r[1].parse().unwrap(), r[2].parse().unwrap(), r[5].parse().unwrap());
        if &r[3] == "greedy" {
            assert!(len <= c * d);
        }
        assert!(len >= c.max(d));
    }
}

#[test]
fn bench_grid_flags_count_rows() {
    let out = mcast(&["bench", "--n", "16,32,64", "--multipliers", "1", "--seeds", "0..5", "--schedulers", "greedy,random-delay"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().count(), 1 + 3 * 5 * 2);
}

#[test]
fn check_lemmas_and_opt() {
    let v = ok_json(&["check-lemmas", "--congestion", "2", "--depth", "2", "--schedulers", "greedy,frames"]);
    assert_eq!(v["pass"], true);
    assert_eq!(v["stats"]["m_D"], 6);
    let dir = TempDir::new().unwrap();
    let inst = path(&dir, "fig1.json");
    fs::write(&inst, FIG1).unwrap();
    let v = ok_json(&["opt", "--instance", &inst]);
    assert_eq!(v["result"]["outcome"], "optimal");
    assert_eq!(v["result"]["length"], 2);
}
