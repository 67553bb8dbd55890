use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn renormlab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_renormlab"))
        .args(args)
        .env_remove("RENORMLAB_NODE_BUDGET")
        .output()
        .expect("binary runs")
}

fn read(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn run_to(dir: &Path, name: &str, args: &[&str]) -> (Output, Value) {
    let out = dir.join(name);
    let mut all = args.to_vec();
    all.extend(["--out", out.to_str().unwrap()]);
    let o = renormlab(&all);
    let doc = if out.exists() { read(&out) } else { Value::Null };
    (o, doc)
}

#[test]
fn generate_lambda_lists_injections() {
    let dir = tempfile::tempdir().unwrap();
    let (o, doc) = run_to(dir.path(), "l.json", &["generate", "--kind", "lambda", "--h", "2", "--N", "3"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(doc["schema_version"], 1);
    assert_eq!(doc["tool"], "renormlab");
    // 1 empty + 3 singletons + 3·2 pairs
    assert_eq!(doc["results"]["nodes"], 10);
    let labels: Vec<&str> = doc["results"]["labels"].as_array().unwrap().iter().map(|v| v.as_str().unwrap()).collect();
    assert_eq!(labels[0], "{}");
    assert!(labels.contains(&"{0:2,1:1}"));
    assert_eq!(doc["results"]["weight"][0], "0/1");
}

#[test]
fn classify_generated_lambda() {
    let dir = tempfile::tempdir().unwrap();
    let (_, _) = run_to(dir.path(), "l.json", &["generate", "--kind", "lambda", "--h", "2", "--N", "3"]);
    let l = dir.path().join("l.json");
    let l = l.to_str().unwrap();
    let (o, doc) = run_to(dir.path(), "c.json", &["classify", "--tree", l, "--rho", l, "--require", "T5_1"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let classes = doc["results"]["classes"].as_array().unwrap();
    assert_eq!(classes.len(), 10);
    assert!(classes.iter().all(|c| c["status"] == "good"));
    assert_eq!(doc["results"]["bad"].as_array().unwrap().len(), 0);
}

#[test]
fn classify_flags_bad_star() {
    let dir = tempfile::tempdir().unwrap();
    let (_, _) = run_to(dir.path(), "s.json", &["generate", "--kind", "star"]);
    let rho = dir.path().join("w.json");
    std::fs::write(&rho, r#"{"R": "1/2", "L": "1/2"}"#).unwrap();
    let s = dir.path().join("s.json");
    let (o, doc) = run_to(
        dir.path(),
        "c.json",
        &["classify", "--tree", s.to_str().unwrap(), "--rho", rho.to_str().unwrap(), "--require", "T6_1"],
    );
    assert_eq!(o.status.code(), Some(1));
    assert_eq!(doc["results"]["bad"][0], "R");
}

#[test]
fn choquet_game_probe_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let args = ["probe", "--name", "choquet_game", "--rounds", "50", "--seed", "7"];
    let (o, a) = run_to(dir.path(), "a.json", &args);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(a["results"]["verdict"], "PASS");
    assert!(a["results"]["plays"][0]["trace"].as_array().unwrap().len() == 50);
    let (_, b) = run_to(dir.path(), "b.json", &args);
    assert_eq!(a["results"], b["results"]);
    let diff = renormlab(&["report-diff", dir.path().join("a.json").to_str().unwrap(), dir.path().join("b.json").to_str().unwrap()]);
    assert_eq!(String::from_utf8_lossy(&diff.stdout).trim(), "no differences");
}

#[test]
fn parallel_plays_match_serial() {
    let dir = tempfile::tempdir().unwrap();
    let base = ["game", "--rounds", "30", "--seed", "3", "--plays", "8"];
    let (_, serial) = run_to(dir.path(), "s.json", &base);
    let mut par = base.to_vec();
    par.extend(["--jobs", "4"]);
    let (o, parallel) = run_to(dir.path(), "p.json", &par);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(serial["results"], parallel["results"]);
    assert_eq!(parallel["results"]["plays"].as_array().unwrap().len(), 24);
}

#[test]
fn randomized_probe_requires_seed() {
    let o = renormlab(&["probe", "--name", "choquet_game", "--rounds", "5"]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn replayed_illegal_move_is_an_input_error() {
    let dir = tempfile::tempdir().unwrap();
    let moves = dir.path().join("m.json");
    std::fs::write(&moves, r#"[{"t": [0, 1, 2, 3], "p": 0}, {"t": [0, 1, 2, 3, 4], "p": 5}]"#).unwrap();
    let o = renormlab(&["game", "--moves", moves.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3));
    std::fs::write(&moves, r#"[{"t": [0, 1, 2, 3], "p": 0}, {"t": [0, 1, 2, 3, 5], "p": 5}]"#).unwrap();
    let (o, doc) = run_to(dir.path(), "g.json", &["game", "--moves", moves.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(doc["results"]["r_list"], serde_json::json!([4, 6]));
}

#[test]
fn report_diff_flags_seed_change_and_schema() {
    let dir = tempfile::tempdir().unwrap();
    let (_, _) = run_to(dir.path(), "a.json", &["probe", "--name", "choquet_game", "--seed", "1"]);
    let (_, mut b) = run_to(dir.path(), "b.json", &["probe", "--name", "choquet_game", "--seed", "2"]);
    let a = dir.path().join("a.json");
    let bp = dir.path().join("b.json");
    let o = renormlab(&["report-diff", a.to_str().unwrap(), bp.to_str().unwrap()]);
    let text = String::from_utf8_lossy(&o.stdout);
    assert!(text.contains("changed config.seed: 1 -> 2"));
    assert!(text.contains("results.plays"));
    b["schema_version"] = 2.into();
    std::fs::write(&bp, b.to_string()).unwrap();
    let o = renormlab(&["report-diff", a.to_str().unwrap(), bp.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn norm_and_operator_on_small_tree() {
    let dir = tempfile::tempdir().unwrap();
    let (_, _) = run_to(dir.path(), "c.json", &["generate", "--kind", "chain", "--n", "2"]);
    let rho = dir.path().join("w.json");
    let c = dir.path().join("c.json");
    let (c, rho) = (c.to_str().unwrap(), rho.to_str().unwrap());
    let names: Vec<String> = read(Path::new(c))["results"]["tree"]["classes"]
        .as_array()
        .unwrap()
        .iter()
        .map(|k| k["id"].as_str().unwrap().to_string())
        .collect();
    std::fs::write(rho, format!(r#"{{"{}": "1/2", "{}": "1/1"}}"#, names[0], names[1])).unwrap();
    let (o, doc) = run_to(dir.path(), "n.json", &["norm", "--tree", c, "--rho", rho, "--name", "ordinal", "--values", "1,1"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    // the two-point chain norm with f = (1,1)
    assert_eq!(doc["results"]["norm"]["square"], "17/48");
    assert_eq!(doc["results"]["record"]["norm"], "ordinal");
    let (o, doc) = run_to(dir.path(), "o.json", &["operator", "--tree", c, "--rho", rho, "--name", "rs_rank"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(doc["results"]["rank"], 2);
    let (o, doc) = run_to(
        dir.path(),
        "r.json",
        &["operator", "--tree", c, "--rho", rho, "--name", "reconstruct", "--values", "1,-1/2", "--eps", "1/4"],
    );
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(doc["results"]["within_eps"], true);
}

#[test]
fn node_budget_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let (_, _) = run_to(dir.path(), "d.json", &["generate", "--kind", "dyadic"]);
    let d = dir.path().join("d.json");
    let rho = dir.path().join("w.json");
    std::fs::write(&rho, r#"{"D": "1/1"}"#).unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_renormlab"))
        .args(["norm", "--tree", d.to_str().unwrap(), "--rho", rho.to_str().unwrap(), "--name", "sup", "--depth", "12"])
        .args(["--copies", "1", "--values", "1"])
        .env("RENORMLAB_NODE_BUDGET", "10")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(2), "{}", String::from_utf8_lossy(&o.stderr));
}
