use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_llp-lab"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).env_remove("LLP_LAB_THREADS").output().expect("llp-lab runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn config(name: &str) -> String {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(name).to_string_lossy().into_owned()
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("llp-lab-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

#[test]
fn bounds_print_sample_sizes() {
    let out = run(&["bounds", "--hoeffding", "--eps", "0.1", "--delta", "0.05"]);
    assert!(out.status.success());
    assert_eq!(stdout(&out).trim(), "185");
    let out = run(&["bounds", "--gap", "--beta", "0.3", "--delta", "0.1"]);
    assert_eq!(stdout(&out).trim(), "67");
    let out = run(&["bounds", "--uc-size", "--d", "2", "--eps", "0.3", "--delta", "0.1"]);
    assert_eq!(stdout(&out).trim(), "2187");
}

#[test]
fn usage_errors_exit_two_with_json() {
    for args in [&["bogus"][..], &["bounds", "--hoeffding", "--eps", "2", "--delta", "0.1"]] {
        let out = run(args);
        assert_eq!(out.status.code(), Some(2), "{args:?}");
        let err: Value = serde_json::from_slice(&out.stderr).unwrap();
        assert!(err["error"].is_string() && err["message"].is_string());
    }
}

#[test]
fn gen_is_deterministic_and_feeds_reduce() {
    let a = run(&["gen", "--x3c", "--universe", "9", "--triples", "6", "--seed", "11"]);
    let b = run(&["gen", "--x3c", "--universe", "9", "--triples", "6", "--seed", "11"]);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    let path = scratch("x3c.json");
    std::fs::write(&path, &a.stdout).unwrap();
    let path = path.to_string_lossy();
    let out = run(&["reduce", "--chain", "x3c-epsc-conjunction", "--in", &path, "--check"]);
    assert_eq!(out.status.code(), Some(0));
    let chain: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!(chain["epsc"].is_object() && chain["consistency"].is_object());
    let oracle = run(&["oracle", "--x3c", "--in", &path]);
    assert!(oracle.status.success());
    let decision: Value = serde_json::from_slice(&oracle.stdout).unwrap();
    assert!(decision["decision"].is_boolean());
}

#[test]
fn gen_task_feeds_learn() {
    let task = run(&["gen", "--task", "--class", "finite_subset", "--support", "4", "--m", "30", "--seed", "2"]);
    assert!(task.status.success());
    let path = scratch("task.json");
    std::fs::write(&path, &task.stdout).unwrap();
    let out = run(&["learn", "--task", &path.to_string_lossy(), "--learner", "subset-sum", "--seed", "1"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let outcome: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!(outcome["hypothesis"].is_object());
}

#[test]
fn trials_csv_is_stable() {
    let cfg = config("ac06_gap_finite_subsets.json");
    let a = run(&["trials", "--config", &cfg, "--trials", "20"]);
    let b = run(&["trials", "--config", &cfg, "--trials", "20"]);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    let text = stdout(&a);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("trial,seed,p_c_num,p_c_den,p_h_num,p_h_den,residual,success,ms"));
    assert_eq!(lines.count(), 20);
    let threaded = bin()
        .args(["trials", "--config", &cfg, "--trials", "20"])
        .env("LLP_LAB_THREADS", "1")
        .output()
        .unwrap();
    assert_eq!(threaded.stdout, a.stdout);
}

#[test]
fn print_config_resolves_sample_size() {
    let out = run(&["trials", "--config", &config("ac06_gap_finite_subsets.json"), "--print-config"]);
    assert!(out.status.success());
    let cfg: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(cfg["m"], 67);
    assert_eq!(cfg["learner"], "gap");
}

#[test]
fn check_exits_three_below_threshold() {
    let cfg = config("ac06_gap_finite_subsets.json");
    let out = run(&["trials", "--config", &cfg, "--trials", "30", "--m", "1", "--epsilon", "0.01", "--check"]);
    assert_eq!(out.status.code(), Some(3));
    let out = run(&["trials", "--config", &cfg, "--trials", "30", "--format", "json", "--check"]);
    assert_eq!(out.status.code(), Some(0));
    let report: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["rows"].as_array().unwrap().len(), 30);
}

#[test]
fn reduce_config_writes_report_and_transcript() {
    let out_path = scratch("chain.json");
    let transcript = scratch("calls.jsonl");
    let out = run(&[
        "reduce",
        "--config",
        &config("ac11_consistency_via_llp.json"),
        "--out",
        &out_path.to_string_lossy(),
        "--transcript",
        &transcript.to_string_lossy(),
        "--check",
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let report: Value = serde_json::from_str(&std::fs::read_to_string(&out_path).unwrap()).unwrap();
    assert_eq!(report["runs"], 100);
    let calls = std::fs::read_to_string(&transcript).unwrap();
    assert!(calls.lines().count() >= 100);
    for line in calls.lines() {
        let call: Value = serde_json::from_str(line).unwrap();
        assert!(call["run"].is_u64());
    }
}
