use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn taskmarket(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_taskmarket"))
        .args(args)
        .env_remove("TASKMARKET_OUT")
        .output()
        .unwrap()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn dir_contents(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<(String, Vec<u8>)> = fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().to_string_lossy().into_owned(), fs::read(e.path()).unwrap())
        })
        .collect();
    files.sort();
    files
}

#[test]
fn solve_writes_outputs() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().to_str().unwrap();
    let run = taskmarket(&["solve", "--scenario", "toy-sbs", "--out", out]);
    assert_eq!(run.status.code(), Some(0), "{}", stderr(&run));
    for name in ["equilibrium_prices.csv", "equilibrium_shares.csv", "auction_trace.csv", "manifest.json"] {
        assert!(tmp.path().join(name).is_file(), "missing {name}");
    }
    let prices = fs::read_to_string(tmp.path().join("equilibrium_prices.csv")).unwrap();
    assert!(prices.lines().count() > 1);
}

#[test]
fn invalid_parameters_exit_with_one() {
    let run = taskmarket(&["solve", "--scenario", "toy-sbs", "--alpha", "-1"]);
    assert_eq!(run.status.code(), Some(1));
    assert!(stderr(&run).contains("alpha must be positive"), "{}", stderr(&run));
}

#[test]
fn usage_errors_exit_with_64() {
    let run = taskmarket(&["solve", "--no-such-flag"]);
    assert_eq!(run.status.code(), Some(64));
    let run = taskmarket(&["frobnicate"]);
    assert_eq!(run.status.code(), Some(64));
}

#[test]
fn reproduce_is_byte_identical() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().to_str().unwrap();
    let mut runs = Vec::new();
    for _ in 0..2 {
        let run = taskmarket(&["reproduce", "--scenario", "toy-sbs", "--draws", "2000", "--out", out]);
        assert_eq!(run.status.code(), Some(0), "{}", stderr(&run));
        runs.push(dir_contents(tmp.path()));
    }
    assert!(runs[0].len() >= 9);
    for ((name, a), (_, b)) in runs[0].iter().zip(&runs[1]) {
        assert!(a == b, "{name} differs between runs");
    }
}

#[test]
fn exported_scenario_reloads() {
    let tmp = tempfile::tempdir().unwrap();
    let file = tmp.path().join("general.json");
    let run = taskmarket(&["export-scenario", "--scenario", "general-example", "--out", file.to_str().unwrap()]);
    assert_eq!(run.status.code(), Some(0), "{}", stderr(&run));

    let builtin = tmp.path().join("builtin");
    let loaded = tmp.path().join("loaded");
    for (scenario, dir) in [("general-example", &builtin), (file.to_str().unwrap(), &loaded)] {
        let run = taskmarket(&["solve", "--scenario", scenario, "--out", dir.to_str().unwrap()]);
        assert_eq!(run.status.code(), Some(0), "{}", stderr(&run));
    }
    for name in ["equilibrium_prices.csv", "equilibrium_shares.csv"] {
        assert_eq!(fs::read(builtin.join(name)).unwrap(), fs::read(loaded.join(name)).unwrap());
    }

    let again = tmp.path().join("again.json");
    taskmarket(&["export-scenario", "--scenario", file.to_str().unwrap(), "--out", again.to_str().unwrap()]);
    assert_eq!(fs::read(&file).unwrap(), fs::read(&again).unwrap());
}

#[test]
fn malformed_scenario_names_the_field() {
    let tmp = tempfile::tempdir().unwrap();
    let file = tmp.path().join("bad.json");
    fs::write(
        &file,
        r#"{"tasks":1,"states":1,"seed":1,"agents":[{"rho":[[0.5]],"arrival":[[{"kind":"exponential","rate":"fast"}]],"beliefs":[1.0]}]}"#,
    )
    .unwrap();
    let run = taskmarket(&["solve", "--scenario", file.to_str().unwrap()]);
    assert_eq!(run.status.code(), Some(1));
    assert!(stderr(&run).contains("agents[0].arrival[0][0]"), "{}", stderr(&run));

    fs::write(
        &file,
        r#"{"tasks":1,"states":1,"seed":1,"agents":[{"rho":[[0.0]],"arrival":[[{"kind":"exponential","rate":1}]],"beliefs":[1.0]}]}"#,
    )
    .unwrap();
    let run = taskmarket(&["solve", "--scenario", file.to_str().unwrap()]);
    assert_eq!(run.status.code(), Some(1));
    assert!(stderr(&run).contains("rho must be strictly positive"), "{}", stderr(&run));
}

#[test]
fn output_directory_from_environment() {
    let tmp = tempfile::tempdir().unwrap();
    let run = Command::new(env!("CARGO_BIN_EXE_taskmarket"))
        .args(["solve", "--scenario", "toy-sbs"])
        .env("TASKMARKET_OUT", tmp.path())
        .current_dir(tmp.path())
        .output()
        .unwrap();
    assert_eq!(run.status.code(), Some(0), "{}", stderr(&run));
    assert!(tmp.path().join("equilibrium_prices.csv").is_file());
    assert!(!tmp.path().join("out").exists());
}
