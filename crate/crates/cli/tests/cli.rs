use std::process::{Command, Output};

fn isoperim(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_isoperim")).args(args).output().expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

#[test]
fn area_of_relator() {
    let out = isoperim(&["area", "abABc"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(stdout(&out).contains("d=1 lower=1 l=4 exact"));
}

#[test]
fn area_json_record() {
    let out = isoperim(&["area", "BcBcabbA", "--format", "json"]);
    assert_eq!(out.status.code(), Some(0));
    let record: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(record["word"], "BcBcabbA");
    assert_eq!(record["d"], 2);
    assert_eq!(record["lower"], 2);
    assert_eq!(record["exact"], true);
    assert_eq!(record["factors"].as_array().unwrap().len(), 2);
    assert_eq!(record["trace"].as_array().unwrap().len(), 2);
}

#[test]
fn member_outside_normal_closure() {
    let out = isoperim(&["member", "c"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("not in normal closure"));
    assert_eq!(isoperim(&["member", "abABc"]).status.code(), Some(0));
}

#[test]
fn area_rejects_words_outside_n() {
    let out = isoperim(&["area", "ab"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn reduce_to_identity() {
    let out = isoperim(&["reduce", "aA"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(stdout(&out), "1\n");
}

#[test]
fn usage_errors_exit_two() {
    assert_eq!(isoperim(&["reduce", "axb"]).status.code(), Some(2));
    assert_eq!(isoperim(&["frobnicate"]).status.code(), Some(2));
    let out = isoperim(&["certify-curve", "--from-word", "abABc", "--epsilon", "0.5"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("--epsilon"));
    assert_eq!(isoperim(&["growth", "--builtin", "nope", "--n-max", "2"]).status.code(), Some(2));
}

#[test]
fn random_runs_are_reproducible() {
    for args in [
        &["oracle", "--random", "--seed", "12"][..],
        &["area", "--random", "--seed", "5", "--k-max", "6", "--format", "json"][..],
        &["certify-curve", "--from-word", "abABcabABc", "--seed", "9", "--format", "json"][..],
        &["growth", "--builtin", "sine-twist", "--n-max", "10", "--grid-res", "32"][..],
    ] {
        let first = isoperim(args);
        let second = isoperim(args);
        assert_eq!(first.status.code(), Some(0), "{args:?}");
        assert_eq!(first.stdout, second.stdout, "{args:?}");
    }
    assert_ne!(
        isoperim(&["area", "--random", "--seed", "1"]).stdout,
        isoperim(&["area", "--random", "--seed", "2"]).stdout
    );
}

#[test]
fn non_contractible_curve_exits_one() {
    let dir = std::env::temp_dir().join(format!("isoperim-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let square = dir.join("square.json");
    std::fs::write(&square, "[[0.5,0.5],[1.5,0.5],[1.5,1.5],[0.5,1.5]]").unwrap();
    let out = isoperim(&["certify-curve", "--curve", square.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stdout(&out).contains("contractible=false"));

    let inside = dir.join("inside.json");
    std::fs::write(&inside, "[[0.3,0.3],[0.7,0.3],[0.7,0.7],[0.3,0.7]]").unwrap();
    let out = isoperim(&["certify-curve", "--curve", inside.to_str().unwrap(), "--format", "json"]);
    assert_eq!(out.status.code(), Some(0));
    let record: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(record["contractible"], true);
    assert_eq!(record["d"], 0);

    let on_line = dir.join("on_line.json");
    std::fs::write(&on_line, "[[1.0,0.5],[1.5,0.5],[1.5,0.7]]").unwrap();
    assert_eq!(isoperim(&["certify-curve", "--curve", on_line.to_str().unwrap()]).status.code(), Some(1));
}

#[test]
fn growth_and_action_for_builtins() {
    let out = isoperim(&["growth", "--builtin", "translation", "--n-max", "4", "--grid-res", "8"]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    assert!(text.contains("hamiltonian=false"));
    assert!(text.contains("kappa=none"));
    assert!(text.contains("4 1.0000000000"));

    let out = isoperim(&["action", "--builtin", "sine-shear", "--x", "0,0", "--y", "0.5,0", "--format", "json"]);
    assert_eq!(out.status.code(), Some(0));
    let record: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let delta = record["delta"].as_f64().unwrap();
    assert!((delta - 1.0 / std::f64::consts::PI).abs() < 1e-7);

    let out = isoperim(&["action", "--builtin", "sine-shear", "--x", "0.25,0", "--y", "0.5,0"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn map_files_are_read() {
    let dir = std::env::temp_dir().join(format!("isoperim-map-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("map.json");
    std::fs::write(&path, r#"{"primitives":[{"kind":"vertical_shear","terms":[{"amplitude":1.0,"frequency":1}]}]}"#)
        .unwrap();
    let from_file = isoperim(&["growth", "--map", path.to_str().unwrap(), "--n-max", "3", "--grid-res", "16"]);
    let builtin = isoperim(&["growth", "--builtin", "sine-shear", "--n-max", "3", "--grid-res", "16"]);
    assert_eq!(from_file.status.code(), Some(0));
    assert_eq!(from_file.stdout, builtin.stdout);
}
