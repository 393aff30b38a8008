use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use jsonschema::JSONSchema;
use serde_json::Value;

fn qbench(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qbench")).args(args).output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn read_json(p: &Path) -> Value {
    serde_json::from_slice(&fs::read(p).unwrap()).unwrap()
}

fn validate_dir(dir: &Path) -> usize {
    let mut checked = 0;
    for entry in fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        let name = path.file_name().unwrap().to_str().unwrap().to_string();
        if !name.ends_with(".json") {
            continue;
        }
        let schema_name = qbench::scenario::schema_for_file(&name).unwrap_or_else(|| panic!("no schema for {name}"));
        let schema: Value = serde_json::from_str(qbench::scenario::schema(schema_name).unwrap()).unwrap();
        let compiled = JSONSchema::compile(&schema).unwrap_or_else(|e| panic!("{schema_name}: {e}"));
        let instance = read_json(&path);
        if let Err(errors) = compiled.validate(&instance) {
            let msgs: Vec<String> = errors.map(|e| format!("{} at {}", e, e.instance_path)).collect();
            panic!("{name} violates {schema_name}: {msgs:?}");
        }
        checked += 1;
    }
    checked
}

#[test]
fn eraser_whichpath_joint_is_quarter_everywhere() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let o = qbench(&["run", "eraser", "--left", "interference", "--right", "whichpath", "--mode", "analytic", "--out", out]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let joint = read_json(&dir.path().join("joint.json"));
    let cells = joint["copenhagen"].as_array().unwrap();
    assert_eq!(cells.len(), 4);
    for c in cells {
        assert_eq!(c["probability"], 0.25);
        assert_eq!(c["exact"], "1/4");
    }
}

#[test]
fn every_scenario_output_matches_its_schema() {
    let runs: &[&[&str]] = &[
        &["run", "eraser"],
        &["run", "eraser", "--mode", "montecarlo", "--trials", "500", "--right-first", "true"],
        &["run", "eraser", "--theta", "0.3"],
        &["run", "double_slit", "--steps", "200", "--trajectories", "40", "--points", "256"],
        &["run", "free_packet", "--steps", "200", "--trajectories", "200", "--points", "256", "--dt", "0.001"],
        &["run", "harmonic", "--steps", "300", "--trajectories", "100"],
        &["run", "repeatability", "--mode", "montecarlo", "--trials", "500"],
        &["run", "repeatability"],
        &["run", "bell_chsh", "--mode", "montecarlo", "--trials", "2000", "--chsh-step", "pi/8"],
        &["run", "claims_suite", "--trials", "2000"],
    ];
    for args in runs {
        let dir = tempfile::tempdir().unwrap();
        let mut full = args.to_vec();
        full.extend(["--out", dir.path().to_str().unwrap()]);
        let o = qbench(&full);
        assert_eq!(code(&o), 0, "{args:?}: {}", stderr(&o));
        assert!(validate_dir(dir.path()) >= 2, "{args:?}");
    }
}

#[test]
fn manifest_lists_digests_of_written_files() {
    let dir = tempfile::tempdir().unwrap();
    let o = qbench(&["run", "bell_chsh", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    let m = read_json(&dir.path().join("manifest.json"));
    let files = m["files"].as_array().unwrap();
    assert_eq!(files.len(), 3);
    for f in files {
        let bytes = fs::read(dir.path().join(f["path"].as_str().unwrap())).unwrap();
        assert_eq!(f["sha256"], qbench::scenario::sha256_hex(&bytes));
    }
}

#[test]
fn format_flag_restricts_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let o = qbench(&["run", "eraser", "--format", "csv", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    let mut names: Vec<String> = fs::read_dir(dir.path())
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .collect();
    names.sort();
    assert_eq!(names, ["joint.csv", "manifest.json"]);
}

#[test]
fn config_file_with_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.json");
    fs::write(&cfg, r#"{"scenario": "eraser", "right": "whichpath", "seed": 3}"#).unwrap();
    let out = dir.path().join("o");
    let o = qbench(&["run", "--config", cfg.to_str().unwrap(), "--seed", "9", "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let m = read_json(&out.join("manifest.json"));
    assert_eq!(m["config"]["seed"], 9);
    assert_eq!(m["config"]["eraser"]["right"], "whichpath");
}

#[test]
fn config_errors_exit_one_with_location() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.json");
    fs::write(&cfg, "{\n  \"scenario\": \"eraser\",\n  \"trails\": 5\n}").unwrap();
    let o = qbench(&["run", "--config", cfg.to_str().unwrap()]);
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("line 3"), "{}", stderr(&o));

    let o = qbench(&["run", "free_packet", "--dt", "1.0"]);
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("`dt`"), "{}", stderr(&o));

    let o = qbench(&["run", "eraser", "--mode", "montecarlo", "--trials", "0"]);
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("trials"));

    let o = qbench(&["run", "nonsense"]);
    assert_eq!(code(&o), 1);
    assert_eq!(code(&qbench(&["run", "eraser", "--bogus"])), 1);
    assert_eq!(code(&qbench(&["--help"])), 0);
}

#[test]
fn unwritable_output_directory_is_a_runtime_failure() {
    let dir = tempfile::tempdir().unwrap();
    let blocker = dir.path().join("file");
    fs::write(&blocker, "x").unwrap();
    let out = blocker.join("sub");
    let o = qbench(&["run", "repeatability", "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 2, "{}", stderr(&o));
}

#[test]
fn same_seed_same_bytes_across_worker_counts() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let args = ["run", "eraser", "--mode", "montecarlo", "--trials", "3000", "--seed", "11"];
    for (dir, w) in [(&a, "1"), (&b, "3")] {
        let mut full = args.to_vec();
        full.extend(["--workers", w, "--out", dir.path().to_str().unwrap()]);
        assert_eq!(code(&qbench(&full)), 0);
    }
    assert_eq!(
        fs::read(a.path().join("manifest.json")).unwrap(),
        fs::read(b.path().join("manifest.json")).unwrap()
    );
}

#[test]
fn plot_renders_csv_and_records() {
    let dir = tempfile::tempdir().unwrap();
    let run_dir = dir.path().join("ds");
    let o = qbench(&[
        "run", "double_slit", "--steps", "200", "--trajectories", "30", "--points", "256", "--out", run_dir.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0);
    let svg = dir.path().join("t.svg");
    let o = qbench(&["plot", run_dir.join("trajectories.csv").to_str().unwrap(), "--out", svg.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert_eq!(fs::read_to_string(&svg).unwrap().matches("<polyline").count(), 30);

    let er = dir.path().join("er");
    assert_eq!(code(&qbench(&["run", "eraser", "--out", er.to_str().unwrap()])), 0);
    let o = qbench(&["plot", er.join("setting_dependence.json").to_str().unwrap(), "--out", svg.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(fs::read_to_string(&svg).unwrap().contains("class=\"changed\""));

    let empty = dir.path().join("empty.csv");
    fs::write(&empty, "trajectory_id,time,q1\n").unwrap();
    assert_eq!(code(&qbench(&["plot", empty.to_str().unwrap(), "--out", svg.to_str().unwrap()])), 0);
    assert_eq!(fs::read_to_string(&svg).unwrap().matches("<polyline").count(), 0);

    let bad = dir.path().join("bad.csv");
    fs::write(&bad, "trajectory_id,time,q1\n0,0,1\n0,0.1,oops\n").unwrap();
    let o = qbench(&["plot", bad.to_str().unwrap(), "--out", svg.to_str().unwrap()]);
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("line 3"), "{}", stderr(&o));
}

#[test]
fn schema_verb_lists_and_prints() {
    let o = qbench(&["schema"]);
    assert_eq!(code(&o), 0);
    let list = String::from_utf8(o.stdout).unwrap();
    assert!(list.lines().any(|l| l == "manifest"));
    let o = qbench(&["schema", "config"]);
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["type"], "object");
    assert_eq!(code(&qbench(&["schema", "missing"])), 1);
}

#[test]
fn claims_suite_exits_zero_when_all_verdicts_match() {
    let dir = tempfile::tempdir().unwrap();
    let o = qbench(&["run", "claims_suite", "--seed", "7", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let doc = read_json(&dir.path().join("claims.json"));
    assert_eq!(doc["all_match"], true);
    assert!(doc["claims"].as_array().unwrap().len() >= 20);
}
