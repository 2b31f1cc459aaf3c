use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn jaynes(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_jaynes"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn examples_dir() -> tempfile::TempDir {
    let dir = tempfile::tempdir().unwrap();
    let out = jaynes(&["examples", "--out", dir.path().to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    dir
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn report(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| {
        panic!("{e}: stdout {:?} stderr {:?}", String::from_utf8_lossy(&out.stdout), String::from_utf8_lossy(&out.stderr))
    })
}

fn num(v: &Value) -> f64 {
    v.as_f64().unwrap()
}

#[test]
fn examples_are_byte_identical_on_rerun() {
    let a = examples_dir();
    let b = examples_dir();
    let mut names: Vec<_> = std::fs::read_dir(a.path()).unwrap().map(|e| e.unwrap().file_name()).collect();
    names.sort();
    assert_eq!(names.len(), 8);
    for name in names {
        let x = std::fs::read(a.path().join(&name)).unwrap();
        let y = std::fs::read(b.path().join(&name)).unwrap();
        assert_eq!(x, y, "{name:?}");
    }
    let random = std::fs::read_to_string(a.path().join("random_two_qubit.json")).unwrap();
    assert!(random.contains("\"seed\""));
}

#[test]
fn every_example_analyzes() {
    let dir = examples_dir();
    for entry in std::fs::read_dir(dir.path()).unwrap() {
        let p = entry.unwrap().path();
        let out = jaynes(&["analyze", path_str(&p)]);
        assert!(out.status.success(), "{p:?}: {}", String::from_utf8_lossy(&out.stderr));
    }
}

#[test]
fn analyze_dephasing_and_identity() {
    let dir = examples_dir();
    let r = report(&jaynes(&["analyze", path_str(&dir.path().join("dephasing.json"))]));
    assert_eq!(r["analysis"]["dim_attractor"], 2);
    assert_eq!(r["spec"]["unital"], true);
    // oracle: the non-peripheral eigenvalue of dephasing is 1 − 2p = 0.4
    assert!((num(&r["analysis"]["spectral_gap"]) - 0.6).abs() < 1e-12);

    let r = report(&jaynes(&["analyze", path_str(&dir.path().join("identity.json"))]));
    assert_eq!(r["analysis"]["dim_attractor"], 4);
    assert!(r["analysis"]["spectral_gap"].is_null());
    assert_eq!(num(&r["analysis"]["regime_time"]), 0.0);
}

#[test]
fn reports_are_deterministic() {
    let dir = examples_dir();
    for cmd in [["analyze", "qutrit_block.json"], ["verify", "unitary_theta.json"]] {
        let p = dir.path().join(cmd[1]);
        let a = jaynes(&[cmd[0], path_str(&p)]);
        let b = jaynes(&[cmd[0], path_str(&p)]);
        assert!(a.status.success());
        assert_eq!(a.stdout, b.stdout);
    }
}

#[test]
fn malformed_input_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let p = write(dir.path(), "bad.json", "{\"schema_version\": \"1\", \"kind\": \"discrete\"");
    let out = jaynes(&["analyze", path_str(&p)]);
    assert_eq!(out.status.code(), Some(2));
    assert!(!out.stderr.is_empty());

    let p = write(
        dir.path(),
        "shape.json",
        r#"{"schema_version":"1","kind":"discrete","dim":2,"kraus":[[[[1,0],[0,0]],[[0,0]]]]}"#,
    );
    let out = jaynes(&["analyze", path_str(&p)]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("kraus[0][1]"));

    let out = jaynes(&["analyze", "/nonexistent/channel.json"]);
    assert_eq!(out.status.code(), Some(2));
}

fn state_file(dir: &Path, rows: &str, dim: usize) -> PathBuf {
    write(dir, "state.json", &format!(r#"{{"schema_version":"1","dim":{dim},"matrix":{rows}}}"#))
}

#[test]
fn evolve_examples() {
    let dir = examples_dir();
    let state = state_file(dir.path(), "[[[0.5,0],[0,0]],[[0,0],[0.5,0]]]", 2);
    let ad = dir.path().join("amplitude_damping.json");
    let out = jaynes(&["evolve", path_str(&ad), "--state", path_str(&state), "--times", "0,200"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let r = report(&out);
    let samples = r["evolution"].as_array().unwrap();
    // t = 0 reproduces the input exactly
    assert_eq!(samples[0]["brute_force"], serde_json::json!([[[0.5, 0.0], [0.0, 0.0]], [[0.0, 0.0], [0.5, 0.0]]]));
    assert!(num(&samples[1]["discrepancy"]) <= 1e-10);

    let out = jaynes(&["evolve", path_str(&ad), "--state", path_str(&state), "--times", "1.5"]);
    assert_eq!(out.status.code(), Some(2));

    let cont = dir.path().join("amplitude_damping_continuous.json");
    let out = jaynes(&["evolve", path_str(&cont), "--state", path_str(&state), "--times", "0.25,60"]);
    assert!(out.status.success());
    let r = report(&out);
    assert!(num(&r["evolution"][1]["discrepancy"]) <= 1e-10);
}

#[test]
fn fit_examples_and_exit_codes() {
    let dir = examples_dir();
    let deph = dir.path().join("dephasing.json");
    let c = write(dir.path(), "c.json", r#"{"schema_version":"1","constraints":[{"label":"C1","target":0.5}]}"#);
    let out = jaynes(&["fit", path_str(&deph), "--constraints", path_str(&c), "--mode", "stationary"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let r = report(&out);
    let fit = &r["fit"];
    assert_eq!(fit["status"], "converged");
    // oracle: ⟨σ_z⟩ = −tanh γ
    assert!((num(&fit["gammas"][0]).tanh() + 0.5).abs() < 1e-9);
    let state = &fit["samples"][0]["state"];
    assert!((num(&state[0][0][0]) - 0.75).abs() < 1e-10);
    assert!((num(&state[1][1][0]) - 0.25).abs() < 1e-10);

    let empty = write(dir.path(), "e.json", r#"{"schema_version":"1","constraints":[]}"#);
    let out = jaynes(&["fit", path_str(&deph), "--constraints", path_str(&empty), "--mode", "partial"]);
    assert!(out.status.success());
    let r = report(&out);
    assert!((num(&r["fit"]["samples"][2]["state"][0][0][0]) - 0.5).abs() < 1e-14);

    let edge = write(dir.path(), "b.json", r#"{"schema_version":"1","constraints":[{"index":1,"target":1.0}]}"#);
    let out = jaynes(&["fit", path_str(&deph), "--constraints", path_str(&edge), "--mode", "stationary"]);
    assert_eq!(out.status.code(), Some(4));
    assert_eq!(report(&out)["fit"]["status"], "boundary_suspected");

    let twice = write(
        dir.path(),
        "d.json",
        r#"{"schema_version":"1","constraints":[{"label":"C1","target":0.1},{"observable":[[[2,0],[0,0]],[[0,0],[-2,0]]],"target":0.2}]}"#,
    );
    let out = jaynes(&["fit", path_str(&deph), "--constraints", path_str(&twice), "--mode", "stationary"]);
    assert_eq!(out.status.code(), Some(3));

    let unitary = dir.path().join("unitary_theta.json");
    let osc = write(dir.path(), "o.json", r#"{"schema_version":"1","constraints":[{"label":"C2","target":0.2}]}"#);
    let out = jaynes(&["fit", path_str(&unitary), "--constraints", path_str(&osc), "--mode", "stationary"]);
    assert_eq!(out.status.code(), Some(2));
    let out = jaynes(&["fit", path_str(&unitary), "--constraints", path_str(&osc), "--mode", "partial"]);
    assert!(out.status.success());

    let known = write(
        dir.path(),
        "k.json",
        r#"{"schema_version":"1","state":[[[0.7,0],[0,0]],[[0,0],[0.3,0]]]}"#,
    );
    let id = dir.path().join("identity.json");
    let out = jaynes(&["fit", path_str(&id), "--constraints", path_str(&known), "--mode", "known"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let r = report(&out);
    assert!((num(&r["fit"]["samples"][0]["state"][0][0][0]) - 0.7).abs() < 1e-10);
    assert!(num(&r["fit"]["entropy"]["check"]) <= 1e-8);
}

#[test]
fn verify_exit_codes() {
    let dir = examples_dir();
    let out = jaynes(&["verify", path_str(&dir.path().join("amplitude_damping.json")), "--suite", "full"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(report(&out)["verification"]["all_passed"], true);

    let broken = write(
        dir.path(),
        "broken.json",
        r#"{"schema_version":"1","kind":"discrete","dim":2,"kraus":[[[[1,0],[0,0]],[[0,0],[0.5,0]]]]}"#,
    );
    let out = jaynes(&["verify", path_str(&broken), "--suite", "fast"]);
    assert_eq!(out.status.code(), Some(1));
    let r = report(&out);
    let tp = r["verification"]["checks"]
        .as_array()
        .unwrap()
        .iter()
        .find(|c| c["name"] == "trace_preservation")
        .unwrap();
    assert_eq!(tp["passed"], false);
    // the same file is rejected by commands that need a valid process
    assert_eq!(jaynes(&["analyze", path_str(&broken)]).status.code(), Some(2));

    let out = jaynes(&["verify", path_str(&dir.path().join("unitary_theta.json"))]);
    assert!(out.status.success());
    let r = report(&out);
    for name in ["projected_commutation", "conservation"] {
        let row = r["verification"]["checks"].as_array().unwrap().iter().find(|c| c["name"] == name).unwrap();
        assert_eq!(row["passed"], true, "{name}");
    }
}

#[test]
fn tolerance_overrides() {
    let dir = examples_dir();
    let p = dir.path().join("dephasing.json");
    let out = jaynes(&["analyze", path_str(&p), "--tol-override", "fit=1e-9"]);
    assert!(out.status.success());
    let r = report(&out);
    let fit = r["tolerances"].as_array().unwrap().iter().find(|t| t["key"] == "fit").unwrap();
    assert_eq!(num(&fit["value"]), 1e-9);
    let out = jaynes(&["analyze", path_str(&p), "--tol-override", "bogus=1"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn unwritable_output_directory_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let blocker = write(dir.path(), "file", "");
    let out = jaynes(&["examples", "--out", path_str(&blocker.join("sub"))]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn verbose_summary_goes_to_stderr() {
    let dir = examples_dir();
    let out = jaynes(&["analyze", path_str(&dir.path().join("identity.json")), "--verbose"]);
    assert!(String::from_utf8_lossy(&out.stderr).contains("dim_attractor = 4"));
    assert!(serde_json::from_slice::<Value>(&out.stdout).is_ok());
}

#[test]
fn shipped_data_matches_generator() {
    let dir = examples_dir();
    let shipped = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data");
    for entry in std::fs::read_dir(dir.path()).unwrap() {
        let p = entry.unwrap().path();
        let name = p.file_name().unwrap();
        assert_eq!(std::fs::read(&p).unwrap(), std::fs::read(shipped.join(name)).unwrap(), "{name:?}");
    }
}

#[test]
fn shipped_files_round_trip_canonically() {
    use jaynes_qmp_cli::files::{parse_json, ChannelFile};
    let shipped = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data");
    for entry in std::fs::read_dir(shipped).unwrap() {
        let p = entry.unwrap().path();
        let text = std::fs::read_to_string(&p).unwrap();
        let parsed: ChannelFile = parse_json(&text).unwrap();
        assert_eq!(parsed.to_canonical_string(), text, "{p:?}");
    }
}
