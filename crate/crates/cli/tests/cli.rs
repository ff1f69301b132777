use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn run(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hyperreg"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn json(out: &Output) -> Value {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("json report")
}

fn setup() -> TempDir {
    let dir = tempfile::tempdir().unwrap();
    let out = run(
        dir.path(),
        &["gen", "--r", "3", "--k", "2", "--parts", "3,3,3", "--b", "2,2", "--seed", "7", "--out", "g.json"],
    );
    assert!(out.status.success());
    dir
}

#[test]
fn gen_is_deterministic_and_loadable() {
    let dir = setup();
    let again = run(dir.path(), &["gen", "--r", "3", "--k", "2", "--parts", "3,3,3", "--b", "2,2", "--seed", "7"]);
    assert_eq!(fs::read(dir.path().join("g.json")).unwrap(), again.stdout);
    let g = json(&again);
    assert_eq!(g["r"], 3);
    assert_eq!(g["coloring"]["0,1"].as_array().unwrap().len(), 9);
}

#[test]
fn regularize_writes_manifest_and_replays() {
    let dir = setup();
    let out = run(dir.path(), &["regularize", "g.json", "--seed", "3", "--out", "reg.json"]);
    assert!(out.status.success());
    let manifest: Value =
        serde_json::from_slice(&fs::read(dir.path().join("reg.json.manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["command"], "regularize");
    assert_eq!(manifest["seeds"][0], 3);
    assert!(manifest["inputs"]["g.json"].is_string());

    let replay = run(dir.path(), &["replay", "reg.json.manifest.json"]);
    assert!(replay.status.success(), "{}", String::from_utf8_lossy(&replay.stderr));

    // Changing the input makes the replay refuse.
    fs::write(dir.path().join("g.json"), b"{}").unwrap();
    let stale = run(dir.path(), &["replay", "reg.json.manifest.json"]);
    assert_eq!(stale.status.code(), Some(1));
}

#[test]
fn tampered_digest_is_an_assertion_failure() {
    let dir = setup();
    assert!(run(dir.path(), &["density", "g.json", "--out", "d.json"]).status.success());
    let path = dir.path().join("d.json.manifest.json");
    let mut manifest: Value = serde_json::from_slice(&fs::read(&path).unwrap()).unwrap();
    manifest["report_digest"] = Value::String("0".repeat(64));
    fs::write(&path, serde_json::to_vec(&manifest).unwrap()).unwrap();
    assert_eq!(run(dir.path(), &["replay", "d.json.manifest.json"]).status.code(), Some(3));
}

#[test]
fn density_csv_has_sorted_header() {
    let dir = setup();
    let out = run(dir.path(), &["density", "g.json", "--format", "csv"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().next(), Some("count,density,frame,index,top"));
}

#[test]
fn malformed_graph_reports_location() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("bad.json"), "{\n  \"r\": \"three\"\n}").unwrap();
    let out = run(dir.path(), &["regularize", "bad.json"]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("bad.json") && err.contains("line 2"), "{err}");
}

#[test]
fn mode_is_validated_per_command() {
    let dir = setup();
    assert_eq!(run(dir.path(), &["density", "g.json", "--mode", "faithful"]).status.code(), Some(1));
    assert_eq!(run(dir.path(), &["reg-bound", "g.json", "--mode", "mc"]).status.code(), Some(1));
}

#[test]
fn exhaustive_budget_refusal_exits_two() {
    let dir = setup();
    let out = run(dir.path(), &["reg-bound", "g.json", "--family-limit", "1", "--mode", "faithful"]);
    assert_eq!(out.status.code(), Some(2), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn empirical_reg_bound_certificate_passes() {
    let dir = setup();
    let cert = json(&run(dir.path(), &["reg-bound", "g.json", "--h", "1"]));
    assert_eq!(cert["passes"], true);
    assert!(cert["bound_f64"].as_f64().unwrap() >= 0.0);
}

#[test]
fn schedule_refuses_large_values_without_failing() {
    let dir = tempfile::tempdir().unwrap();
    let out = json(&run(dir.path(), &["schedule", "--r", "3", "--k", "2", "--b", "2,2", "--at", "0,1,5"]));
    assert_eq!(out["m"][0]["value"], "0");
    assert!(out["m"][2]["refused"].is_string());
    assert_eq!(out["constants"]["epsilon1"], "1/331776");
}

#[test]
fn corner_and_ap_searches() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("s.txt"), "0 0 2\n1 0 1\n0 1 1\n").unwrap();
    let corner = json(&run(dir.path(), &["find-corner", "s.txt", "--n", "3", "--removal-check"]));
    assert_eq!(corner["solution"]["c"], 1);
    assert_eq!(corner["removal_check"]["consistent"], true);

    fs::write(dir.path().join("e.txt"), "0\n2\n4\n6\n8\n").unwrap();
    for engine in ["brute-force", "reduction"] {
        let ap = json(&run(dir.path(), &["find-ap", "e.txt", "--n", "10", "--length", "3", "--engine", engine]));
        assert_eq!(ap["verified"], true);
    }
    let cfg = json(&run(dir.path(), &["find-config", "e.txt", "--n", "10", "--pattern", "0;1;3"]));
    assert_eq!(cfg["result"]["witnesses"], serde_json::json!([[0], [2], [6]]));

    fs::write(dir.path().join("odd.txt"), "1\n3\n").unwrap();
    let none = json(&run(dir.path(), &["find-ap", "odd.txt", "--n", "4", "--length", "3"]));
    assert!(none["result"].is_null());
}

#[test]
fn out_of_domain_points_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("s.txt"), "0 0 3\n").unwrap();
    assert_eq!(run(dir.path(), &["find-corner", "s.txt", "--n", "3"]).status.code(), Some(1));
}

#[test]
fn remove_writes_modified_graph_in_case_one() {
    let dir = setup();
    // A color that never appears has no copies.
    fs::write(
        dir.path().join("p.json"),
        r#"{"r":3,"k":2,"h":1,"edges":[{"index":[0,1],"positions":[0,0],"color":1}],"palettes":[]}"#,
    )
    .unwrap();
    let out = json(&run(dir.path(), &["remove", "g.json", "--pattern", "p.json", "--modified-out", "m.json"]));
    let case = out["case"].as_str().unwrap();
    assert!(case == "i" || case == "ii");
    assert_eq!(dir.path().join("m.json").exists(), case == "i");
}

fn schema(name: &str) -> jsonschema::Validator {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../schemas").join(name);
    let schema: Value = serde_json::from_slice(&fs::read(path).unwrap()).unwrap();
    jsonschema::validator_for(&schema).unwrap()
}

fn assert_valid(v: &jsonschema::Validator, doc: &Value) {
    let errors: Vec<String> = v.iter_errors(doc).map(|e| e.to_string()).collect();
    assert!(errors.is_empty(), "{errors:?}");
}

#[test]
fn outputs_match_shipped_schemas() {
    let dir = setup();
    let graph: Value = serde_json::from_slice(&fs::read(dir.path().join("g.json")).unwrap()).unwrap();
    assert_valid(&schema("hypergraph.schema.json"), &graph);
    let manifest: Value = serde_json::from_slice(&fs::read(dir.path().join("g.json.manifest.json")).unwrap()).unwrap();
    assert_valid(&schema("manifest.schema.json"), &manifest);

    fs::write(
        dir.path().join("p.json"),
        r#"{"r":3,"k":2,"h":1,"edges":[{"index":[0,1],"positions":[0,0],"color":0}],"palettes":[]}"#,
    )
    .unwrap();
    let outcome = json(&run(dir.path(), &["remove", "g.json", "--pattern", "p.json"]));
    assert_valid(&schema("removal.schema.json"), &outcome);

    let broken = serde_json::json!({"r": 0, "k": 1, "parts": [], "coloring": {}});
    assert!(!schema("hypergraph.schema.json").is_valid(&broken));
}

#[test]
fn every_command_replays() {
    let dir = setup();
    fs::write(
        dir.path().join("p.json"),
        r#"{"r":3,"k":2,"h":1,"edges":[{"index":[0,1],"positions":[0,0],"color":0}],"palettes":[]}"#,
    )
    .unwrap();
    fs::write(dir.path().join("s.txt"), "0 0 2\n1 0 1\n0 1 1\n").unwrap();
    fs::write(dir.path().join("e.txt"), "0\n2\n4\n6\n8\n").unwrap();
    fs::write(
        dir.path().join("corpus.json"),
        fs::read(Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/fixtures/lemma_corpus.json")).unwrap(),
    )
    .unwrap();
    let commands: &[&[&str]] = &[
        &["regularize", "g.json", "--seed", "5"],
        &["density", "g.json", "--format", "csv"],
        &["reg-bound", "g.json", "--seed", "2"],
        &["remove", "g.json", "--pattern", "p.json", "--seed", "4"],
        &["find-corner", "s.txt", "--n", "3"],
        &["find-config", "e.txt", "--n", "10", "--pattern", "0;1;3", "--engine", "reduction", "--seed", "9"],
        &["find-ap", "e.txt", "--n", "10", "--length", "3"],
        &["schedule", "--r", "3", "--k", "2", "--b", "2,2"],
        &["verify-lemmas", "corpus.json", "--format", "csv"],
    ];
    assert!(run(dir.path(), &["replay", "g.json.manifest.json"]).status.success());
    for (i, cmd) in commands.iter().enumerate() {
        let out = format!("r{i}.out");
        let mut args = cmd.to_vec();
        args.extend(["--out", &out]);
        let first = run(dir.path(), &args);
        assert!(first.status.success(), "{cmd:?}: {}", String::from_utf8_lossy(&first.stderr));
        let replay = run(dir.path(), &["replay", &format!("{out}.manifest.json")]);
        assert!(replay.status.success(), "{cmd:?}: {}", String::from_utf8_lossy(&replay.stderr));
    }
}
