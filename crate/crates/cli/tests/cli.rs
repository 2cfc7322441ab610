use std::path::PathBuf;
use std::process::Command;

use serde_json::Value;

fn data(name: &str) -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("data")
        .join(name)
        .display()
        .to_string()
}

fn run(args: &[&str]) -> (i32, String, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_conformal"))
        .args(args)
        .output()
        .expect("binary runs");
    (
        out.status.code().expect("exit code"),
        String::from_utf8(out.stdout).unwrap(),
        String::from_utf8(out.stderr).unwrap(),
    )
}

fn run_json(args: &[&str]) -> (i32, Value) {
    let (code, stdout, stderr) = run(args);
    let v = serde_json::from_str(&stdout).unwrap_or_else(|e| panic!("{e}: {stdout} {stderr}"));
    (code, v)
}

fn write_temp(dir: &tempfile::TempDir, name: &str, text: &str) -> String {
    let path = dir.path().join(name);
    std::fs::write(&path, text).unwrap();
    path.display().to_string()
}

#[test]
fn validate_bundled_files() {
    for f in [
        "loop_sl2.json",
        "loop_mat2.json",
        "affine_sl2.json",
        "loop_heis3.json",
        "abelian_1.json",
        "abelian_2.json",
        "abelian_3.json",
    ] {
        let (code, v) = run_json(&["validate", &data(f)]);
        assert_eq!(code, 0, "{f}");
        assert_eq!(v["results"]["presentation"]["pass"], true);
    }
}

#[test]
fn validate_rejects_product_at_locality() {
    let dir = tempfile::tempdir().unwrap();
    let f = write_temp(
        &dir,
        "bad.json",
        r#"{"kind": "lie", "generators": [{"name": "a", "weight": 0, "torsion_order": 0}],
            "locality": [{"left": "a", "right": "a", "n": 1}],
            "products": [{"left": "a", "right": "a", "n": 1, "result": [{"coeff": "1", "dpow": 0, "gen": "a"}]}]}"#,
    );
    let (code, v) = run_json(&["validate", &f]);
    assert_eq!(code, 1);
    assert_eq!(v["status"], "fail");
    assert_eq!(v["results"]["presentation"]["violations"][0]["input"], "a(1)a");
}

#[test]
fn input_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let malformed = write_temp(&dir, "m.json", "{\"kind\": ");
    assert_eq!(run(&["validate", &malformed]).0, 2);
    assert_eq!(run(&["validate", "/nonexistent/file.json"]).0, 2);
    let decimal = write_temp(
        &dir,
        "d.json",
        r#"{"kind": "lie", "generators": [{"name": "a"}], "locality": [{"left": "a", "right": "a", "n": 1}],
            "products": [{"left": "a", "right": "a", "n": 0, "result": [{"coeff": "0.5", "gen": "a"}]}]}"#,
    );
    let (code, _, err) = run(&["validate", &decimal]);
    assert_eq!(code, 2);
    assert!(err.contains("not an exact rational"), "{err}");
    let unknown = write_temp(
        &dir,
        "u.json",
        r#"{"kind": "lie", "generators": [{"name": "a"}], "locality": [{"left": "a", "right": "b", "n": 1}]}"#,
    );
    assert_eq!(run(&["validate", &unknown]).0, 2);
    assert_eq!(run(&["embed", &data("loop_sl2.json"), "--weights", "1,2"]).0, 2);
}

#[test]
fn check_axioms() {
    let (code, v) = run_json(&["check", &data("loop_sl2.json"), "--axiom", "jacobi"]);
    assert_eq!(code, 0);
    assert_eq!(v["results"]["jacobi"]["pass"], true);
    let (code, _) = run_json(&["check", &data("loop_mat2.json"), "--axiom", "assoc"]);
    assert_eq!(code, 0);
    let (code, v) = run_json(&["check", &data("loop_mat2.json"), "--axiom", "qs-"]);
    assert_eq!(code, 1);
    assert!(!v["results"]["qs-"]["violations"].as_array().unwrap().is_empty());
    let (code, _) = run_json(&[
        "check",
        "affine:sl2",
        "--axiom",
        "jacobi",
        "--axiom",
        "qs-",
        "--axiom",
        "adconf",
        "--axiom",
        "coeff-lie",
        "--m-max",
        "2",
        "--n-max",
        "2",
    ]);
    assert_eq!(code, 0);
}

#[test]
fn build_loop_matches_bundled_file() {
    let (code, out, _) = run(&["build", "--construct", "loop", "sl2"]);
    assert_eq!(code, 0);
    assert_eq!(out, std::fs::read_to_string(data("loop_sl2.json")).unwrap());
    let (_, from_file, _) = run(&["build", "--construct", "loop", &data("heis3_finite.json")]);
    assert_eq!(from_file, std::fs::read_to_string(data("loop_heis3.json")).unwrap());
}

#[test]
fn build_affine_has_torsion_central_element() {
    let (code, v) = run_json(&["build", "--construct", "affine", "sl2"]);
    assert_eq!(code, 0);
    let c = v["generators"]
        .as_array()
        .unwrap()
        .iter()
        .find(|g| g["name"] == "c")
        .unwrap();
    assert_eq!(c["torsion_order"], 1);
    let ef1 = v["products"]
        .as_array()
        .unwrap()
        .iter()
        .find(|p| p["left"] == "e" && p["right"] == "f" && p["n"] == 1)
        .unwrap();
    assert_eq!(ef1["result"][0]["gen"], "c");
}

#[test]
fn build_commutator_passes_jacobi() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("gl2.json").display().to_string();
    let (code, _, _) = run(&[
        "build",
        "--construct",
        "commutator",
        &data("loop_mat2.json"),
        "-o",
        &out,
    ]);
    assert_eq!(code, 0);
    let (code, v) = run_json(&["check", &out, "--axiom", "jacobi", "--axiom", "qs-"]);
    assert_eq!(code, 0);
    assert_eq!(v["results"]["jacobi"]["pass"], true);
    // output re-parses to the same canonical file
    let (_, again, _) = run(&["build", "--construct", "commutator", &data("loop_mat2.json")]);
    assert_eq!(again, std::fs::read_to_string(&out).unwrap());
}

fn locality_values(v: &Value) -> Vec<Value> {
    v["results"]["table"]
        .as_array()
        .unwrap()
        .iter()
        .map(|row| row["value"]["value"].clone())
        .collect()
}

#[test]
fn locality_tables() {
    let (code, v) = run_json(&["locality", &data("loop_sl2.json"), "--length", "4"]);
    assert_eq!(code, 0);
    assert_eq!(locality_values(&v)[3], 1);
    let (code, v) = run_json(&["locality", &data("abelian_2.json"), "--length", "3"]);
    assert_eq!(code, 0);
    assert_eq!(locality_values(&v)[1..], [0, 0]);
    let (code, v) = run_json(&["locality", &data("affine_sl2.json"), "--length", "3"]);
    assert_eq!(code, 0);
    assert_eq!(locality_values(&v)[2], 2);
    assert_eq!(v["config"]["n_budget"], 16);
}

#[test]
fn locality_inconclusive_exits_three() {
    let (code, v) = run_json(&["locality", &data("affine_sl2.json"), "--length", "3", "--n-budget", "0"]);
    assert_eq!(code, 3);
    assert_eq!(v["status"], "inconclusive");
    assert_eq!(v["results"]["table"][2]["value"]["status"], "inconclusive");
}

#[test]
fn embed_heis3_weight_one_is_nilpotent() {
    let (code, v) = run_json(&["embed", &data("loop_heis3.json"), "--r", "3", "--weights", "1"]);
    assert_eq!(code, 0);
    assert_eq!(v["results"]["embedding"]["nilpotency"]["index_in_l"], 3);
}

#[test]
fn embed_heis3_weight_zero_keeps_length_three_words() {
    let (code, v) = run_json(&["embed", &data("loop_heis3.json"), "--r", "1", "--weights", "0"]);
    assert_eq!(code, 1);
    let e = &v["results"]["embedding"];
    assert_eq!(e["injectivity"]["pass"], true);
    assert_eq!(e["weight_words"]["pass"], true);
    assert_eq!(e["nilpotency"]["check"]["pass"], false);
}

#[test]
fn embed_abelian() {
    let (code, v) = run_json(&["embed", &data("abelian_1.json"), "--r", "2", "--weights", "1"]);
    assert_eq!(code, 0);
    assert_eq!(v["pass"], true);
}

#[test]
fn embed_reports_hypothesis_witness() {
    let (code, v) = run_json(&["embed", &data("loop_sl2.json"), "--r", "0"]);
    assert_eq!(code, 1);
    assert_eq!(v["results"]["hypothesis"]["witness"], "e = e");
    let (code, v) = run_json(&["embed", &data("loop_sl2.json"), "--weights", "1", "--r-max", "4"]);
    assert_eq!(code, 1);
    assert_eq!(v["results"]["hypothesis"]["admissible"], false);
}

#[test]
fn embed_finds_least_admissible_r() {
    let (code, v) = run_json(&["embed", &data("loop_heis3.json"), "--weights", "1"]);
    assert_eq!(code, 0);
    assert_eq!(v["results"]["r"], 3);
}

#[test]
fn embed_budget_errors_exit_four() {
    let (code, v) = run_json(&[
        "embed",
        &data("loop_heis3.json"),
        "--r",
        "3",
        "--weights",
        "1",
        "--step-budget",
        "5",
    ]);
    assert_eq!(code, 4);
    assert_eq!(v["status"], "error");
    let (code, _) = run_json(&[
        "embed",
        &data("loop_heis3.json"),
        "--r",
        "3",
        "--weights",
        "1",
        "--max-dimension",
        "3",
    ]);
    assert_eq!(code, 4);
}

#[test]
fn random_is_reproducible() {
    let strip = |mut v: Value| {
        v.as_object_mut().unwrap().remove("timing_ms");
        v
    };
    let (code, a) = run_json(&["random", "--count", "10", "--seed", "7", "--threads", "2"]);
    assert_eq!(code, 0);
    let (_, b) = run_json(&["random", "--count", "10", "--seed", "7"]);
    assert_eq!(strip(a.clone())["results"], strip(b)["results"]);
    assert_eq!(a["config"]["seed"], 7);
}

#[test]
fn reports_are_schema_versioned_with_sorted_keys() {
    let (_, out, _) = run(&["check", &data("loop_sl2.json"), "--axiom", "qs-"]);
    let v: Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["schema"], "conformal-report/1");
    let keys: Vec<&String> = v.as_object().unwrap().keys().collect();
    let mut sorted = keys.clone();
    sorted.sort();
    assert_eq!(keys, sorted);
    let first = out.find("\"command\"").unwrap();
    assert!(
        first < out.find("\"config\"").unwrap() && out.find("\"config\"").unwrap() < out.find("\"results\"").unwrap()
    );
}
