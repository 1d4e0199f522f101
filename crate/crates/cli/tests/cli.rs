use std::path::Path;

use assert_cmd::Command;
use serde_json::Value;

fn kit() -> Command {
    Command::cargo_bin("rbsc-kit").unwrap()
}

fn run(args: &[&str]) -> (i32, String) {
    let output = kit().args(args).output().unwrap();
    (output.status.code().unwrap(), String::from_utf8(output.stdout).unwrap())
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_owned()
}

#[test]
fn generate_solve_and_compare_with_the_oracle() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("rbsc.json");
    let file = file.to_str().unwrap();
    let gen =
        ["gen", "rbsc", "--m", "10", "--n", "12", "--k", "6", "--blue-size", "2", "--red-size", "3", "--seed", "5"];
    kit().args(gen).args(["-o", file]).assert().success();
    let (code, solution) = run(&["solve", "rbsc", file, "--seed", "1"]);
    assert_eq!(code, 0);
    let solution: Value = serde_json::from_str(&solution).unwrap();
    let (_, oracle) = run(&["oracle", file]);
    let oracle: Value = serde_json::from_str(&oracle).unwrap();
    assert!(solution["cost"].as_u64().unwrap() >= oracle["cost"].as_u64().unwrap());
    // Same seed, same output.
    assert_eq!(
        run(&["solve", "rbsc", file, "--seed", "1", "--report"]),
        run(&["solve", "rbsc", file, "--seed", "1", "--report"])
    );
}

#[test]
fn every_solver_runs_on_canonical_instances() {
    let dir = tempfile::tempdir().unwrap();
    for (name, solver) in
        [("rbsc-small-1", "rbsc"), ("mku-small-1", "mku"), ("mmsa4-small-1", "mmsa4"), ("mmsa6-small-1", "mmsa")]
    {
        let file = dir.path().join(format!("{name}.json"));
        let file = file.to_str().unwrap();
        kit().args(["gen", "canonical", name, "-o", file]).assert().success();
        let (code, report) = run(&["solve", solver, file, "--seed", "3", "--report"]);
        assert_eq!(code, 0, "{solver}");
        let report: Value = serde_json::from_str(&report).unwrap();
        assert!(report["solution"]["cost"].is_u64());
    }
}

#[test]
fn reduce_writes_an_rbsc_instance() {
    let (code, text) = run(&["gen", "mku", "--n", "10", "--m", "6", "--k", "3", "--set-size", "3", "--seed", "2"]);
    assert_eq!(code, 0);
    let dir = tempfile::tempdir().unwrap();
    let mku = write(dir.path(), "mku.json", &text);
    let (code, reduced) = run(&["reduce", "mku", &mku, "--seed", "9"]);
    assert_eq!(code, 0);
    let reduced: Value = serde_json::from_str(&reduced).unwrap();
    assert_eq!(reduced["kind"], "rbsc");
    assert_eq!(reduced["k"], 3);
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let uncoverable = write(dir.path(), "bad.json", r#"{"kind":"rbsc","k":2,"n":2,"sets":[{"blue":[0],"red":[1]}]}"#);
    assert_eq!(run(&["solve", "rbsc", &uncoverable, "--seed", "0"]).0, 2);
    let garbage = write(dir.path(), "garbage.json", "{not json");
    assert_eq!(run(&["solve", "rbsc", &garbage, "--seed", "0"]).0, 3);
    assert_eq!(run(&["solve", "mmsa4", &uncoverable, "--seed", "0"]).0, 3);
    // Randomized paths refuse to run without a seed.
    assert_eq!(run(&["solve", "rbsc", &uncoverable]).0, 3);
    assert_eq!(run(&["gen", "gap", "--n", "30", "--eps", "0.5", "--t", "4", "--seed", "1"]).0, 3);
}

#[test]
fn bench_json_is_deterministic_and_clean() {
    let dir = tempfile::tempdir().unwrap();
    let suite = write(
        dir.path(),
        "suite.json",
        r#"{"entries":[
            {"name":"rbsc-small-1","generator":{"kind":"canonical","name":"rbsc-small-1"},"solver":{"kind":"rbsc"}},
            {"name":"mku-small-1","generator":{"kind":"canonical","name":"mku-small-1"},"solver":{"kind":"mku"}},
            {"name":"planted","generator":{"kind":"planted","m":20,"n":20,"k":8,"opt":3},"solver":{"kind":"rbsc"},"seeds":[1,2]}
        ]}"#,
    );
    let read = |jobs: &str| {
        let (code, text) = run(&["bench", &suite, "--seed", "4", "--jobs", jobs, "--json-stdout"]);
        assert_eq!(code, 0);
        let mut report: Value = serde_json::from_str(&text).unwrap();
        for row in report["rows"].as_array_mut().unwrap() {
            row["wall_ms"] = Value::Null;
        }
        report
    };
    let report = read("1");
    assert_eq!(report, read("3"));
    assert_eq!(report["summary"]["rows"], 4);
    assert_eq!(report["summary"]["bound_violations"], 0);
    let (code, table) = run(&["bench", &suite, "--seed", "4"]);
    assert_eq!(code, 0);
    assert!(table.starts_with("name"));
    assert!(table.contains("bound violations 0"));
}
