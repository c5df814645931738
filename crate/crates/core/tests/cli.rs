use std::path::Path;
use std::process::{Command, Output};

const TWO_TYPE: &str = r#"
seed = 3
replicates = 20
initial = 0

[model.family]
kind = "multitype-gw"
laws = [
  { kind = "outcomes", outcomes = [{ prob = 1.0, children = [0, 1, 1] }] },
  { kind = "outcomes", outcomes = [{ prob = 1.0, children = [0] }] },
]

[[functionals]]
name = "first"
kind = "values"
values = [1.0, 0.0]
"#;

const EXTINCT: &str = r#"
seed = 1
replicates = 3
[model.family]
kind = "multitype-gw"
laws = [{ kind = "independent", laws = [{ kind = "probabilities", probs = [1.0] }] }]
[step]
generations = 1
"#;

const PERIODIC: &str = r#"
[model.family]
kind = "multitype-gw"
laws = [
  { kind = "outcomes", outcomes = [{ prob = 1.0, children = [1] }] },
  { kind = "outcomes", outcomes = [{ prob = 1.0, children = [0] }] },
]
[step]
generations = 1
"#;

fn branchkit(dir: &Path, args: &[&str], envs: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_branchkit"));
    cmd.current_dir(dir).args(args);
    for (k, v) in envs {
        cmd.env(k, v);
    }
    cmd.output().expect("run branchkit")
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    std::fs::write(dir.join(name), text).unwrap();
    name.to_string()
}

#[test]
fn extinct_founder_gives_one_row_per_replicate() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "dead.toml", EXTINCT);
    let out = branchkit(dir.path(), &["simulate", "--config", &cfg, "--out", "o"], &[]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let summary = std::fs::read_to_string(dir.path().join("o/summary.csv")).unwrap();
    let rows: Vec<&str> = summary.lines().collect();
    assert_eq!(rows[0], "replicate,generation,population,censored");
    assert_eq!(&rows[1..], ["0,1,0,false", "1,1,0,false", "2,1,0,false"]);
}

#[test]
fn eigen_json_has_the_dominant_eigenvalue() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "gw.toml", TWO_TYPE);
    let out = branchkit(dir.path(), &["eigen", "--config", &cfg, "--out", "o"], &[]);
    assert_eq!(out.status.code(), Some(0));
    let v: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("o/eigen.json")).unwrap()).unwrap();
    let lambda = v["lambda"].as_f64().unwrap();
    assert!((lambda - 2.0).abs() < 1e-10, "{lambda}");
    let h: Vec<f64> = v["h"].as_array().unwrap().iter().map(|x| x.as_f64().unwrap()).collect();
    assert!((h[0] / h[1] - 2.0).abs() < 1e-9);
}

#[test]
fn verify_passes() {
    let dir = tempfile::tempdir().unwrap();
    let out = branchkit(dir.path(), &["verify", "--out", "o"], &[]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
    assert!(dir.path().join("o/verify.json").exists());
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let missing = branchkit(dir.path(), &["eigen", "--config", "nope.toml"], &[]);
    assert_eq!(missing.status.code(), Some(2));
    let bad = write(dir.path(), "bad.toml", &TWO_TYPE.replace("replicates", "replikates"));
    let out = branchkit(dir.path(), &["eigen", "--config", &bad], &[]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 3"));
    let periodic = write(dir.path(), "periodic.toml", PERIODIC);
    let out = branchkit(dir.path(), &["eigen", "--config", &periodic, "--out", "o"], &[]);
    assert_eq!(out.status.code(), Some(3));
    let usage = branchkit(dir.path(), &["frobnicate"], &[]);
    assert_eq!(usage.status.code(), Some(2));
}

#[test]
fn environment_overrides_the_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "dead.toml", EXTINCT);
    let out = branchkit(
        dir.path(),
        &["simulate"],
        &[("BRANCHKIT_CONFIG", &cfg), ("BRANCHKIT_REPLICATES", "2"), ("BRANCHKIT_OUT", "env_out")],
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let summary = std::fs::read_to_string(dir.path().join("env_out/summary.csv")).unwrap();
    assert_eq!(summary.lines().count(), 3);
    let flag = branchkit(dir.path(), &["simulate", "--replicates", "1"], &[("BRANCHKIT_CONFIG", &cfg), ("BRANCHKIT_REPLICATES", "2")]);
    assert!(flag.status.success());
    let summary = std::fs::read_to_string(dir.path().join("out/summary.csv")).unwrap();
    assert_eq!(summary.lines().count(), 2);
}

#[test]
fn simulate_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "gw.toml", &TWO_TYPE.replace("prob = 1.0, children = [0]", "prob = 0.5, children = [0] }, { prob = 0.5, children = []"));
    let a = branchkit(dir.path(), &["simulate", "--config", &cfg, "--out", "a", "--threads", "1"], &[]);
    let b = branchkit(dir.path(), &["simulate", "--config", &cfg, "--out", "b", "--threads", "2"], &[]);
    assert!(a.status.success() && b.status.success(), "{}", String::from_utf8_lossy(&a.stderr));
    for f in ["trajectories.csv", "summary.csv"] {
        assert_eq!(std::fs::read(dir.path().join("a").join(f)).unwrap(), std::fs::read(dir.path().join("b").join(f)).unwrap());
    }
    let c = branchkit(dir.path(), &["simulate", "--config", &cfg, "--out", "c", "--seed", "4"], &[]);
    assert!(c.status.success());
    assert_ne!(
        std::fs::read(dir.path().join("a/trajectories.csv")).unwrap(),
        std::fs::read(dir.path().join("c/trajectories.csv")).unwrap()
    );
}
