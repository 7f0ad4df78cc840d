use std::fs;
use std::path::Path;
use std::process::{Command, Output};

const SMALL: &str = r#"{"n_grid": 64, "n_snapshots": 31, "n_retained": 4, "n_deim": 8,
  "train": {"epochs": 2, "hidden_dim": 4, "window": 5, "batch_size": 8}}"#;

fn run(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_burgers-rom"))
        .current_dir(dir)
        .args(args)
        .output()
        .unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn defaults_prints_loadable_config() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(dir.path(), &["defaults"]);
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["n_grid"], 1024);
    assert_eq!(v["n_retained"], 12);
    assert_eq!(v["n_deim"], 24);
    assert_eq!(v["train"]["hidden_dim"], 30);
    // the printed document is itself a valid config
    fs::write(dir.path().join("c.json"), &o.stdout).unwrap();
    let again = run(dir.path(), &["--config", "c.json", "defaults"]);
    assert_eq!(again.stdout, o.stdout);
}

#[test]
fn config_errors_exit_2_and_name_the_key() {
    let dir = tempfile::tempdir().unwrap();
    for (doc, key) in [
        (r#"{"n_retained": 0}"#, "n_retained"),
        (r#"{"bogus": 1}"#, "bogus"),
        (r#"{"train": {"learning_rate": -1.0}}"#, "train.learning_rate"),
        (r#"{"smoothing": {"window_length": 4}}"#, "smoothing.window_length"),
    ] {
        fs::write(dir.path().join("c.json"), doc).unwrap();
        let o = run(dir.path(), &["--config", "c.json", "pod"]);
        assert_eq!(o.status.code(), Some(2), "{doc}: {}", stderr(&o));
        assert!(stderr(&o).contains(&format!("`{key}`")), "{doc}: {}", stderr(&o));
    }
}

#[test]
fn missing_artifact_is_named() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(dir.path(), &["--out", "empty", "deim"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("states.csv"), "{}", stderr(&o));
}

#[test]
fn divergence_exits_3_with_method_and_step() {
    let dir = tempfile::tempdir().unwrap();
    // ν = 1 on a coarse grid puts the reduced operator far outside the
    // explicit stability limit at the snapshot spacing
    fs::write(
        dir.path().join("c.json"),
        r#"{"reynolds": 1.0, "n_grid": 64, "n_snapshots": 31, "n_retained": 4, "n_deim": 8}"#,
    )
    .unwrap();
    for stage in ["snapshots", "pod", "deim"] {
        assert!(run(dir.path(), &["--config", "c.json", "--out", "o", stage]).status.success());
    }
    let o = run(dir.path(), &["--config", "c.json", "--out", "o", "run", "--method", "gp"]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).contains("GP"));
    assert!(stderr(&o).contains("step"));
}

#[test]
fn staged_pipeline_on_a_small_grid() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("c.json"), SMALL).unwrap();
    let stage = |args: &[&str]| {
        let mut full = vec!["--config", "c.json", "--out", "o"];
        full.extend_from_slice(args);
        let o = run(dir.path(), &full);
        assert!(o.status.success(), "{args:?}: {}", stderr(&o));
        o
    };
    stage(&["snapshots"]);
    stage(&["pod"]);
    let first = fs::read(dir.path().join("o/pod_basis.json")).unwrap();
    stage(&["pod"]);
    assert_eq!(fs::read(dir.path().join("o/pod_basis.json")).unwrap(), first);

    stage(&["deim"]);
    stage(&["train"]);
    stage(&["run", "--method", "fom"]);
    stage(&["cost"]);
    let table = String::from_utf8(stage(&["compare"]).stdout).unwrap();
    assert!(table.contains("GP") && table.contains("DEIM") && table.contains("ML"));

    let out = dir.path().join("o");
    let csv = fs::read_to_string(out.join("states.csv")).unwrap();
    let hash_line = csv.lines().next().unwrap().to_owned();
    assert!(hash_line.starts_with("# config_hash="));
    for name in ["singular_values.csv", "errors.csv", "costs.csv", "training_history.csv"] {
        let text = fs::read_to_string(out.join(name)).unwrap();
        assert_eq!(text.lines().next().unwrap(), hash_line, "{name}");
    }
    let costs = fs::read_to_string(out.join("costs.csv")).unwrap();
    let ml = costs.lines().find(|l| l.starts_with("ML")).unwrap();
    let header: Vec<&str> = costs.lines().nth(1).unwrap().split(',').collect();
    let col = header.iter().position(|h| *h == "nonlinear_evals_per_step").unwrap();
    assert_eq!(ml.split(',').nth(col).unwrap(), "0");

    // a seed override changes the config hash
    let o = run(dir.path(), &["--config", "c.json", "--out", "o2", "--seed", "7", "snapshots"]);
    assert!(o.status.success());
    let other = fs::read_to_string(dir.path().join("o2/states.csv")).unwrap();
    assert_ne!(other.lines().next().unwrap(), hash_line);
}
