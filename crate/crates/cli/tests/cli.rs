use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn iterint(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_iterint"))
        .args(args)
        .arg("--out")
        .arg(out)
        .env_remove("ITERINT_THREADS")
        .output()
        .unwrap()
}

fn summary(dir: &Path, command: &str) -> Value {
    serde_json::from_str(&fs::read_to_string(dir.join(format!("{command}.json"))).unwrap()).unwrap()
}

#[test]
fn ibp_baseline_passes() {
    let tmp = tempfile::tempdir().unwrap();
    let out = iterint(&["ibp", "--h", "1", "--g", "1", "--model", "gaussian"], tmp.path());
    assert_eq!(out.status.code(), Some(0));
    let s = summary(tmp.path(), "ibp");
    assert!(s["checks"][0]["value"].as_f64().unwrap() < 1e-10);
    assert_eq!(s["schema_version"], 1);
    assert_eq!(s["config_digest"].as_str().unwrap().len(), 64);
    assert!(s["tool_version"].is_string());
}

#[test]
fn qv_residual_column_is_monotone() {
    let tmp = tempfile::tempdir().unwrap();
    let out = iterint(
        &["qv", "--model", "gaussian", "--levels", "4:8", "--replicates", "10000", "--seed", "7"],
        tmp.path(),
    );
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
    let mut rdr = csv::Reader::from_path(tmp.path().join("qv-0-gaussian.csv")).unwrap();
    let header: Vec<String> = rdr.headers().unwrap().iter().map(String::from).collect();
    assert_eq!(
        header,
        ["level", "mesh", "residual_mean", "residual_ci", "residual_nocorr_mean", "replicates", "seed"]
    );
    let residuals: Vec<f64> = rdr.records().map(|r| r.unwrap()[2].parse().unwrap()).collect();
    assert_eq!(residuals.len(), 5);
    assert!(residuals.windows(2).all(|p| p[1] < p[0]));
}

#[test]
fn off_grid_time_is_a_config_error() {
    let tmp = tempfile::tempdir().unwrap();
    let out = iterint(&["moment-bound", "--s", "0.3", "--basis-level", "4"], tmp.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("not a grid point"));
}

#[test]
fn bad_inputs_exit_with_two() {
    let tmp = tempfile::tempdir().unwrap();
    assert_eq!(iterint(&["nonsense"], tmp.path()).status.code(), Some(2));
    let cfg = tmp.path().join("bad.json");
    fs::write(&cfg, r#"{"seeed": 1}"#).unwrap();
    assert_eq!(iterint(&["ibp", "--config", cfg.to_str().unwrap()], tmp.path()).status.code(), Some(2));
    assert_eq!(iterint(&["qv", "--levels", "8:4"], tmp.path()).status.code(), Some(2));
    assert_eq!(iterint(&["ibp", "--model", "cauchy"], tmp.path()).status.code(), Some(2));
}

#[test]
fn riemann_threshold_failure_exits_with_one() {
    let tmp = tempfile::tempdir().unwrap();
    let out = iterint(&["riemann", "--basis-level", "6", "--levels", "2:6", "--model", "gaussian"], tmp.path());
    assert_eq!(out.status.code(), Some(1));
    let s = summary(tmp.path(), "riemann");
    assert_eq!(s["checks"][0]["pass"], true);
    assert_eq!(s["checks"][1]["pass"], false);
}

#[test]
fn config_file_with_flag_override_and_csv_function() {
    let tmp = tempfile::tempdir().unwrap();
    let h = tmp.path().join("h.csv");
    fs::write(&h, "cell_index,value\n0,1.0\n1,-0.5\n2,2.0\n3,0.25\n").unwrap();
    let cfg = tmp.path().join("run.json");
    fs::write(
        &cfg,
        format!(
            r#"{{"basis_level": 3, "models": ["uniform", "twopoint:0.3"], "h": {{"csv": "{}", "level": 2}}, "g": 1.5, "seed": 1, "t": 0.5}}"#,
            h.display()
        ),
    )
    .unwrap();
    let a = tmp.path().join("a");
    let b = tmp.path().join("b");
    assert_eq!(iterint(&["norm", "--config", cfg.to_str().unwrap()], &a).status.code(), Some(0));
    assert_eq!(
        iterint(&["norm", "--config", cfg.to_str().unwrap(), "--seed", "2"], &b).status.code(),
        Some(0)
    );
    let (sa, sb) = (summary(&a, "norm"), summary(&b, "norm"));
    assert_eq!(sa["config"]["functions"]["h"]["values"][1], -0.5);
    assert_eq!(sa["config"]["models"][1], "twopoint:0.3");
    assert_eq!(sb["seed"], 2);
    assert_ne!(sa["config_digest"], sb["config_digest"]);
    let rows = fs::read_to_string(a.join("norm.csv")).unwrap();
    assert!(rows.lines().any(|l| l.starts_with("uniform,0,5e-1,")));
}

#[test]
fn per_index_model_must_cover_the_basis() {
    let tmp = tempfile::tempdir().unwrap();
    let out = iterint(&["ibp", "--basis-level", "1", "--model", "gaussian,exponential"], tmp.path());
    assert_eq!(out.status.code(), Some(0));
    let out = iterint(&["ibp", "--basis-level", "2", "--model", "gaussian,exponential"], tmp.path());
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn thread_variable_does_not_change_reports() {
    let tmp = tempfile::tempdir().unwrap();
    let run = |dir: &Path, threads: &str| {
        Command::new(env!("CARGO_BIN_EXE_iterint"))
            .args(["qv", "--basis-level", "7", "--levels", "3:5", "--replicates", "500", "--out"])
            .arg(dir)
            .env("ITERINT_THREADS", threads)
            .output()
            .unwrap()
    };
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    assert!(run(&a, "1").status.success());
    assert!(run(&b, "5").status.success());
    for f in ["qv.json", "qv-0-gaussian.csv", "qv-1-exponential.csv"] {
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap(), "{f}");
    }
}
