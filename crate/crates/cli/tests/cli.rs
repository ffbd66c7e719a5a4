use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use ipl_bench::output::{HISTORY_HEADER, SWEEP_HEADER};
use ipl_bench::{CliError, Outcome};

const SMALL: &str = "# tiny run\nn_points = 5\nsteps = 2   # inline comment\nensemble_size = 2\nshots = 100\n";

fn bin(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ipl-bench")).args(args).output().unwrap()
}

fn write_config(dir: &Path, text: &str) -> String {
    let path = dir.join("run.cfg");
    fs::write(&path, text).unwrap();
    path.display().to_string()
}

fn listing(dir: &Path) -> Vec<String> {
    let mut names: Vec<String> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .collect();
    names.sort();
    names
}

#[test]
fn compare_writes_five_files() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    let out = dir.path().join("out");
    let res = bin(&["compare", "-c", &cfg, "-o", out.to_str().unwrap()]);
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    assert_eq!(
        listing(&out),
        ["history_adam.csv", "history_algebraic.csv", "history_gd.csv", "meta.json", "summary.json"]
    );
    for opt in ["gd", "adam", "algebraic"] {
        let text = fs::read_to_string(out.join(format!("history_{opt}.csv"))).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some(HISTORY_HEADER));
        // 2 seeds × (steps + 1) records
        assert_eq!(lines.clone().count(), 6);
        assert!(lines.all(|l| l.split(',').nth(1) == Some(opt)));
    }
    let summary: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["verb"], "compare");
    assert_eq!(summary["config"]["n_points"], "5");
    assert_eq!(summary["partial"], false);
    assert_eq!(summary["config_hash"].as_str().unwrap().len(), 64);
}

#[test]
fn train_and_sweeps_write_expected_files() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    let train = dir.path().join("train");
    assert!(bin(&["train", "-c", &cfg, "-o", train.to_str().unwrap()]).status.success());
    assert_eq!(listing(&train), ["history.csv", "meta.json", "summary.json"]);

    let shots = dir.path().join("shots");
    let res = bin(&["sweep-shots", "-c", &cfg, "-o", shots.to_str().unwrap(), "--values", "10,1000"]);
    assert!(res.status.success());
    let text = fs::read_to_string(shots.join("sweep.csv")).unwrap();
    assert_eq!(text.lines().next(), Some(SWEEP_HEADER));
    assert_eq!(text.lines().count(), 3);
    let summary: serde_json::Value = serde_json::from_str(&fs::read_to_string(shots.join("summary.json")).unwrap()).unwrap();
    assert!(summary["loglog_slope"].is_number());

    let deph = dir.path().join("deph");
    assert!(bin(&["sweep-dephasing", "-c", &cfg, "-o", deph.to_str().unwrap()]).status.success());
    let text = fs::read_to_string(deph.join("sweep.csv")).unwrap();
    assert_eq!(text.lines().count(), 1 + ipl_bench::DEFAULT_DEPHASING_VALUES.len());
}

#[test]
fn overrides_change_the_run() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    let out = dir.path().join("o");
    assert!(bin(&["train", "-c", &cfg, "-o", out.to_str().unwrap(), "-s", "steps=1", "--set", "lambda=1.0"]).status.success());
    let summary: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["config"]["steps"], "1");
    assert_eq!(summary["config"]["lambda"], "1.0");
    let history = fs::read_to_string(out.join("history.csv")).unwrap();
    assert_eq!(history.lines().count(), 1 + 2 * 2);
}

#[test]
fn bad_configs_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("o");
    let out = out.to_str().unwrap();
    for (text, needle) in [
        ("p_deph = 1.5\n", "p_deph"),
        ("lambda = 0\n", "lambda"),
        ("colour = blue\n", "colour"),
        ("steps = 3\nsteps = 4\n", "steps"),
        ("steps 3\n", "key=value"),
    ] {
        let cfg = write_config(dir.path(), text);
        let res = bin(&["train", "-c", &cfg, "-o", out]);
        assert_eq!(res.status.code(), Some(1), "{text}");
        assert!(String::from_utf8_lossy(&res.stderr).contains(needle), "{text}");
    }
    let res = bin(&["train", "-c", "/definitely/missing.cfg", "-o", out]);
    assert_eq!(res.status.code(), Some(1));
    let cfg = write_config(dir.path(), SMALL);
    assert_eq!(bin(&["sweep-shots", "-c", &cfg, "-o", out, "--values", "10,abc"]).status.code(), Some(1));
    assert_eq!(bin(&["sweep-shots", "-c", &cfg, "-o", out, "--values", "0"]).status.code(), Some(1));
    assert_ne!(bin(&["fly", "-c", &cfg, "-o", out]).status.code(), Some(0));
}

#[test]
fn numeric_failures_map_to_two() {
    assert_eq!(CliError::Numeric("x".into()).exit_code(), 2);
    assert_eq!(CliError::Usage("x".into()).exit_code(), 1);
    let partial = Outcome { files: vec![], partial: true };
    assert_eq!(partial.exit_code(), 2);
    let err: CliError = ipl_core::Error::Numeric("nan".into()).into();
    assert_eq!(err.exit_code(), 2);
}
