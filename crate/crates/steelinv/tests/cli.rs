//! End-to-end tests of the command line binary: reproducible synthesis,
//! a miniature full pipeline, and the exit-code policy.

use std::path::Path;
use std::process::{Command, Output};

fn steelinv(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_steelinv"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

fn assert_ok(out: &Output) {
    assert!(
        out.status.success(),
        "stdout: {}\nstderr: {}",
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
}

const SMALL_CONFIG: &str = r#"
seed = 7
test_fraction = 0.2

[synth]
n_samples = 200
noise_std = 0.3

[teacher]
epochs = 40
batch_size = 32
lr = 1e-3
eval_every = 10
hidden_width = 32

[student]
epochs = 300
batch_size = 32
lr = 1e-3
eval_every = 50
hidden_width = 32

[direct_inverse]
epochs = 40
batch_size = 32
lr = 1e-3
eval_every = 10
hidden_width = 32

[forest]
n_trees = 10
max_depth = 6

[td3]
total_steps = 600
warmup_steps = 100
batch = 32
actor_hidden = 16
critic_hidden = 32
buffer_capacity = 5000
"#;

#[test]
fn synth_is_reproducible_and_seed_sensitive() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    assert_ok(&steelinv(&["synth", "--n", "60", "--seed", "5", "--out", "a.csv"], dir));
    assert_ok(&steelinv(&["synth", "--n", "60", "--seed", "5", "--out", "b.csv"], dir));
    assert_ok(&steelinv(&["synth", "--n", "60", "--seed", "6", "--out", "c.csv"], dir));
    let a = std::fs::read(dir.join("a.csv")).unwrap();
    let b = std::fs::read(dir.join("b.csv")).unwrap();
    let c = std::fs::read(dir.join("c.csv")).unwrap();
    assert_eq!(a, b, "same seed must produce identical bytes");
    assert_ne!(a, c, "different seeds must differ");
}

#[test]
fn miniature_pipeline_produces_full_report() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    std::fs::write(dir.join("run.toml"), SMALL_CONFIG).unwrap();

    assert_ok(&steelinv(
        &["synth", "--config", "run.toml", "--out", "data.csv"],
        dir,
    ));
    assert_ok(&steelinv(
        &["train-teacher", "--data", "data.csv", "--config", "run.toml", "--out", "teacher.json"],
        dir,
    ));
    assert_ok(&steelinv(
        &["train-student", "--teacher", "teacher.json", "--config", "run.toml", "--out", "pair.json"],
        dir,
    ));
    assert_ok(&steelinv(
        &[
            "baseline-rf", "--data", "data.csv", "--config", "run.toml",
            "--teacher", "teacher.json", "--out", "forest.json",
        ],
        dir,
    ));
    assert_ok(&steelinv(
        &[
            "baseline-mlp", "--data", "data.csv", "--config", "run.toml",
            "--teacher", "teacher.json", "--out", "mlpinv.json",
        ],
        dir,
    ));
    assert_ok(&steelinv(
        &["train-td3", "--teacher", "teacher.json", "--config", "run.toml", "--out", "actor.json"],
        dir,
    ));
    assert_ok(&steelinv(
        &[
            "evaluate", "--pair", "pair.json", "--data", "data.csv",
            "--protocol", "functional", "--out", "pair_metrics.csv",
        ],
        dir,
    ));
    assert_ok(&steelinv(&["report", "--runs", "."], dir));

    let report = std::fs::read_to_string(dir.join("report.csv")).unwrap();
    for model in ["teacher_student", "random_forest", "direct_mlp", "td3"] {
        assert!(report.contains(model), "report missing {model}:\n{report}");
    }
    assert!(dir.join("report.txt").exists());
    assert!(dir.join("plots.gp").exists());
    assert!(dir.join("pair_curve.csv").exists());
    assert!(dir.join("actor_reward_curve.csv").exists());
}

#[test]
fn unknown_config_key_is_a_usage_error() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    std::fs::write(dir.join("bad.toml"), "seed = 1\nnot_a_key = true\n").unwrap();
    let out = steelinv(
        &["synth", "--config", "bad.toml", "--out", "x.csv"],
        dir,
    );
    assert_eq!(out.status.code(), Some(2), "stderr: {}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn missing_data_file_is_a_runtime_error() {
    let tmp = tempfile::tempdir().unwrap();
    let out = steelinv(
        &["train-teacher", "--data", "nope.csv", "--out", "t.json"],
        tmp.path(),
    );
    assert_eq!(out.status.code(), Some(1), "stderr: {}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn malformed_csv_reports_row_and_column() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    assert_ok(&steelinv(&["synth", "--n", "20", "--seed", "1", "--out", "d.csv"], dir));
    let text = std::fs::read_to_string(dir.join("d.csv")).unwrap();
    // corrupt the first cell of the first data row
    let corrupted: Vec<String> = text
        .lines()
        .enumerate()
        .map(|(i, line)| {
            if i == 2 {
                format!("oops{}", &line[line.find(',').unwrap()..])
            } else {
                line.to_string()
            }
        })
        .collect();
    std::fs::write(dir.join("d.csv"), corrupted.join("\n")).unwrap();
    let out = steelinv(
        &["train-teacher", "--data", "d.csv", "--out", "t.json"],
        dir,
    );
    assert_eq!(out.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("row"), "stderr: {stderr}");
}
