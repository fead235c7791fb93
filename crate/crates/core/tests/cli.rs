use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use cayley_diffusion::oracle::{bfs_distances, DistanceTable, DEFAULT_STATE_BUDGET};
use cayley_diffusion::GraphSpec;
use tempfile::tempdir;

fn bin(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cayley-diffusion")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn train_tiny(dir: &Path, extra: &[&str]) -> Output {
    let out = dir.to_str().unwrap();
    let mut args = vec![
        "train", "--spec", "sl2p", "--p", "5", "--T", "8", "--trajectories", "400", "--batch-size", "20", "--seed", "3",
        "--out", out, "--set", "hidden=16", "--set", "blocks=1", "--set", "log_every=5", "--set", "wall_clock=false",
    ];
    args.extend_from_slice(extra);
    bin(&args)
}

#[test]
fn oracle_counts_sl2_of_z5() {
    let dir = tempdir().unwrap();
    let path = dir.path().join("sl5.cddt");
    let o = bin(&["oracle", "--spec", "sl2p", "--p", "5", "--out", path.to_str().unwrap()]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert!(text.contains("count=120"), "{text}");
    assert!(text.contains("diameter="));
    let spec = GraphSpec::sl2p(5).unwrap();
    let loaded = DistanceTable::load(&spec, &path).unwrap();
    let rebuilt = bfs_distances(&spec, DEFAULT_STATE_BUDGET).unwrap();
    assert_eq!(loaded.entries(&spec), rebuilt.entries(&spec));
    assert!(dir.path().join("sl5.cddt.manifest.json").exists());
}

#[test]
fn oracle_budget_is_a_resource_error() {
    let o = bin(&["oracle", "--spec", "sl2p", "--p", "7", "--budget", "50"]);
    assert_eq!(o.status.code(), Some(4));
    assert!(String::from_utf8_lossy(&o.stderr).contains("layer"));
}

#[test]
fn ball_of_radius_zero_is_the_goal_set() {
    let dir = tempdir().unwrap();
    let path = dir.path().join("ball.txt");
    let o = bin(&["ball", "--spec", "cube2", "--R", "0", "--out", path.to_str().unwrap()]);
    assert!(o.status.success());
    assert!(stdout(&o).contains("count=1"));
    assert_eq!(fs::read_to_string(&path).unwrap().lines().filter(|l| !l.starts_with('#')).count(), 1);
    let o = bin(&["ball", "--spec", "cube3", "--R", "3", "--cap", "200"]);
    assert_eq!(o.status.code(), Some(4));
    assert!(String::from_utf8_lossy(&o.stderr).contains("achieved radius 2"));
}

#[test]
fn missing_horizon_is_a_usage_error() {
    let dir = tempdir().unwrap();
    let o = bin(&["train", "--spec", "sl2p", "--p", "5", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let o = bin(&["train", "--spec", "sl2p", "--p", "5", "--T", "4", "--set", "colour=blue"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("batch_size"));
    assert_eq!(bin(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(bin(&["--help"]).status.code(), Some(0));
}

#[test]
fn training_rerun_reproduces_metrics_and_solves() {
    let a = tempdir().unwrap();
    let b = tempdir().unwrap();
    assert!(train_tiny(a.path(), &[]).status.success());
    assert!(train_tiny(b.path(), &[]).status.success());
    let ma = fs::read(a.path().join("metrics.csv")).unwrap();
    assert_eq!(ma, fs::read(b.path().join("metrics.csv")).unwrap());
    assert_eq!(fs::read(a.path().join("model.cdsm")).unwrap(), fs::read(b.path().join("model.cdsm")).unwrap());
    assert_eq!(String::from_utf8_lossy(&ma).lines().count(), 5);
    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(a.path().join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["command"], "train");
    assert!(a.path().join("config.txt").exists());

    let ck = a.path().join("model.cdsm");
    let ck = ck.to_str().unwrap();
    // the identity is already solved
    let o = bin(&["solve", "--checkpoint", ck, "--spec", "sl2p", "--p", "5", "--state", "1,0,0,1", "--T", "8"]);
    assert!(o.status.success());
    assert_eq!(stdout(&o).trim().split(',').take(2).collect::<Vec<_>>(), ["solved", "0"]);

    let rec = a.path().join("solve.txt");
    let o = bin(&[
        "solve", "--checkpoint", ck, "--spec", "sl2p", "--p", "5", "--uniform", "--seed", "4", "--T", "8", "--beam", "8",
        "--ball", "2", "--calibrate", "--out", rec.to_str().unwrap(),
    ]);
    assert!(o.status.success());
    assert!(stdout(&o).starts_with("solved,") || stdout(&o).starts_with("unsolved,"));
    assert!(a.path().join("solve.txt.manifest.json").exists());

    let csv = a.path().join("bench.csv");
    let o = bin(&[
        "bench", "--checkpoint", ck, "--spec", "sl2p", "--p", "5", "--T", "8", "--widths", "1,4", "--radii", "0,1",
        "--instances", "10", "--exact", "--out", csv.to_str().unwrap(),
    ]);
    assert!(o.status.success());
    let text = fs::read_to_string(&csv).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "beam_width,ball_radius,solve_rate,mean_length,mean_excess,opt_pct,mean_nodes,mean_seconds");
    assert_eq!(lines.len(), 5);

    // a checkpoint for a different graph is a format error
    let o = bin(&["solve", "--checkpoint", ck, "--spec", "sl2p", "--p", "7", "--uniform", "--T", "8"]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn bad_state_input_is_rejected() {
    let dir = tempdir().unwrap();
    assert!(train_tiny(dir.path(), &["--set", "trajectories=40"]).status.success());
    let ck = dir.path().join("model.cdsm");
    let o = bin(&[
        "solve", "--checkpoint", ck.to_str().unwrap(), "--spec", "sl2p", "--p", "5", "--state", "1,1,1,1", "--T", "8",
    ]);
    assert_eq!(o.status.code(), Some(2));
    let o = bin(&["solve", "--checkpoint", "/nonexistent/model.cdsm", "--spec", "sl2p", "--p", "5", "--uniform", "--T", "3"]);
    assert_eq!(o.status.code(), Some(3));
}
