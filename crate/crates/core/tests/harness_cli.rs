use std::path::Path;
use std::process::Command;

use phased_reinforce::harness::{execute, ExperimentConfig, RunSummary};
use phased_reinforce::Mdp;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_phased-reinforce"));
    c.env_remove("PHASED_REINFORCE_OUT_DIR");
    c
}

fn write_config(dir: &Path, body: &str) -> std::path::PathBuf {
    let path = dir.join("config.json");
    std::fs::write(&path, body).unwrap();
    path
}

fn first_line(path: &Path) -> String {
    std::fs::read_to_string(path)
        .unwrap()
        .lines()
        .next()
        .unwrap_or("")
        .to_string()
}

fn summary(dir: &Path) -> RunSummary {
    serde_json::from_str(&std::fs::read_to_string(dir.join("summary.json")).unwrap()).unwrap()
}

#[test]
fn run_writes_stable_schemas() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        r#"{"env": {"name": "chain", "states": 3}, "episodes": 64, "seed": 7, "checkpoints": [15, 31, 63]}"#,
    );
    let out = tmp.path().join("out");
    let status = bin().arg("run").arg(&cfg).arg("--out-dir").arg(&out).status().unwrap();
    assert!(status.success());
    assert_eq!(
        first_line(&out.join("regret.csv")),
        "n,l,k,H,gap,cumulative_regret,average_regret"
    );
    assert_eq!(first_line(&out.join("average_regret.csv")), "N,average_regret");
    assert_eq!(first_line(&out.join("log_regret.csv")), "log_N,log_regret");
    assert_eq!(
        first_line(&out.join("checkpoints.csv")),
        "n,cumulative_regret,average_regret"
    );
    let step: serde_json::Value = serde_json::from_str(&first_line(&out.join("run.jsonl"))).unwrap();
    let mut keys: Vec<_> = step.as_object().unwrap().keys().cloned().collect();
    keys.sort();
    assert_eq!(
        keys,
        [
            "alpha",
            "episodes",
            "exact_grad_norm",
            "grad_norm",
            "horizon",
            "k",
            "l",
            "lambda",
            "min_prob",
            "n",
            "truncated_value",
            "updated",
            "value"
        ]
    );
    let s = summary(&out);
    assert_eq!(s.steps, 64);
    assert_eq!(s.checkpoints.len(), 3);
    assert!(s.regret_slope.is_some());
    assert_eq!(
        std::fs::read_to_string(out.join("run.jsonl")).unwrap().lines().count(),
        64
    );
}

#[test]
fn repeat_runs_agree_except_wall_time() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        r#"{"env": {"name": "chain", "states": 3}, "episodes": 64, "seed": 7}"#,
    );
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    assert!(bin()
        .arg("run")
        .arg(&cfg)
        .arg("--out-dir")
        .arg(&a)
        .status()
        .unwrap()
        .success());
    assert!(bin()
        .arg("run")
        .arg(&cfg)
        .arg("--out-dir")
        .arg(&b)
        .status()
        .unwrap()
        .success());
    for f in ["run.jsonl", "regret.csv", "average_regret.csv", "log_regret.csv"] {
        assert_eq!(
            std::fs::read(a.join(f)).unwrap(),
            std::fs::read(b.join(f)).unwrap(),
            "{f}"
        );
    }
    let (mut sa, mut sb) = (summary(&a), summary(&b));
    sa.wall_time_secs = 0.0;
    sb.wall_time_secs = 0.0;
    sa.config.out_dir = None;
    sb.config.out_dir = None;
    assert_eq!(sa, sb);
}

#[test]
fn overrides_and_env_var() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), r#"{"env": {"name": "chain", "states": 3}, "episodes": 64}"#);
    let out = tmp.path().join("from_env");
    let status = bin()
        .arg("run")
        .arg(&cfg)
        .args(["--episodes", "5", "--seed", "3"])
        .env("PHASED_REINFORCE_OUT_DIR", &out)
        .status()
        .unwrap();
    assert!(status.success());
    let s = summary(&out);
    assert_eq!(s.total_episodes, 5);
    assert_eq!(s.config.seed, 3);
}

#[test]
fn empty_run_and_minibatch_columns() {
    let empty: ExperimentConfig =
        ExperimentConfig::from_json(r#"{"env": {"name": "chain", "states": 3}, "episodes": 0}"#).unwrap();
    let out = execute(&empty, None).unwrap();
    assert!(out.ledger.is_empty());
    assert_eq!(out.summary.cumulative_regret, 0.0);
    assert_eq!(out.summary.steps, 0);

    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        r#"{"env": {"name": "chain", "states": 3}, "algorithm": "minibatch", "batch": 2, "episodes": 9}"#,
    );
    let dir = tmp.path().join("mb");
    assert!(bin()
        .arg("run")
        .arg(&cfg)
        .arg("--out-dir")
        .arg(&dir)
        .status()
        .unwrap()
        .success());
    assert_eq!(
        first_line(&dir.join("regret.csv")),
        "n,l,k,H,gap,cumulative_regret,average_regret,episodes,total_episodes,minibatch_regret"
    );
    assert_eq!(summary(&dir).total_episodes, 9);
}

#[test]
fn gen_env_round_trip() {
    let tmp = tempfile::tempdir().unwrap();
    let a = tmp.path().join("a.json");
    let b = tmp.path().join("b.json");
    for p in [&a, &b] {
        let status = bin()
            .args([
                "gen-env",
                "random",
                "--param",
                "states=4",
                "--param",
                "actions=3",
                "--param",
                "seed=1",
                "--out",
            ])
            .arg(p)
            .status()
            .unwrap();
        assert!(status.success());
    }
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    let m = Mdp::load(&a).unwrap();
    assert!(m.rho().iter().all(|&p| p > 0.0));

    let chain = tmp.path().join("chain.json");
    assert!(bin()
        .args(["gen-env", "chain", "--param", "states=3", "--out"])
        .arg(&chain)
        .status()
        .unwrap()
        .success());
    let cfg = write_config(
        tmp.path(),
        r#"{"env": {"name": "file", "path": "chain.json"}, "episodes": 10}"#,
    );
    let out = tmp.path().join("run");
    assert!(bin()
        .arg("run")
        .arg(&cfg)
        .arg("--out-dir")
        .arg(&out)
        .status()
        .unwrap()
        .success());

    let status = bin()
        .args(["gen-env", "maze", "--out"])
        .arg(tmp.path().join("x.json"))
        .status()
        .unwrap();
    assert!(!status.success());
}

#[test]
fn check_passes_and_negative_control_fails() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        r#"{"env": {"name": "random", "states": 2, "actions": 2, "seed": 4}, "episodes": 0}"#,
    );
    let ok = bin().arg("check").arg(&cfg).output().unwrap();
    assert!(ok.status.success(), "{}", String::from_utf8_lossy(&ok.stdout));
    let text = String::from_utf8(ok.stdout).unwrap();
    assert!(text
        .lines()
        .any(|l| l.starts_with("PASS") && l.contains("bias bound (H = 4)")));
    assert!(text.contains("lhs =") && text.contains("rhs ="));

    let bad = bin()
        .arg("check")
        .arg(&cfg)
        .args(["--constant-scale", "1e-3"])
        .output()
        .unwrap();
    assert_eq!(bad.status.code(), Some(1));
    assert!(String::from_utf8(bad.stdout).unwrap().contains("FAIL"));
}

#[test]
fn check_on_single_action_mdp() {
    let tmp = tempfile::tempdir().unwrap();
    let m = Mdp::new(
        2,
        1,
        vec![0.5, 0.5, 1.0, 0.0],
        phased_reinforce::Table::filled(2, 1, 0.3),
        0.9,
        vec![0.5, 0.5],
    )
    .unwrap();
    m.save(tmp.path().join("one.json")).unwrap();
    let cfg = write_config(
        tmp.path(),
        r#"{"env": {"name": "file", "path": "one.json"}, "episodes": 0}"#,
    );
    let out = bin().arg("check").arg(&cfg).output().unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stdout));
}

#[test]
fn bad_configs_exit_nonzero() {
    let tmp = tempfile::tempdir().unwrap();
    let toml = tmp.path().join("c.toml");
    std::fs::write(&toml, "episodes = 3\n").unwrap();
    let out = bin().arg("run").arg(&toml).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8(out.stderr).unwrap().contains("JSON"));

    let missing = write_config(
        tmp.path(),
        r#"{"env": {"name": "file", "path": "nope.json"}, "episodes": 3}"#,
    );
    assert_eq!(bin().arg("run").arg(&missing).output().unwrap().status.code(), Some(2));
}
