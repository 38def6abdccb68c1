use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn adbudget(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_adbudget"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

const STOCHASTIC: &str = "\
# quick tournament
horizon = 40
periods = 3
trials = 3
seed = 17
market.family = uniform
market.lo = 1
market.hi = 12
policies = gpl, lueker, fps, qlearn, smoothing
policy.fixed_price_search.gamma = 0.2
";

#[test]
fn run_writes_reports() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("exp.cfg");
    fs::write(&cfg, STOCHASTIC).unwrap();
    let out = dir.path().join("out");
    let res = adbudget(&["run", path(&cfg), "--out", path(&out)]);
    assert!(
        res.status.success(),
        "{}",
        String::from_utf8_lossy(&res.stderr)
    );

    let summary = fs::read_to_string(out.join("summary.csv")).unwrap();
    let lines: Vec<&str> = summary.lines().collect();
    assert_eq!(lines[0], "policy,mean_ratio,std");
    assert_eq!(lines.len(), 6);
    assert!(lines[1].starts_with("greedy_product_limit,"));

    let curves = fs::read_to_string(out.join("curves.csv")).unwrap();
    assert!(curves.starts_with("policy,period,auction,cumulative_clicks,normalized\n"));
    // five policies plus the offline reference, 3 periods of 40 auctions each
    assert_eq!(curves.lines().count(), 1 + 6 * 120);
    assert!(!curves.contains('\r'));

    let echo = fs::read_to_string(out.join("config.echo")).unwrap();
    assert!(echo.contains("policy.fixed_price_search.gamma = 0.2"));
    assert!(echo.contains("policy.q_learning.epsilon_decay = 0.995"));
    assert!(echo.contains("budget_fraction = 0.1"));
}

#[test]
fn echo_reproduces_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("exp.cfg");
    fs::write(&cfg, STOCHASTIC).unwrap();
    let first = dir.path().join("first");
    let second = dir.path().join("second");
    assert!(
        adbudget(&["run", path(&cfg), "--out", path(&first), "--seed", "5"])
            .status
            .success()
    );
    let echo = first.join("config.echo");
    assert!(adbudget(&["run", path(&echo), "--out", path(&second)])
        .status
        .success());
    for name in [
        "summary.csv",
        "curves.csv",
        "periods.csv",
        "ttest.csv",
        "metadata.txt",
        "config.echo",
    ] {
        assert_eq!(
            fs::read(first.join(name)).unwrap(),
            fs::read(second.join(name)).unwrap(),
            "{name}"
        );
    }
    assert!(fs::read_to_string(echo).unwrap().contains("seed = 5"));
}

#[test]
fn replay_from_synthetic_file() {
    let dir = tempfile::tempdir().unwrap();
    let log = dir.path().join("log.csv");
    let res = adbudget(&[
        "synth-replay",
        "--out",
        path(&log),
        "--len",
        "450",
        "--seed",
        "3",
        "--ctr",
        "0.8",
    ]);
    assert!(
        res.status.success(),
        "{}",
        String::from_utf8_lossy(&res.stderr)
    );
    let cfg = dir.path().join("replay.cfg");
    fs::write(
        &cfg,
        "mode = replay\nmarket.replay = log.csv\nhorizon = 100\nperiods = 5\ntrials = 1\npolicies = gpl, lueker\n",
    )
    .unwrap();
    let out = dir.path().join("out");
    let res = adbudget(&["run", path(&cfg), "--out", path(&out)]);
    assert!(
        res.status.success(),
        "{}",
        String::from_utf8_lossy(&res.stderr)
    );
    assert!(String::from_utf8_lossy(&res.stdout).contains("truncated"));
    let meta = fs::read_to_string(out.join("metadata.txt")).unwrap();
    assert!(meta.contains("truncated = true"));
    assert!(meta.contains("reference_kind = offline_optimal_per_period_sum"));
    let periods = fs::read_to_string(out.join("periods.csv")).unwrap();
    assert_eq!(
        periods
            .lines()
            .filter(|l| l.starts_with("greedy_product_limit,"))
            .count(),
        5
    );
}

#[test]
fn config_errors_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.cfg");
    fs::write(&cfg, STOCHASTIC.replace("qlearn", "deep_rl")).unwrap();
    let out = dir.path().join("out");
    let res = adbudget(&["run", path(&cfg), "--out", path(&out)]);
    assert_eq!(res.status.code(), Some(1));
    let err = String::from_utf8_lossy(&res.stderr);
    assert!(
        err.contains("deep_rl") && err.contains("greedy_product_limit"),
        "{err}"
    );
    assert!(!out.exists());

    let res = adbudget(&["run", path(&dir.path().join("missing.cfg"))]);
    assert_eq!(res.status.code(), Some(1));

    fs::write(&cfg, STOCHASTIC).unwrap();
    let res = adbudget(&["run", path(&cfg), "--trials", "0", "--out", path(&out)]);
    assert_eq!(res.status.code(), Some(1));
}

#[test]
fn unwritable_output_exits_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("exp.cfg");
    fs::write(&cfg, STOCHASTIC.replace("trials = 3", "trials = 1")).unwrap();
    let blocker = dir.path().join("file");
    fs::write(&blocker, "not a directory").unwrap();
    let res = adbudget(&["run", path(&cfg), "--out", path(&blocker.join("out"))]);
    assert_eq!(res.status.code(), Some(2));
}
