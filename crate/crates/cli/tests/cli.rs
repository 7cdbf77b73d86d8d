use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn bapg(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bapg")).args(args).env_remove("GW_SEED").output().unwrap()
}

fn bapg_in(out: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bapg")).args(args).arg("--out").arg(out).env_remove("GW_SEED").output().unwrap()
}

fn report(out: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(out.join("report.json")).unwrap()).unwrap()
}

#[test]
fn align_smoke() {
    let tmp = tempfile::tempdir().unwrap();
    let out = bapg_in(tmp.path(), &["align", "--n", "30", "--k", "3", "--seed", "4"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let r = report(tmp.path());
    assert_eq!(r["command"], "align");
    assert_eq!(r["schema"], 1);
    let run = &r["runs"][0];
    assert_eq!(run["seed"], 4);
    let acc = run["metrics"]["accuracy"].as_f64().unwrap();
    assert!((0.0..=100.0).contains(&acc));
    assert!(run["metrics"]["infeasibility"].as_f64().unwrap() >= 0.0);
    let trace = run["files"]["trace"].as_str().unwrap();
    let text = std::fs::read_to_string(tmp.path().join(trace)).unwrap();
    assert!(text.starts_with("iter,objective,potential,infeasibility"));
}

#[test]
fn align_from_files() {
    let tmp = tempfile::tempdir().unwrap();
    let src = tmp.path().join("s.txt");
    std::fs::write(&src, "0 1\n1 2\n2 3\n3 0\n0 2\n").unwrap();
    let out = bapg_in(
        &tmp.path().join("o"),
        &["align", "--source", src.to_str().unwrap(), "--target", src.to_str().unwrap()],
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(report(&tmp.path().join("o"))["runs"][0]["metrics"]["accuracy"].is_number());

    let bad = tmp.path().join("bad.txt");
    std::fs::write(&bad, "0 1\n1 x\n").unwrap();
    let out = bapg_in(&tmp.path().join("o2"), &["align", "--source", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 2"));
}

#[test]
fn partition_reports_ami_and_rho() {
    let tmp = tempfile::tempdir().unwrap();
    let out = bapg_in(tmp.path(), &["partition", "--n", "30", "--seed", "1"]);
    assert!(out.status.success());
    let m = &report(tmp.path())["runs"][0]["metrics"];
    assert!(m["ami"].as_f64().unwrap() <= 1.0);
    assert!(m["selected_rho"].is_number());
    assert!(report(tmp.path())["config"]["rho"].is_null());
}

#[test]
fn sweep_csv_has_slope() {
    let tmp = tempfile::tempdir().unwrap();
    let out = bapg_in(
        tmp.path(),
        &["sweep-rho", "--n-source", "8", "--n-target", "9", "--rhos", "0.5,1,2", "--max-iter", "200"],
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let r = report(tmp.path());
    let csv = r["runs"][0]["files"]["sweep"].as_str().unwrap();
    let text = std::fs::read_to_string(tmp.path().join(csv)).unwrap();
    assert!(text.lines().next().unwrap().contains("loglog_slope"));
    assert_eq!(text.lines().count(), 4);
    assert!(r["summary"]["loglog_slope"].is_number());
}

#[test]
fn sweep_rejects_unsorted_rhos() {
    let tmp = tempfile::tempdir().unwrap();
    let out = bapg_in(tmp.path(), &["sweep-rho", "--rhos", "1,0.5,2"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn diagnose_writes_checks() {
    let tmp = tempfile::tempdir().unwrap();
    let out = bapg_in(
        tmp.path(),
        &["diagnose", "--n-source", "8", "--n-target", "9", "--max-iter", "100", "--method", "quad-bapg"],
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let m = &report(tmp.path())["summary"];
    assert_eq!(m["decrease_violations"], 0);
    assert!(m["lt_residual"].is_number());
    assert!(m["fixed_point_residual"].is_number());
    assert_eq!(m["asym_error_plateaus"], true);
}

#[test]
fn diagnose_rejects_non_bapg_methods() {
    let tmp = tempfile::tempdir().unwrap();
    assert_eq!(bapg_in(tmp.path(), &["diagnose", "--method", "bpg"]).status.code(), Some(2));
}

#[test]
fn usage_errors_exit_2() {
    assert_eq!(bapg(&["align", "--no-such-flag"]).status.code(), Some(2));
    assert_eq!(bapg(&["frobnicate"]).status.code(), Some(2));
    let tmp = tempfile::tempdir().unwrap();
    assert_eq!(bapg_in(tmp.path(), &["align", "--method", "newton"]).status.code(), Some(2));
    assert_eq!(bapg_in(tmp.path(), &["align", "--rho", "-1"]).status.code(), Some(2));
}

#[test]
fn config_file_rejects_unknown_keys() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("run.conf");
    std::fs::write(&cfg, "rho = 0.2\nrhoo = 0.3\n").unwrap();
    let out = bapg_in(&tmp.path().join("o"), &["align", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("rhoo"));
}

#[test]
fn flags_override_config_which_overrides_env() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("run.conf");
    std::fs::write(&cfg, "# settings\nrho = 0.2\nmax_iter = 50\nseed = 3\nn = 20\n").unwrap();
    let out_dir = tmp.path().join("o");
    let run = |extra: &[&str], env_seed: Option<&str>| {
        let mut cmd = Command::new(env!("CARGO_BIN_EXE_bapg"));
        cmd.args(["align", "--config", cfg.to_str().unwrap()]).args(extra).arg("--out").arg(&out_dir);
        match env_seed {
            Some(s) => cmd.env("GW_SEED", s),
            None => cmd.env_remove("GW_SEED"),
        };
        assert!(cmd.output().unwrap().status.success());
        report(&out_dir)["config"].clone()
    };
    let c = run(&["--rho", "0.3"], Some("9"));
    assert_eq!(c["rho"], 0.3);
    assert_eq!(c["max_iter"], 50);
    assert_eq!(c["seeds"], serde_json::json!([3]));
    let c = run(&["--seeds", "5,6"], None);
    assert_eq!(c["seeds"], serde_json::json!([5, 6]));
    assert_eq!(report(&out_dir)["runs"].as_array().unwrap().len(), 2);

    std::fs::write(&cfg, "n = 20\nmax-iter = 50\n").unwrap();
    assert_eq!(run(&[], Some("9"))["seeds"], serde_json::json!([9]));
    assert_eq!(run(&[], None)["seeds"], serde_json::json!([0]));
}

#[test]
fn strict_mode_exits_3_when_a_run_hits_the_cap() {
    let tmp = tempfile::tempdir().unwrap();
    let out = bapg_in(tmp.path(), &["toy2d", "--n-source", "10", "--n-target", "12", "--max-iter", "2", "--strict"]);
    assert_eq!(out.status.code(), Some(3));
    assert_eq!(report(tmp.path())["converged"], false);
    let out = bapg_in(tmp.path(), &["toy2d", "--n-source", "10", "--n-target", "12", "--max-iter", "2"]);
    assert!(out.status.success());
}

#[test]
fn self_test_passes_and_validates_rho() {
    let out = bapg(&["self-test"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stdout));
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert_eq!(stdout.lines().filter(|l| l.starts_with("PASS")).count(), 3);
    assert_eq!(bapg(&["self-test", "--rho", "-1"]).status.code(), Some(2));
}

#[test]
fn reports_are_deterministic() {
    let tmp = tempfile::tempdir().unwrap();
    let strip = |dir: &Path| {
        let text = std::fs::read_to_string(dir.join("report.json")).unwrap();
        text.lines().filter(|l| !l.contains("\"wall_clock_seconds\"")).collect::<Vec<_>>().join("\n")
    };
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    for dir in [&a, &b] {
        assert!(bapg_in(dir, &["toy2d", "--n-source", "12", "--n-target", "15", "--seed", "2"]).status.success());
    }
    assert_eq!(strip(&a), strip(&b));
    assert_eq!(
        std::fs::read(a.join("coupling_seed2.csv")).unwrap(),
        std::fs::read(b.join("coupling_seed2.csv")).unwrap()
    );
}
