use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use ppc_core::experiments::ExperimentConfig;

fn ppc(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ppc"))
        .args(args)
        .current_dir(dir)
        .env_remove("PPC_OUT_DIR")
        .output()
        .expect("spawn ppc")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

/// CSV text with every timing column removed; timings are the only
/// output that legitimately differs between identical runs.
fn without_timing(text: &str) -> String {
    let mut rows = text.lines().map(|l| l.split(',').collect::<Vec<_>>());
    let header = rows.next().unwrap_or_default();
    let keep: Vec<usize> = (0..header.len()).filter(|&i| !header[i].ends_with("_ns")).collect();
    std::iter::once(header)
        .chain(rows)
        .map(|r| keep.iter().map(|&i| r[i]).collect::<Vec<_>>().join(","))
        .collect::<Vec<_>>()
        .join("\n")
}

#[test]
fn show_config_without_arguments_prints_defaults() {
    let dir = tempfile::tempdir().unwrap();
    let o = ppc(&["show-config"], dir.path());
    assert!(o.status.success());
    assert_eq!(stdout(&o), ExperimentConfig::default().to_text());
}

#[test]
fn flags_override_file_values() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("run.cfg"), "horizon = 40\nplanner.inner_steps = 7 # comment\n").unwrap();
    let o = ppc(&["show-config", "--config", "run.cfg", "--T", "25", "--seeds", "2", "--seed", "5"], dir.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let text = stdout(&o);
    assert!(text.contains("horizon = 25\n"));
    assert!(text.contains("planner.inner_steps = 7\n"));
    assert!(text.contains("seeds = 5,6\n"));
}

#[test]
fn unknown_key_exits_2_and_names_it() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("bad.cfg"), "horizon = 40\nplanner.stifness = 3\n").unwrap();
    let o = ppc(&["validate-config", "bad.cfg"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("planner.stifness"));
    assert!(stderr(&o).contains("bad.cfg:2"));

    let o = ppc(&["run", "exp1", "--set", "nope=1"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("nope"));
}

#[test]
fn zero_horizon_and_bad_target_are_config_errors() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(ppc(&["run", "exp1", "--T", "0"], dir.path()).status.code(), Some(2));
    assert_eq!(ppc(&["run", "exp7"], dir.path()).status.code(), Some(2));
    assert_eq!(ppc(&["run", "exp1", "--controllers", "ppc,mpc"], dir.path()).status.code(), Some(2));
    fs::write(dir.path().join("ok.cfg"), "horizon = 40\n").unwrap();
    assert_eq!(ppc(&["validate-config", "ok.cfg"], dir.path()).status.code(), Some(0));
}

#[test]
fn checks_pass_on_a_correct_build() {
    let dir = tempfile::tempdir().unwrap();
    let o = ppc(&["run", "checks", "--out", "out"], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let records = fs::read_to_string(dir.path().join("out/checks.txt")).unwrap();
    assert!(records.lines().count() > 20);
    assert!(records.lines().all(|l| l.starts_with("ok ")));
    assert!(dir.path().join("out/manifest.txt").exists());
}

#[test]
fn stiffness_sweep_writes_seven_beta_rows() {
    let dir = tempfile::tempdir().unwrap();
    let o = ppc(&["run", "exp2", "--seeds", "1", "--T", "200", "--out", "out"], dir.path());
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(stdout(&o).lines().count(), 1);
    let summary = fs::read_to_string(dir.path().join("out/exp2/summary.csv")).unwrap();
    let betas: Vec<&str> = summary.lines().skip(1).filter(|l| l.contains(",beta_multiple,")).collect();
    assert_eq!(betas.len(), 7);
    let manifest = fs::read_to_string(dir.path().join("out/manifest.txt")).unwrap();
    assert!(manifest.contains("status = complete"));
    assert!(manifest.contains("horizon = 200"));
}

#[test]
fn out_dir_from_environment_and_reruns_match() {
    let dir = tempfile::tempdir().unwrap();
    let args = ["run", "exp6", "--T", "60", "--seeds", "1", "--seed", "3", "--controllers", "ppc_context"];
    for sub in ["a", "b"] {
        let o = Command::new(env!("CARGO_BIN_EXE_ppc"))
            .args(args)
            .current_dir(dir.path())
            .env("PPC_OUT_DIR", dir.path().join(sub))
            .output()
            .unwrap();
        assert!(o.status.success(), "{}", stderr(&o));
    }
    for file in ["exp6/summary.csv", "exp6/ppc_context/3.csv", "exp6/oracle/3.csv"] {
        let a = fs::read_to_string(dir.path().join("a").join(file)).unwrap();
        let b = fs::read_to_string(dir.path().join("b").join(file)).unwrap();
        assert_eq!(without_timing(&a), without_timing(&b), "{file}");
    }
    assert!(!dir.path().join("a/exp6/ppc_marginal").exists());
    let manifest_a = fs::read_to_string(dir.path().join("a/manifest.txt")).unwrap();
    assert_eq!(manifest_a, fs::read_to_string(dir.path().join("b/manifest.txt")).unwrap());
}
